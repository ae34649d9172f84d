#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscl/types.hpp"

namespace lscl {

struct LabelingPolicy {
    int num_bins = 10;
    double know_accuracy_cutoff = 0.90;    // bin accuracy must exceed this for Know
    double unknow_accuracy_cutoff = 0.20;  // bin accuracy below this gives Unknow

    void validate() const;
};

struct AugmentationPolicy {
    int num_bins = 10;
    int neighbor_count = 5;
    double singleton_jitter = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const LabelingPolicy& policy);
LabelingPolicy labeling_policy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AugmentationPolicy& policy);
AugmentationPolicy augmentation_policy_from_json(const nlohmann::json& j);

/// Equal-width bin of a probability: [k/n, (k+1)/n), last bin closed at 1.
int bin_index(double value, int num_bins);

/// True iff the normalized extracted answer equals the normalized gold answer.
/// Never throws; a response with no extractable answer is judged incorrect
/// and flagged "answer_unextractable".
bool judge_correctness(LLMResponse& response, const QASample& sample);

/// Correctness-adjusted token probability. Throws ValidationError when
/// `aggregate_prob` is outside [0, 1].
double compute_catp(double aggregate_prob, bool is_correct);

/// Builds records from paired samples and responses: judges correctness and
/// sets catp from probability_input().
std::vector<ConfidenceRecord> make_records(std::span<const QASample> samples,
                                           std::span<const LLMResponse> responses);

struct BinStats {
    std::size_t count = 0;
    std::size_t correct = 0;
    double accuracy() const { return count ? static_cast<double>(correct) / count : 0.0; }
};

std::vector<BinStats> bin_statistics(std::span<const ConfidenceRecord> records, int num_bins);

/// Labels every record from the answer accuracy of its catp bin.
std::vector<ConfidenceRecord> assign_knowledge_labels(std::vector<ConfidenceRecord> records,
                                                      const LabelingPolicy& policy);

using FeatureFn = std::function<std::vector<double>(const ConfidenceRecord&)>;

struct OversampleSummary {
    std::vector<std::size_t> counts_before;
    std::vector<std::size_t> counts_after;
    std::size_t target = 0;
    std::size_t singleton_bins = 0;
};

/// SMOTE-style oversampling over catp bins. Bins holding fewer records than
/// the median non-empty bin count are raised to that median with synthetic
/// records interpolated between a record and one of its nearest same-bin
/// neighbours. Synthetic records carry the interpolated feature vector in
/// `features`; originals are passed through unchanged and come first.
std::vector<ConfidenceRecord> oversample_bins(std::span<const ConfidenceRecord> records,
                                              const AugmentationPolicy& policy,
                                              const FeatureFn& feature_fn,
                                              OversampleSummary* summary = nullptr);

}  // namespace lscl
