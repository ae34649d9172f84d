#include "lscl/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "lscl/error.hpp"
#include "lscl/prompts.hpp"
#include "lscl/random.hpp"
#include "lscl/text.hpp"

namespace lscl {

using nlohmann::json;

void LabelingPolicy::validate() const {
    if (num_bins < 1) throw ConfigError("labeling: num_bins must be positive");
    if (!(know_accuracy_cutoff > 0.0 && know_accuracy_cutoff <= 1.0)) {
        throw ConfigError("labeling: know_accuracy_cutoff must lie in (0, 1]");
    }
    if (!(unknow_accuracy_cutoff >= 0.0 && unknow_accuracy_cutoff < 1.0)) {
        throw ConfigError("labeling: unknow_accuracy_cutoff must lie in [0, 1)");
    }
    if (!(unknow_accuracy_cutoff < know_accuracy_cutoff)) {
        throw ConfigError("labeling: unknow_accuracy_cutoff must be below know_accuracy_cutoff");
    }
}

void AugmentationPolicy::validate() const {
    if (num_bins < 1) throw ConfigError("augmentation: num_bins must be positive");
    if (neighbor_count < 1) throw ConfigError("augmentation: neighbor_count must be >= 1");
    if (!(singleton_jitter >= 0.0)) throw ConfigError("augmentation: singleton_jitter must be >= 0");
}

json to_json(const LabelingPolicy& p) {
    return json{{"num_bins", p.num_bins},
                {"know_accuracy_cutoff", p.know_accuracy_cutoff},
                {"unknow_accuracy_cutoff", p.unknow_accuracy_cutoff}};
}

LabelingPolicy labeling_policy_from_json(const json& j) {
    LabelingPolicy p;
    p.num_bins = j.value("num_bins", p.num_bins);
    p.know_accuracy_cutoff = j.value("know_accuracy_cutoff", p.know_accuracy_cutoff);
    p.unknow_accuracy_cutoff = j.value("unknow_accuracy_cutoff", p.unknow_accuracy_cutoff);
    p.validate();
    return p;
}

json to_json(const AugmentationPolicy& p) {
    return json{{"num_bins", p.num_bins},
                {"target", "median"},
                {"neighbor_count", p.neighbor_count},
                {"singleton_jitter", p.singleton_jitter},
                {"seed", p.seed}};
}

AugmentationPolicy augmentation_policy_from_json(const json& j) {
    AugmentationPolicy p;
    p.num_bins = j.value("num_bins", p.num_bins);
    p.neighbor_count = j.value("neighbor_count", p.neighbor_count);
    p.singleton_jitter = j.value("singleton_jitter", p.singleton_jitter);
    p.seed = j.value("seed", p.seed);
    if (j.value("target", std::string("median")) != "median") throw ConfigError("augmentation: only target=median is supported");
    p.validate();
    return p;
}

int bin_index(double value, int num_bins) {
    if (!(value >= 0.0)) return 0;
    const auto k = static_cast<int>(std::floor(value * num_bins));
    return std::clamp(k, 0, num_bins - 1);
}

bool judge_correctness(LLMResponse& response, const QASample& sample) {
    std::string answer = response.extracted_answer;
    if (answer.empty()) answer = extract_answer(response.answer_text, sample);
    if (answer.empty()) {
        response.add_flag("answer_unextractable");
        return false;
    }
    if (sample.gold_answer.empty()) return false;
    return text::normalize_answer(answer) == text::normalize_answer(sample.gold_answer);
}

double compute_catp(double aggregate_prob, bool is_correct) {
    if (!(aggregate_prob >= 0.0 && aggregate_prob <= 1.0)) {
        throw ValidationError("compute_catp: probability " + std::to_string(aggregate_prob) + " outside [0,1]");
    }
    return is_correct ? aggregate_prob : 1.0 - aggregate_prob;
}

std::vector<ConfidenceRecord> make_records(std::span<const QASample> samples, std::span<const LLMResponse> responses) {
    if (samples.size() != responses.size()) throw ValidationError("make_records: samples and responses differ in length");
    std::vector<ConfidenceRecord> records;
    records.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].id != responses[i].sample_id) {
            throw ValidationError("make_records: response for '" + responses[i].sample_id + "' paired with sample '" +
                                  samples[i].id + "'");
        }
        ConfidenceRecord r;
        r.sample = samples[i];
        r.response = responses[i];
        r.is_correct = judge_correctness(r.response, r.sample);
        r.catp = compute_catp(probability_input(r), r.is_correct);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<BinStats> bin_statistics(std::span<const ConfidenceRecord> records, int num_bins) {
    std::vector<BinStats> bins(static_cast<std::size_t>(num_bins));
    for (const auto& r : records) {
        auto& b = bins[static_cast<std::size_t>(bin_index(r.catp, num_bins))];
        ++b.count;
        if (r.is_correct) ++b.correct;
    }
    return bins;
}

std::vector<ConfidenceRecord> assign_knowledge_labels(std::vector<ConfidenceRecord> records, const LabelingPolicy& policy) {
    policy.validate();
    if (records.empty()) throw ValidationError("assign_knowledge_labels: no records");
    const auto bins = bin_statistics(records, policy.num_bins);
    std::vector<KnowledgeLabel> bin_label(bins.size(), KnowledgeLabel::Sciolism);
    for (std::size_t k = 0; k < bins.size(); ++k) {
        const double acc = bins[k].accuracy();
        if (acc > policy.know_accuracy_cutoff) {
            bin_label[k] = KnowledgeLabel::Know;
        } else if (acc < policy.unknow_accuracy_cutoff) {
            bin_label[k] = KnowledgeLabel::Unknow;
        }
    }
    for (auto& r : records) r.label = bin_label[static_cast<std::size_t>(bin_index(r.catp, policy.num_bins))];
    return records;
}

namespace {

double clamp_to_bin(double value, int bin, int num_bins) {
    const double lo = static_cast<double>(bin) / num_bins;
    const double hi = static_cast<double>(bin + 1) / num_bins;
    double v = std::clamp(value, lo, hi);
    while (bin_index(v, num_bins) > bin) v = std::nextafter(v, 0.0);
    while (bin_index(v, num_bins) < bin) v = std::nextafter(v, 1.0);
    return v;
}

std::size_t median_count(std::vector<std::size_t> counts) {
    std::sort(counts.begin(), counts.end());
    const std::size_t n = counts.size();
    if (n % 2 == 1) return counts[n / 2];
    const std::size_t sum = counts[n / 2 - 1] + counts[n / 2];
    return (sum + 1) / 2;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - b[i];
        d += x * x;
    }
    return d;
}

}  // namespace

std::vector<ConfidenceRecord> oversample_bins(std::span<const ConfidenceRecord> records, const AugmentationPolicy& policy,
                                              const FeatureFn& feature_fn, OversampleSummary* summary) {
    policy.validate();
    const int n_bins = policy.num_bins;
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_bins));
    for (std::size_t i = 0; i < records.size(); ++i) {
        members[static_cast<std::size_t>(bin_index(records[i].catp, n_bins))].push_back(i);
    }
    std::vector<std::size_t> counts_before;
    std::vector<std::size_t> non_empty;
    for (const auto& m : members) {
        counts_before.push_back(m.size());
        if (!m.empty()) non_empty.push_back(m.size());
    }

    std::vector<ConfidenceRecord> out(records.begin(), records.end());
    OversampleSummary local;
    local.counts_before = counts_before;
    local.counts_after = counts_before;
    if (non_empty.empty()) {
        if (summary) *summary = local;
        return out;
    }
    const std::size_t target = median_count(non_empty);
    local.target = target;

    Rng rng(splitmix64(policy.seed ^ 0x5A0E5A0EULL));
    std::size_t synthetic_id = 0;
    for (int bin = 0; bin < n_bins; ++bin) {
        const auto& idx = members[static_cast<std::size_t>(bin)];
        if (idx.empty() || idx.size() >= target) continue;
        const std::size_t need = target - idx.size();

        std::vector<std::vector<double>> feats;
        feats.reserve(idx.size());
        for (auto i : idx) feats.push_back(feature_fn(records[i]));
        for (const auto& f : feats) {
            if (f.size() != feats.front().size()) throw ValidationError("oversample_bins: feature vectors differ in length");
        }

        // k nearest same-bin neighbours of each member, nearest first.
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(policy.neighbor_count), idx.size() - 1);
        std::vector<std::vector<std::size_t>> neighbours(idx.size());
        for (std::size_t a = 0; a < idx.size() && k > 0; ++a) {
            std::vector<std::pair<double, std::size_t>> dist;
            for (std::size_t b = 0; b < idx.size(); ++b) {
                if (b != a) dist.emplace_back(squared_distance(feats[a], feats[b]), b);
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
            for (std::size_t j = 0; j < k; ++j) neighbours[a].push_back(dist[j].second);
        }
        if (idx.size() == 1) {
            ++local.singleton_bins;
            spdlog::warn("oversample: bin {} holds a single record; duplicating it with jitter {}", bin,
                         policy.singleton_jitter);
        }

        for (std::size_t s = 0; s < need; ++s) {
            const std::size_t a = static_cast<std::size_t>(rng.below(idx.size()));
            const ConfidenceRecord& base = records[idx[a]];
            ConfidenceRecord syn = base;
            syn.synthetic = true;
            syn.sample.id = base.sample.id + "#syn" + std::to_string(++synthetic_id);
            syn.predicted_confidence.reset();
            syn.predicted_label.reset();
            if (k == 0) {
                syn.features = feats[a];
                for (auto& x : syn.features) x += policy.singleton_jitter * rng.normal();
                syn.catp = clamp_to_bin(base.catp, bin, n_bins);
            } else {
                const std::size_t b = neighbours[a][static_cast<std::size_t>(rng.below(k))];
                const double u = rng.uniform_open();
                syn.features.resize(feats[a].size());
                for (std::size_t d = 0; d < feats[a].size(); ++d) syn.features[d] = feats[a][d] + u * (feats[b][d] - feats[a][d]);
                const double c_nn = records[idx[b]].catp;
                syn.catp = clamp_to_bin(base.catp + u * (c_nn - base.catp), bin, n_bins);
            }
            out.push_back(std::move(syn));
        }
        local.counts_after[static_cast<std::size_t>(bin)] = target;
    }
    if (summary) *summary = local;
    return out;
}

}  // namespace lscl
