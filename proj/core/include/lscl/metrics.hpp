#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscl/types.hpp"

namespace lscl {

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct LabelAccuracy {
    double accuracy_percent = 0.0;
    std::size_t count = 0;
};

/// Rows are truth, columns are prediction, both indexed by label_index().
using ConfusionMatrix = std::array<std::array<std::size_t, kNumLabels>, kNumLabels>;

struct EvalReport {
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    double macro_recall = 0.0;
    std::array<ClassScores, kNumLabels> per_class{};
    ConfusionMatrix confusion{};
    /// Answer accuracy among records grouped by truth label and by predicted label.
    std::array<LabelAccuracy, kNumLabels> answer_accuracy_by_truth{};
    std::array<LabelAccuracy, kNumLabels> answer_accuracy_by_prediction{};
    std::map<std::string, std::string> metadata;

    const ClassScores& scores(KnowledgeLabel label) const { return per_class[label_index(label)]; }
    std::size_t total() const;
};

using LabelPair = std::pair<KnowledgeLabel, KnowledgeLabel>;  // (truth, prediction)

/// Accuracy, per-class precision/recall/F1 (0 on a zero denominator) and the
/// macro means over classes present in the truth labels. Throws on empty input.
EvalReport compute_metrics(std::span<const LabelPair> pairs);

/// Macro-F1 only, from a confusion matrix. Same arithmetic as compute_metrics.
double macro_f1(const ConfusionMatrix& confusion);

/// Fills the answer-accuracy-by-label tallies. `correct[i]` is the
/// answer correctness of the record behind `pairs[i]`.
void tally_answer_accuracy(EvalReport& report, std::span<const LabelPair> pairs,
                           std::span<const bool> correct);

nlohmann::json to_json(const EvalReport& report);

std::string csv_header();
std::string csv_row(const EvalReport& report);

/// Confusion matrix as CSV with Know/Sciolism/Unknow ordering.
std::string confusion_csv(const EvalReport& report);

/// Answer-accuracy-by-label table: one row for truth labels, one for predictions.
std::string answer_accuracy_csv(const EvalReport& report);

}  // namespace lscl
