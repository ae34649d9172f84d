#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lscl {

enum class Split { Train, Validation, Test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

/// Knowledge-mastery state. Enumerator values follow the reporting order
/// Unknow < Sciolism < Know.
enum class KnowledgeLabel : std::uint8_t { Unknow = 0, Sciolism = 1, Know = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<KnowledgeLabel, kNumLabels> kAllLabels = {
    KnowledgeLabel::Know, KnowledgeLabel::Sciolism, KnowledgeLabel::Unknow};

inline constexpr std::size_t label_index(KnowledgeLabel label) {
    return static_cast<std::size_t>(label);
}

std::string_view to_string(KnowledgeLabel label);
KnowledgeLabel label_from_string(std::string_view text);

struct AnswerOption {
    std::string key;
    std::string text;

    bool operator==(const AnswerOption&) const = default;
};

struct QASample {
    std::string id;
    std::string question;
    std::vector<AnswerOption> options;  // empty for true/false items
    std::string gold_answer;            // option key, or "true"/"false"
    std::string domain_tag;
    Split split = Split::Train;

    bool operator==(const QASample&) const = default;
};

/// Checks the QASample invariants; throws ValidationError.
void validate(const QASample& sample);

struct LLMResponse {
    std::string sample_id;
    std::string model_id;
    std::string template_name;
    std::string answer_text;
    std::string extracted_answer;        // normalized option key, empty when none found
    std::vector<double> token_probs;     // chosen-token probability per generated token
    std::optional<double> aggregate_prob;
    std::optional<double> verbalized_confidence;
    std::vector<std::string> flags;      // e.g. "logprob_unavailable", "confidence_unparsed"
    std::string timestamp;

    bool has_flag(std::string_view flag) const;
    void add_flag(std::string flag);

    bool operator==(const LLMResponse&) const = default;
};

/// Checks the LLMResponse invariants; throws ValidationError.
void validate(const LLMResponse& response);

struct ConfidenceRecord {
    QASample sample;
    LLMResponse response;
    bool is_correct = false;
    double catp = 0.0;
    std::optional<KnowledgeLabel> label;
    std::optional<double> predicted_confidence;
    std::optional<KnowledgeLabel> predicted_label;
    bool synthetic = false;
    /// Interpolated network inputs; only populated for synthetic records.
    std::vector<double> features;

    bool operator==(const ConfidenceRecord&) const = default;
};

/// The token-probability input used for a record: aggregate_prob, or 0.5 when absent.
double probability_input(const ConfidenceRecord& record);

}  // namespace lscl
