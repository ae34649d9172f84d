#include "lscl/types.hpp"

#include <algorithm>
#include <cmath>

#include "lscl/error.hpp"

namespace lscl {

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "train";
}

Split split_from_string(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "validation" || text == "valid" || text == "dev") return Split::Validation;
    if (text == "test") return Split::Test;
    throw ValidationError("unknown split '" + std::string(text) + "'");
}

std::string_view to_string(KnowledgeLabel label) {
    switch (label) {
        case KnowledgeLabel::Know: return "Know";
        case KnowledgeLabel::Sciolism: return "Sciolism";
        case KnowledgeLabel::Unknow: return "Unknow";
    }
    return "Unknow";
}

KnowledgeLabel label_from_string(std::string_view text) {
    if (text == "Know") return KnowledgeLabel::Know;
    if (text == "Sciolism") return KnowledgeLabel::Sciolism;
    if (text == "Unknow") return KnowledgeLabel::Unknow;
    throw ValidationError("unknown knowledge label '" + std::string(text) + "'");
}

void validate(const QASample& sample) {
    if (sample.id.empty()) throw ValidationError("sample with empty id");
    if (sample.options.empty()) {
        if (sample.gold_answer != "true" && sample.gold_answer != "false") {
            throw ValidationError("sample '" + sample.id +
                                  "': true/false item needs gold_answer \"true\" or \"false\"");
        }
        return;
    }
    const bool found = std::any_of(sample.options.begin(), sample.options.end(),
                                   [&](const AnswerOption& o) { return o.key == sample.gold_answer; });
    if (!found) {
        throw ValidationError("sample '" + sample.id + "': gold_answer \"" + sample.gold_answer +
                              "\" is not an option key");
    }
}

bool LLMResponse::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

void LLMResponse::add_flag(std::string flag) {
    if (!has_flag(flag)) flags.push_back(std::move(flag));
}

namespace {
bool in_unit(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }
}  // namespace

void validate(const LLMResponse& response) {
    for (double p : response.token_probs) {
        if (!in_unit(p)) throw ValidationError("response '" + response.sample_id + "': token probability out of [0,1]");
    }
    if (response.aggregate_prob && !in_unit(*response.aggregate_prob)) {
        throw ValidationError("response '" + response.sample_id + "': aggregate_prob out of [0,1]");
    }
    if (response.verbalized_confidence && !in_unit(*response.verbalized_confidence)) {
        throw ValidationError("response '" + response.sample_id + "': verbalized_confidence out of [0,1]");
    }
}

double probability_input(const ConfidenceRecord& record) {
    return record.response.aggregate_prob.value_or(0.5);
}

}  // namespace lscl
