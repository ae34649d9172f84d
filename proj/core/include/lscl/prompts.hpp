#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "lscl/types.hpp"

namespace lscl {

enum class TemplateName { GuidingByPrompt, TokenProbs, PriorPrompt, PosteriorPrompt, PromptGuidedLscl };

enum class OutputParser { OptionLetter, YesNo, ConfidentUnconfident, AnswerPlusConfidence };

std::string_view to_string(TemplateName name);
TemplateName template_name_from_string(std::string_view text);

/// A prompt with {question}, {option X}, {options} and {answer} placeholders.
///
/// {question} binds to the question stem. When the template text carries no
/// option placeholder, the sample's options are appended to the stem so the
/// model can still see them.
struct PromptTemplate {
    TemplateName name = TemplateName::TokenProbs;
    std::string text;
    OutputParser parser = OutputParser::OptionLetter;
    bool requires_logprobs = false;
};

/// The built-in prompts used by the baselines and the pipeline.
const PromptTemplate& builtin_template(TemplateName name);

/// Substitutes placeholders. Throws ValidationError when a placeholder cannot
/// be bound from the sample (e.g. {option E} on a four-option item, or
/// {answer} without an answer).
std::string render(const PromptTemplate& tmpl, const QASample& sample, std::string_view answer = {});

/// Option key (or "true"/"false" for true/false items) found in free text, or
/// empty. Prefers the first standalone upper-case key, then falls back to a
/// case-insensitive scan.
std::string extract_answer(std::string_view text, const QASample& sample);

/// Reads a verbalized confidence such as "85%" or "0.85" into [0, 1].
std::optional<double> parse_verbalized_confidence(std::string_view text);

enum class BinaryVerdict { Positive, Negative, Unparsed };

/// "Yes"/"No" (prior prompt).
BinaryVerdict parse_yes_no(std::string_view text);

/// "Confident"/"Unconfident" (posterior prompt).
BinaryVerdict parse_confident(std::string_view text);

}  // namespace lscl
