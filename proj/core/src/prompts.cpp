#include "lscl/prompts.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "lscl/error.hpp"
#include "lscl/text.hpp"

namespace lscl {

std::string_view to_string(TemplateName name) {
    switch (name) {
        case TemplateName::GuidingByPrompt: return "guiding_by_prompt";
        case TemplateName::TokenProbs: return "token_probs";
        case TemplateName::PriorPrompt: return "prior_prompt";
        case TemplateName::PosteriorPrompt: return "posterior_prompt";
        case TemplateName::PromptGuidedLscl: return "prompt_guided_lscl";
    }
    return "token_probs";
}

TemplateName template_name_from_string(std::string_view text) {
    for (auto name : {TemplateName::GuidingByPrompt, TemplateName::TokenProbs, TemplateName::PriorPrompt,
                      TemplateName::PosteriorPrompt, TemplateName::PromptGuidedLscl}) {
        if (to_string(name) == text) return name;
    }
    throw ConfigError("unknown prompt template '" + std::string(text) + "'");
}

const PromptTemplate& builtin_template(TemplateName name) {
    static const std::array<PromptTemplate, 5> kTemplates = {{
        {TemplateName::GuidingByPrompt,
         "Q: {question} Please answer this question and provide your confidence level.",
         OutputParser::AnswerPlusConfidence, false},
        {TemplateName::TokenProbs,
         "Q: {question} Select the most appropriate answer from the following options: {options}.",
         OutputParser::OptionLetter, true},
        {TemplateName::PriorPrompt,
         "Do you honestly know the answer to the following question? If you know, output 'Yes'; otherwise, "
         "output 'No'. Respond with only a single word: 'Yes' or 'No'. Q: {question}",
         OutputParser::YesNo, false},
        {TemplateName::PosteriorPrompt,
         "Are you confident that the answer to the following question is correct? Q: {question} A: {answer} "
         "If confident, output 'Confident'; otherwise, output 'Unconfident'. Respond with only a single word: "
         "'Confident' or 'Unconfident'.",
         OutputParser::ConfidentUnconfident, false},
        {TemplateName::PromptGuidedLscl, "Q: {question} Please answer and provide your confidence level",
         OutputParser::AnswerPlusConfidence, false},
    }};
    for (const auto& t : kTemplates) {
        if (t.name == name) return t;
    }
    throw ConfigError("no built-in template");
}

namespace {

std::string inline_options(const QASample& sample) {
    if (sample.options.empty()) return "True, False";
    std::string out;
    for (std::size_t i = 0; i < sample.options.size(); ++i) {
        if (i) out += ", ";
        out += sample.options[i].key + "." + sample.options[i].text;
    }
    return out;
}

std::string listed_options(const QASample& sample) {
    std::string out;
    for (const auto& o : sample.options) out += "\n" + o.key + ". " + o.text;
    return out;
}

bool mentions_options(std::string_view tmpl) {
    return tmpl.find("{options}") != std::string_view::npos || tmpl.find("{option ") != std::string_view::npos;
}

bool standalone(std::string_view s, std::size_t pos, std::size_t len) {
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    const bool left = pos == 0 || !alnum(s[pos - 1]);
    const bool right = pos + len >= s.size() || !alnum(s[pos + len]);
    return left && right;
}

std::string extract_boolean(std::string_view raw) {
    static const std::array<std::pair<std::string_view, std::string_view>, 17> kLexicon = {{
        {"true", "true"},   {"yes", "true"},   {"correct", "true"}, {"正确", "true"},  {"对", "true"},
        {"是", "true"},     {"√", "true"},     {"false", "false"},  {"no", "false"},   {"incorrect", "false"},
        {"wrong", "false"}, {"错误", "false"}, {"错", "false"},     {"否", "false"},   {"不对", "false"},
        {"不正确", "false"}, {"×", "false"},
    }};
    const std::string s = text::to_lower_ascii(raw);
    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    std::string_view best;
    for (const auto& [word, value] : kLexicon) {
        const bool ascii = static_cast<unsigned char>(word[0]) < 0x80;
        for (std::size_t pos = s.find(word); pos != std::string::npos; pos = s.find(word, pos + 1)) {
            if (ascii && !standalone(s, pos, word.size())) continue;
            if (pos < best_pos || (pos == best_pos && word.size() > best_len)) {
                best_pos = pos;
                best_len = word.size();
                best = value;
            }
            break;
        }
    }
    return std::string(best);
}

}  // namespace

std::string render(const PromptTemplate& tmpl, const QASample& sample, std::string_view answer) {
    const std::string& t = tmpl.text;
    std::string out;
    out.reserve(t.size() + sample.question.size() + 64);
    std::size_t i = 0;
    while (i < t.size()) {
        if (t[i] != '{') {
            out += t[i++];
            continue;
        }
        const auto close = t.find('}', i);
        if (close == std::string::npos) throw ValidationError("template: unterminated placeholder");
        const std::string name = t.substr(i + 1, close - i - 1);
        if (name == "question") {
            out += sample.question;
            if (!mentions_options(t)) out += listed_options(sample);
        } else if (name == "options") {
            out += inline_options(sample);
        } else if (name == "answer") {
            if (answer.empty()) throw ValidationError("template " + std::string(to_string(tmpl.name)) +
                                                      ": {answer} needs a prior answer for sample '" + sample.id + "'");
            out += answer;
        } else if (name.rfind("option ", 0) == 0) {
            const std::string key = name.substr(7);
            auto it = std::find_if(sample.options.begin(), sample.options.end(),
                                   [&](const AnswerOption& o) { return o.key == key; });
            if (it == sample.options.end()) {
                throw ValidationError("template: sample '" + sample.id + "' has no option " + key);
            }
            out += it->text;
        } else {
            throw ValidationError("template: unknown placeholder {" + name + "}");
        }
        i = close + 1;
    }
    return out;
}

std::string extract_answer(std::string_view text, const QASample& sample) {
    if (sample.options.empty()) return extract_boolean(text);
    for (int pass = 0; pass < 2; ++pass) {
        std::size_t best_pos = std::string::npos;
        std::string best;
        for (const auto& option : sample.options) {
            const std::string key = pass == 0 ? option.key : text::to_lower_ascii(option.key);
            const std::string hay = pass == 0 ? std::string(text) : text::to_lower_ascii(text);
            for (std::size_t pos = hay.find(key); pos != std::string::npos; pos = hay.find(key, pos + 1)) {
                if (!standalone(hay, pos, key.size())) continue;
                if (pos < best_pos) {
                    best_pos = pos;
                    best = text::normalize_answer(option.key);
                }
                break;
            }
        }
        if (!best.empty()) return best;
    }
    return {};
}

std::optional<double> parse_verbalized_confidence(std::string_view text) {
    static const std::regex kPercent(R"((\d{1,3}(?:\.\d+)?)\s*(?:%|％))");
    static const std::regex kDecimal(R"((?:^|[^\d.])(0?\.\d+|1\.0+)(?![\d.]))");
    static const std::regex kBareUnit(R"((?:^|[^\d.])([01])(?![\d.%]))");

    const std::string s(text);
    auto first = [](const std::string& hay, const std::regex& re) -> std::optional<double> {
        std::smatch m;
        if (!std::regex_search(hay, m, re)) return std::nullopt;
        return std::stod(m[1].str());
    };
    auto bounded = [](std::optional<double> v, double scale) -> std::optional<double> {
        if (!v) return std::nullopt;
        const double x = *v / scale;
        if (x < 0.0 || x > 1.0) return std::nullopt;
        return x;
    };

    const std::string lower = text::to_lower_ascii(s);
    std::size_t anchor = std::string::npos;
    for (std::string_view key : {"confiden", "置信", "信心", "把握"}) {
        const auto pos = lower.rfind(key);
        if (pos != std::string::npos && (anchor == std::string::npos || pos > anchor)) anchor = pos;
    }
    if (anchor != std::string::npos) {
        const std::string tail = s.substr(anchor);
        if (auto v = bounded(first(tail, kPercent), 100.0)) return v;
        if (auto v = bounded(first(tail, kDecimal), 1.0)) return v;
        if (auto v = bounded(first(tail, kBareUnit), 1.0)) return v;
    }
    if (auto v = bounded(first(s, kPercent), 100.0)) return v;
    if (auto v = bounded(first(s, kDecimal), 1.0)) return v;
    return std::nullopt;
}

namespace {

std::string verdict_text(std::string_view raw) {
    std::string s = text::to_lower_ascii(text::trim(raw));
    std::size_t b = 0;
    while (b < s.size() && (std::ispunct(static_cast<unsigned char>(s[b])) || std::isspace(static_cast<unsigned char>(s[b])))) ++b;
    return s.substr(b);
}

bool starts_with_word(std::string_view s, std::string_view word) {
    if (s.rfind(word, 0) != 0) return false;
    return s.size() == word.size() || !std::isalpha(static_cast<unsigned char>(s[word.size()]));
}

}  // namespace

BinaryVerdict parse_yes_no(std::string_view text) {
    const std::string s = verdict_text(text);
    if (starts_with_word(s, "yes") || s.rfind("是", 0) == 0 || s.rfind("知道", 0) == 0) return BinaryVerdict::Positive;
    if (starts_with_word(s, "no") || s.rfind("否", 0) == 0 || s.rfind("不知道", 0) == 0) return BinaryVerdict::Negative;
    return BinaryVerdict::Unparsed;
}

BinaryVerdict parse_confident(std::string_view text) {
    const std::string s = verdict_text(text);
    if (starts_with_word(s, "unconfident") || s.rfind("not confident", 0) == 0 || s.rfind("不自信", 0) == 0 ||
        s.rfind("不确定", 0) == 0) {
        return BinaryVerdict::Negative;
    }
    if (starts_with_word(s, "confident") || s.rfind("自信", 0) == 0 || s.rfind("确定", 0) == 0) {
        return BinaryVerdict::Positive;
    }
    return BinaryVerdict::Unparsed;
}

}  // namespace lscl
