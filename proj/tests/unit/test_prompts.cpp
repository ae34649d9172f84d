#include <gtest/gtest.h>

#include "lscl/error.hpp"
#include "lscl/prompts.hpp"
#include "lscl/text.hpp"

using namespace lscl;

namespace {

QASample mcq() {
    QASample s;
    s.id = "m1";
    s.question = "Which vitamin is fat-soluble?";
    s.options = {{"A", "vitamin C"}, {"B", "vitamin D"}, {"C", "vitamin B12"}, {"D", "folate"}};
    s.gold_answer = "B";
    return s;
}

QASample true_false() {
    QASample s;
    s.id = "t1";
    s.question = "The liver stores glycogen.";
    s.gold_answer = "true";
    return s;
}

}  // namespace

TEST(Verbalized, ParseRules) {
    EXPECT_NEAR(*parse_verbalized_confidence("Answer: B. Confidence: 85%"), 0.85, 1e-12);
    EXPECT_NEAR(*parse_verbalized_confidence("B (confidence 0.6)"), 0.6, 1e-12);
    EXPECT_FALSE(parse_verbalized_confidence("B, very confident").has_value());
    EXPECT_NEAR(*parse_verbalized_confidence("Confidence: 100%"), 1.0, 1e-12);
}

TEST(Extract, OptionKeysAndBooleans) {
    const auto s = mcq();
    EXPECT_EQ(extract_answer("B", s), "B");
    EXPECT_EQ(extract_answer("The answer is B. Confidence: 80%", s), "B");
    EXPECT_EQ(extract_answer(" b)", s), "B");
    EXPECT_EQ(extract_answer("none of these", s), "");
    const auto tf = true_false();
    EXPECT_EQ(extract_answer("Yes, that is correct", tf), "true");
    EXPECT_EQ(extract_answer("错误", tf), "false");
}

TEST(Verdicts, YesNoAndConfident) {
    EXPECT_EQ(parse_yes_no("Yes"), BinaryVerdict::Positive);
    EXPECT_EQ(parse_yes_no("no."), BinaryVerdict::Negative);
    EXPECT_EQ(parse_yes_no("maybe"), BinaryVerdict::Unparsed);
    EXPECT_EQ(parse_confident("Confident"), BinaryVerdict::Positive);
    EXPECT_EQ(parse_confident("Unconfident"), BinaryVerdict::Negative);
    EXPECT_EQ(parse_confident("hmm"), BinaryVerdict::Unparsed);
}

TEST(Render, BindsPlaceholders) {
    const auto s = mcq();
    const auto token = render(builtin_template(TemplateName::TokenProbs), s);
    EXPECT_NE(token.find("Which vitamin is fat-soluble?"), std::string::npos);
    EXPECT_NE(token.find("vitamin D"), std::string::npos);
    EXPECT_EQ(token.find('{'), std::string::npos);

    const auto guiding = render(builtin_template(TemplateName::GuidingByPrompt), s);
    EXPECT_NE(guiding.find("vitamin D"), std::string::npos);

    EXPECT_THROW(render(builtin_template(TemplateName::PosteriorPrompt), s), ValidationError);
    const auto posterior = render(builtin_template(TemplateName::PosteriorPrompt), s, "B");
    EXPECT_NE(posterior.find("A: B"), std::string::npos);

    PromptTemplate five{TemplateName::TokenProbs, "{question} {option E}", OutputParser::OptionLetter, false};
    EXPECT_THROW(render(five, s), ValidationError);
}

TEST(Templates, NamesRoundTrip) {
    for (const auto name : {TemplateName::GuidingByPrompt, TemplateName::TokenProbs, TemplateName::PriorPrompt,
                            TemplateName::PosteriorPrompt, TemplateName::PromptGuidedLscl}) {
        EXPECT_EQ(template_name_from_string(to_string(name)), name);
        EXPECT_EQ(builtin_template(name).name, name);
    }
    EXPECT_TRUE(builtin_template(TemplateName::TokenProbs).requires_logprobs);
    EXPECT_FALSE(builtin_template(TemplateName::PromptGuidedLscl).requires_logprobs);
}

TEST(Text, TokenizeAndNormalize) {
    EXPECT_EQ(text::tokenize("Hello, World! 42x"), (std::vector<std::string>{"hello", "world", "42x"}));
    EXPECT_EQ(text::tokenize("肝脏"), (std::vector<std::string>{"肝", "脏"}));
    EXPECT_EQ(text::normalize_answer(" (c). "), "C");
    EXPECT_EQ(text::normalize_answer("True"), "true");
}
