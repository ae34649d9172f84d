#include <gtest/gtest.h>

#include <map>

#include "lscl/calibration.hpp"
#include "lscl/error.hpp"
#include "lscl/simulator.hpp"

using namespace lscl;

namespace {

SyntheticCorpus corpus(std::size_t n, double know, double sciolism, std::uint64_t seed = 7) {
    CorpusSpec spec;
    spec.train_size = n;
    spec.test_size = 0;
    spec.know_share = know;
    spec.sciolism_share = sciolism;
    spec.seed = seed;
    return generate_corpus(spec);
}

double accuracy_of(const SyntheticCorpus& c, KnowledgeLabel state, std::size_t* count = nullptr) {
    std::size_t n = 0, correct = 0;
    for (const auto& s : c.samples) {
        if (c.profile.planted.at(s.id) != state) continue;
        const auto r = simulate(c.profile, s);
        ++n;
        correct += r.extracted_answer == s.gold_answer;
    }
    if (count) *count = n;
    return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

}  // namespace

TEST(Simulator, Deterministic) {
    const auto c = corpus(50, 0.4, 0.3);
    for (const auto& s : c.samples) EXPECT_EQ(simulate(c.profile, s), simulate(c.profile, s));
    const auto again = corpus(50, 0.4, 0.3);
    EXPECT_EQ(c.samples, again.samples);
}

TEST(Simulator, PlantedStateRanges) {
    const auto c = corpus(600, 0.34, 0.33);
    for (const auto& s : c.samples) {
        const auto r = simulate(c.profile, s);
        ASSERT_TRUE(r.aggregate_prob.has_value());
        const double p = *r.aggregate_prob;
        switch (c.profile.planted.at(s.id)) {
            case KnowledgeLabel::Know:
                EXPECT_EQ(r.extracted_answer, s.gold_answer);
                EXPECT_GE(p, 0.90);
                EXPECT_LE(p, 1.00);
                break;
            case KnowledgeLabel::Unknow:
                EXPECT_NE(r.extracted_answer, s.gold_answer);
                EXPECT_GE(p, 0.85);
                EXPECT_LE(p, 1.00);
                break;
            case KnowledgeLabel::Sciolism:
                EXPECT_GE(p, 0.30);
                EXPECT_LE(p, 0.70);
                break;
        }
    }
}

TEST(Simulator, KnowAndSciolismAccuracy) {
    const auto know = corpus(1000, 1.0, 0.0);
    std::size_t n = 0;
    EXPECT_GE(accuracy_of(know, KnowledgeLabel::Know, &n), 0.99);
    EXPECT_EQ(n, 1000u);
    const auto sci = corpus(1000, 0.0, 1.0);
    const double acc = accuracy_of(sci, KnowledgeLabel::Sciolism, &n);
    EXPECT_EQ(n, 1000u);
    EXPECT_GT(acc, 0.20);
    EXPECT_LT(acc, 0.90);
}

TEST(Simulator, LabelRecoverability) {
    const auto c = corpus(5000, 0.5, 0.25);
    std::vector<LLMResponse> responses;
    for (const auto& s : c.samples) responses.push_back(simulate(c.profile, s));
    const auto labeled = assign_knowledge_labels(make_records(c.samples, responses), LabelingPolicy{});
    std::map<KnowledgeLabel, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& r : labeled) {
        const auto planted = c.profile.planted.at(r.sample.id);
        auto& [hit, total] = tally[planted];
        ++total;
        hit += r.label == planted;
    }
    for (const auto state : {KnowledgeLabel::Know, KnowledgeLabel::Unknow}) {
        const auto [hit, total] = tally[state];
        ASSERT_GT(total, 0u);
        EXPECT_GE(static_cast<double>(hit) / static_cast<double>(total), 0.95) << to_string(state);
    }
}

TEST(Simulator, DiffuseMode) {
    auto c = corpus(400, 0.0, 0.0);
    c.profile.unknow_mode = UnknowMode::Diffuse;
    for (const auto& s : c.samples) {
        const auto r = simulate(c.profile, s);
        EXPECT_LE(*r.aggregate_prob, 0.35);
    }
}

TEST(Simulator, UnknownIdThrows) {
    const auto c = corpus(10, 0.5, 0.3);
    QASample s = c.samples.front();
    s.id = "missing";
    EXPECT_THROW(simulate(c.profile, s), ValidationError);
}

TEST(Simulator, ProfileJsonRoundTrip) {
    const auto c = corpus(20, 0.5, 0.3);
    const auto back = profile_from_json(to_json(c.profile));
    EXPECT_EQ(back.planted, c.profile.planted);
    EXPECT_EQ(back.seed, c.profile.seed);
    EXPECT_EQ(back.unknow_mode, c.profile.unknow_mode);
}

TEST(Simulator, InvalidRangeRejected) {
    SimulatedKnowledgeProfile p;
    p.know_prob_range = {0.9, 1.2};
    EXPECT_THROW(p.validate(), ConfigError);
}
