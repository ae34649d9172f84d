#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "lscl/calibration.hpp"
#include "lscl/error.hpp"
#include "lscl/random.hpp"

using namespace lscl;

namespace {

ConfidenceRecord record(const std::string& id, double catp, bool correct) {
    ConfidenceRecord r;
    r.sample.id = id;
    r.sample.question = "q " + id;
    r.sample.gold_answer = "A";
    r.response.sample_id = id;
    r.is_correct = correct;
    r.catp = catp;
    return r;
}

std::vector<double> catp_feature(const ConfidenceRecord& r) { return {r.catp, r.catp * r.catp}; }

}  // namespace

TEST(Catp, Branches) {
    EXPECT_EQ(compute_catp(0.8, true), 0.8);
    EXPECT_NEAR(compute_catp(0.8, false), 0.2, 1e-15);
    EXPECT_EQ(compute_catp(0.5, true), 0.5);
    EXPECT_EQ(compute_catp(0.5, false), 0.5);
}

TEST(Catp, InvolutionOnGrid) {
    for (int i = 0; i <= 1000; ++i) {
        const double p = i / 1000.0;
        EXPECT_NEAR(compute_catp(p, false), 1.0 - compute_catp(p, true), 1e-12);
    }
}

TEST(Catp, RejectsOutOfRange) {
    EXPECT_THROW(compute_catp(-0.01, true), ValidationError);
    EXPECT_THROW(compute_catp(1.01, false), ValidationError);
    EXPECT_THROW(compute_catp(std::nan(""), false), ValidationError);
}

TEST(Catp, QuadrantMapping) {
    for (int i = 0; i <= 100; ++i) {
        const double p = 0.9 + 0.1 * i / 100.0;
        EXPECT_GE(compute_catp(p, true), 0.9);
        EXPECT_LE(compute_catp(p, false), 0.1 + 1e-12);
    }
    for (int i = 0; i <= 100; ++i) {
        const double p = 0.4 + 0.2 * i / 100.0;
        for (const bool correct : {true, false}) {
            const double c = compute_catp(p, correct);
            EXPECT_GE(c, 0.4 - 1e-12);
            EXPECT_LE(c, 0.6 + 1e-12);
        }
    }
}

TEST(Judge, NormalizesAndFlags) {
    QASample s;
    s.id = "x";
    s.gold_answer = "B";
    s.options = {{"A", "a"}, {"B", "b"}, {"C", "c"}};
    LLMResponse r;
    r.extracted_answer = "B";
    EXPECT_TRUE(judge_correctness(r, s));
    r.extracted_answer = " b)";
    EXPECT_TRUE(judge_correctness(r, s));
    r.extracted_answer = "C";
    EXPECT_FALSE(judge_correctness(r, s));
    r.extracted_answer.clear();
    r.answer_text.clear();
    EXPECT_FALSE(judge_correctness(r, s));
    EXPECT_TRUE(r.has_flag("answer_unextractable"));
}

TEST(BinIndex, HalfOpenWithClosedLastBin) {
    EXPECT_EQ(bin_index(0.0, 10), 0);
    EXPECT_EQ(bin_index(0.1, 10), 1);
    EXPECT_EQ(bin_index(0.0999999, 10), 0);
    EXPECT_EQ(bin_index(0.95, 10), 9);
    EXPECT_EQ(bin_index(1.0, 10), 9);
}

TEST(Labeling, AccuracyCutoffExamples) {
    std::vector<ConfidenceRecord> records;
    for (int i = 0; i < 50; ++i) records.push_back(record("k" + std::to_string(i), 0.95, i < 48));
    for (int i = 0; i < 10; ++i) records.push_back(record("u" + std::to_string(i), 0.05, i < 1));
    for (int i = 0; i < 20; ++i) records.push_back(record("s" + std::to_string(i), 0.55, i < 11));
    const auto labeled = assign_knowledge_labels(records, LabelingPolicy{});
    for (const auto& r : labeled) {
        ASSERT_TRUE(r.label.has_value());
        if (r.sample.id[0] == 'k') EXPECT_EQ(*r.label, KnowledgeLabel::Know);
        if (r.sample.id[0] == 'u') EXPECT_EQ(*r.label, KnowledgeLabel::Unknow);
        if (r.sample.id[0] == 's') EXPECT_EQ(*r.label, KnowledgeLabel::Sciolism);
    }
}

TEST(Labeling, EmptyInputThrows) {
    EXPECT_THROW(assign_knowledge_labels({}, LabelingPolicy{}), ValidationError);
}

TEST(Labeling, RaisingKnowCutoffNeverAddsKnow) {
    std::vector<ConfidenceRecord> records;
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double c = rng.uniform();
        records.push_back(record(std::to_string(i), c, rng.bernoulli(c)));
    }
    std::size_t previous = records.size() + 1;
    for (double cutoff = 0.50; cutoff <= 1.0; cutoff += 0.05) {
        LabelingPolicy policy;
        policy.know_accuracy_cutoff = cutoff;
        const auto labeled = assign_knowledge_labels(records, policy);
        const auto know = static_cast<std::size_t>(std::count_if(labeled.begin(), labeled.end(), [](const auto& r) {
            return r.label == KnowledgeLabel::Know;
        }));
        EXPECT_LE(know, previous);
        previous = know;
        for (const auto& r : labeled) EXPECT_TRUE(r.label.has_value());
    }
}

TEST(Labeling, PolicyValidation) {
    LabelingPolicy p;
    p.unknow_accuracy_cutoff = 0.95;
    EXPECT_THROW(p.validate(), ConfigError);
}

class OversampleFixture : public ::testing::Test {
protected:
    // Five equal-width bins over catp with counts [100, 40, 40, 6, 4].
    void SetUp() override {
        const std::array<int, 5> counts{100, 40, 40, 6, 4};
        Rng rng(3);
        for (int b = 0; b < 5; ++b) {
            for (int i = 0; i < counts[static_cast<std::size_t>(b)]; ++i) {
                const double c = (b + rng.uniform()) / 5.0;
                records.push_back(record("b" + std::to_string(b) + "-" + std::to_string(i), c, true));
            }
        }
        policy.num_bins = 5;
        policy.seed = 42;
    }

    std::vector<ConfidenceRecord> records;
    AugmentationPolicy policy;
};

TEST_F(OversampleFixture, RaisesSmallBinsToMedian) {
    OversampleSummary summary;
    const auto out = oversample_bins(records, policy, catp_feature, &summary);
    EXPECT_EQ(summary.target, 40u);
    EXPECT_EQ(out.size(), 260u);
    std::array<std::size_t, 5> counts{};
    for (const auto& r : out) ++counts[static_cast<std::size_t>(bin_index(r.catp, 5))];
    EXPECT_EQ(counts, (std::array<std::size_t, 5>{100, 40, 40, 40, 40}));
}

TEST_F(OversampleFixture, SyntheticStaysInSourceBinAndOriginalsUntouched) {
    const auto out = oversample_bins(records, policy, catp_feature);
    for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(out[i], records[i]);
    for (std::size_t i = records.size(); i < out.size(); ++i) {
        const auto& r = out[i];
        EXPECT_TRUE(r.synthetic);
        const int source = r.sample.id[1] - '0';
        EXPECT_GE(r.catp, source / 5.0);
        EXPECT_LT(r.catp, (source + 1) / 5.0);
        EXPECT_EQ(r.features.size(), 2u);
    }
}

TEST_F(OversampleFixture, DeterministicGivenSeed) {
    EXPECT_EQ(oversample_bins(records, policy, catp_feature), oversample_bins(records, policy, catp_feature));
}

TEST(Oversample, NoOpWhenBalanced) {
    std::vector<ConfidenceRecord> records;
    for (int b = 0; b < 4; ++b)
        for (int i = 0; i < 10; ++i) records.push_back(record(std::to_string(b * 10 + i), (b + 0.5) / 4.0, true));
    AugmentationPolicy policy;
    policy.num_bins = 4;
    EXPECT_EQ(oversample_bins(records, policy, catp_feature), records);
}

TEST(Oversample, SingletonBinUsesJitter) {
    std::vector<ConfidenceRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(record("a" + std::to_string(i), 0.1, true));
    for (int i = 0; i < 10; ++i) records.push_back(record("b" + std::to_string(i), 0.5, true));
    records.push_back(record("c0", 0.9, true));
    AugmentationPolicy policy;
    policy.num_bins = 10;
    OversampleSummary summary;
    const auto out = oversample_bins(records, policy, catp_feature, &summary);
    EXPECT_EQ(summary.singleton_bins, 1u);
    EXPECT_EQ(out.size(), 30u);
    for (std::size_t i = records.size(); i < out.size(); ++i) {
        EXPECT_EQ(bin_index(out[i].catp, 10), 9);
        EXPECT_NEAR(out[i].features[0], 0.9, 0.01);
    }
}
