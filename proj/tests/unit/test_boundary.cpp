#include <gtest/gtest.h>

#include <cmath>

#include "lscl/boundary.hpp"
#include "lscl/error.hpp"
#include "lscl/random.hpp"
#include "oracles.hpp"

using namespace lscl;

namespace {

KnowledgeLabel random_label(Rng& rng) { return static_cast<KnowledgeLabel>(rng.below(3)); }

}  // namespace

TEST(MapLabel, InclusiveOuterBoundaries) {
    const ThresholdPair t{0.71, 0.36};
    EXPECT_EQ(map_label(0.95, t), KnowledgeLabel::Know);
    EXPECT_EQ(map_label(0.71, t), KnowledgeLabel::Know);
    EXPECT_EQ(map_label(0.36, t), KnowledgeLabel::Unknow);
    EXPECT_EQ(map_label(0.5, t), KnowledgeLabel::Sciolism);
    EXPECT_THROW(map_label(0.5, 0.3, 0.4), ValidationError);
    EXPECT_THROW(map_label(1.5, t), ValidationError);
}

TEST(MapLabel, MonotoneInConfidence) {
    const ThresholdPair t{0.6, 0.3};
    KnowledgeLabel previous = KnowledgeLabel::Unknow;
    for (int i = 0; i <= 1000; ++i) {
        const auto label = map_label(i / 1000.0, t);
        EXPECT_GE(label_index(label), label_index(previous));
        previous = label;
    }
}

TEST(Search, SeparableThreePoints) {
    const std::vector<ScoredConfidence> records{
        {0.9, KnowledgeLabel::Know}, {0.5, KnowledgeLabel::Sciolism}, {0.1, KnowledgeLabel::Unknow}};
    const auto pair = search_thresholds(records, 11);
    EXPECT_EQ(pair.train_macro_f1, 1.0);
    EXPECT_DOUBLE_EQ(oracle::best_grid_macro_f1(records, 11), 1.0);
    for (const auto& [c, truth] : records) EXPECT_EQ(map_label(c, pair), truth);
}

TEST(Search, SingleClassDegenerate) {
    std::vector<ScoredConfidence> records;
    for (int i = 0; i < 20; ++i) records.emplace_back(0.9 + i * 0.005, KnowledgeLabel::Know);
    EXPECT_EQ(search_thresholds(records, 100).train_macro_f1, 1.0);
}

TEST(Search, EmptyInputThrows) {
    EXPECT_THROW(search_thresholds({}, 10), ValidationError);
}

TEST(Search, MatchesBruteForce) {
    Rng rng(77);
    for (int instance = 0; instance < 50; ++instance) {
        const int m_bins = 3 + static_cast<int>(rng.below(23));
        const auto n = 1 + static_cast<std::size_t>(rng.below(1000));
        std::vector<ScoredConfidence> records;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = instance % 2 ? std::round(rng.uniform() * (m_bins - 1)) / (m_bins - 1) : rng.uniform();
            records.emplace_back(c, random_label(rng));
        }
        const auto pair = search_thresholds(records, m_bins);
        EXPECT_EQ(pair.train_macro_f1, oracle::best_grid_macro_f1(records, m_bins)) << "instance " << instance;
        EXPECT_LE(pair.t2, pair.t1);
        EXPECT_EQ(pair.t1, grid_value(static_cast<int>(std::lround(pair.t1 * (m_bins - 1))), m_bins));
        EXPECT_EQ(pair.t2, grid_value(static_cast<int>(std::lround(pair.t2 * (m_bins - 1))), m_bins));
        EXPECT_EQ(pair, search_thresholds(records, m_bins));
    }
}

TEST(Search, TieBreakKeepsLastVisited) {
    // Every admissible pair scores the same on a single Know record at 1.0,
    // so the last pair in scan order wins: smallest t1, largest admissible t2.
    const std::vector<ScoredConfidence> records{{1.0, KnowledgeLabel::Know}};
    const auto pair = search_thresholds(records, 5);
    EXPECT_EQ(pair.t1, 0.25);
    EXPECT_EQ(pair.t2, 0.25);
    EXPECT_GT(pair.ties_seen, 0u);
}

TEST(Search, RecoversPlantedThresholds) {
    Rng rng(5);
    std::vector<ScoredConfidence> records;
    for (int i = 0; i < 5000; ++i) {
        const double c = rng.uniform();
        auto label = oracle::partition(c, 0.70, 0.30);
        if (rng.bernoulli(0.02)) label = random_label(rng);
        records.emplace_back(c, label);
    }
    const auto pair = search_thresholds(records, 100);
    EXPECT_NEAR(pair.t1, 0.70, 0.02);
    EXPECT_NEAR(pair.t2, 0.30, 0.02);
}

TEST(ThresholdJson, RoundTrip) {
    ThresholdPair p{0.7, 0.3, 0.81, 100, 4};
    EXPECT_EQ(threshold_pair_from_json(to_json(p)), p);
}

TEST(Search, RejectsGridWithoutAdmissiblePair) {
    const std::vector<ScoredConfidence> records{{0.5, KnowledgeLabel::Know}};
    EXPECT_THROW(search_thresholds(records, 2), ConfigError);
}
