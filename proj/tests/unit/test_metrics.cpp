#include <gtest/gtest.h>

#include <algorithm>

#include "lscl/error.hpp"
#include "lscl/metrics.hpp"
#include "oracles.hpp"

using namespace lscl;

namespace {
constexpr auto K = KnowledgeLabel::Know;
constexpr auto S = KnowledgeLabel::Sciolism;
constexpr auto U = KnowledgeLabel::Unknow;
}  // namespace

TEST(Metrics, HandComputedExample) {
    // Know: tp 2, fp 1, fn 1 -> P 2/3, R 2/3, F1 2/3
    // Sciolism: tp 1, fp 1, fn 1 -> 1/2, 1/2, 1/2
    // Unknow: tp 1, fp 0, fn 0 -> 1, 1, 1
    const std::vector<LabelPair> pairs{{K, K}, {K, K}, {K, S}, {S, S}, {S, K}, {U, U}};
    const auto report = compute_metrics(pairs);
    EXPECT_NEAR(report.scores(K).f1, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(report.scores(S).f1, 0.5, 1e-12);
    EXPECT_NEAR(report.scores(U).f1, 1.0, 1e-12);
    EXPECT_NEAR(report.macro_f1, (2.0 / 3.0 + 0.5 + 1.0) / 3.0, 1e-12);
    EXPECT_NEAR(report.accuracy, 4.0 / 6.0, 1e-12);
    EXPECT_EQ(report.confusion[label_index(K)][label_index(S)], 1u);
    EXPECT_EQ(report.total(), 6u);
    EXPECT_EQ(macro_f1(report.confusion), report.macro_f1);
}

TEST(Metrics, MatchesOracleOnAbsentClass) {
    const std::vector<LabelPair> pairs{{K, K}, {K, U}, {S, S}, {S, U}};
    std::vector<KnowledgeLabel> truth, pred;
    for (const auto& [t, p] : pairs) {
        truth.push_back(t);
        pred.push_back(p);
    }
    EXPECT_EQ(compute_metrics(pairs).macro_f1, oracle::macro_f1(truth, pred));
}

TEST(Metrics, EmptyThrows) { EXPECT_THROW(compute_metrics({}), ValidationError); }

TEST(Metrics, AnswerAccuracyTally) {
    const std::vector<LabelPair> pairs{{K, K}, {K, S}, {U, K}};
    const bool correct[] = {true, false, false};
    auto report = compute_metrics(pairs);
    tally_answer_accuracy(report, pairs, correct);
    EXPECT_EQ(report.answer_accuracy_by_truth[label_index(K)].count, 2u);
    EXPECT_NEAR(report.answer_accuracy_by_truth[label_index(K)].accuracy_percent, 50.0, 1e-12);
    EXPECT_NEAR(report.answer_accuracy_by_prediction[label_index(K)].accuracy_percent, 50.0, 1e-12);
    EXPECT_EQ(report.answer_accuracy_by_prediction[label_index(S)].count, 1u);
}

TEST(Metrics, CsvShapes) {
    const std::vector<LabelPair> pairs{{K, K}, {U, U}};
    const auto report = compute_metrics(pairs);
    const auto confusion = confusion_csv(report);
    EXPECT_EQ(std::count(confusion.begin(), confusion.end(), '\n'), 4);
    EXPECT_NE(csv_header().find("macro_f1"), std::string::npos);
}
