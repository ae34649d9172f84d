#include <gtest/gtest.h>

#include <filesystem>

#include "lscl/dataset.hpp"
#include "lscl/error.hpp"
#include "lscl/harness.hpp"

using namespace lscl;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const std::string& dir_name) {
    RunConfig c;
    CorpusSpec corpus;
    corpus.train_size = 240;
    corpus.test_size = 120;
    c.synthetic_corpus = corpus;
    c.net.epochs = 2;
    c.net.hidden_dim = 16;
    c.encoder.embedding_dim = 16;
    c.encoder.max_question_tokens = 12;
    c.encoder.max_answer_tokens = 6;
    c.output_dir = fs::temp_directory_path() / dir_name;
    fs::remove_all(c.output_dir);
    return c;
}

std::size_t files_in(const fs::path& dir) {
    if (!fs::exists(dir)) return 0;
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

}  // namespace

TEST(RunConfigTest, SweepHasElevenCutoffs) {
    const RunConfig c;
    const auto cutoffs = c.sweep_cutoffs();
    ASSERT_EQ(cutoffs.size(), 11u);
    EXPECT_DOUBLE_EQ(cutoffs.front(), 0.80);
    EXPECT_DOUBLE_EQ(cutoffs[5], 0.90);
    EXPECT_DOUBLE_EQ(cutoffs.back(), 1.00);
}

TEST(RunConfigTest, ValidationAndFingerprint) {
    RunConfig c = small_config("lscl_cfg");
    c.sweep_step = 0.03;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config("lscl_cfg");
    const auto fp = c.fingerprint();
    c.output_dir = "/elsewhere";
    EXPECT_EQ(c.fingerprint(), fp);
    c.net.alpha = 0.25;
    EXPECT_NE(c.fingerprint(), fp);
}

TEST(RunConfigTest, JsonRoundTrip) {
    const RunConfig c = small_config("lscl_json");
    const auto back = run_config_from_json(to_json(c));
    EXPECT_EQ(back.fingerprint(), c.fingerprint());
    auto bad = to_json(c);
    bad["m_bins"] = 1;
    EXPECT_THROW(run_config_from_json(bad).validate(), ConfigError);
}

TEST(HarnessTest, PipelineArtifactsAndWarmCache) {
    const auto config = small_config("lscl_harness_pipeline");
    PipelineResult first;
    {
        Harness h(config);
        first = h.run_lscl();
        EXPECT_GT(h.llm_calls(), 0u);
    }
    const auto& out = config.output_dir;
    EXPECT_TRUE(fs::exists(out / "checkpoints/lscl.tensors"));
    EXPECT_TRUE(fs::exists(out / "checkpoints/lscl.json"));
    EXPECT_TRUE(fs::exists(out / "checkpoints/lscl.thresholds.json"));
    EXPECT_TRUE(fs::exists(out / "reports/lscl.json"));
    EXPECT_TRUE(fs::exists(out / "tables/lscl_confusion.csv"));
    EXPECT_TRUE(fs::exists(out / "tables/lscl_answer_accuracy.csv"));
    EXPECT_TRUE(fs::exists(out / "figures/lscl_confidence_hist.csv"));
    EXPECT_TRUE(fs::exists(out / "figures/lscl_residual_hist.csv"));
    EXPECT_EQ(files_in(out / "reports"), 2u);  // json + csv summary row
    const auto report_text = read_file(out / "reports/lscl.json");
    EXPECT_NE(report_text.find(config.fingerprint()), std::string::npos);
    EXPECT_EQ(first.report.total(), 120u);

    Harness again(config);
    const auto second = again.run_lscl();
    EXPECT_EQ(again.llm_calls(), 0u);
    EXPECT_EQ(second.report.macro_f1, first.report.macro_f1);
    EXPECT_EQ(read_file(out / "reports/lscl.json"), report_text);
    fs::remove_all(out);
}

TEST(HarnessTest, BinaryBaselinesNeverPredictSciolism) {
    const auto config = small_config("lscl_harness_binary");
    Harness h(config);
    for (const auto name : {BaselineName::PriorPrompt, BaselineName::PosteriorPrompt}) {
        const auto report = h.run_baseline(name);
        for (const auto truth : kAllLabels)
            EXPECT_EQ(report.confusion[label_index(truth)][label_index(KnowledgeLabel::Sciolism)], 0u);
    }
    fs::remove_all(config.output_dir);
}

TEST(HarnessTest, TokenProbsNeedsLogprobs) {
    auto config = small_config("lscl_harness_caps");
    config.synthetic_corpus.reset();
    config.simulator.reset();
    config.endpoint.model_id = "no-logprobs";
    config.endpoint.base_url = "http://127.0.0.1:9";
    config.endpoint.supports_logprobs = false;
    fs::create_directories(config.output_dir);
    QASample s;
    s.id = "x1";
    s.question = "q";
    s.options = {{"A", "a"}, {"B", "b"}};
    s.gold_answer = "A";
    const std::vector<QASample> train{s};
    s.id = "x2";
    const std::vector<QASample> test{s};
    write_dataset(config.output_dir / "train.jsonl", train);
    write_dataset(config.output_dir / "test.jsonl", test);
    config.train_path = config.output_dir / "train.jsonl";
    config.test_path = config.output_dir / "test.jsonl";
    Harness h(config);
    EXPECT_THROW(h.run_baseline(BaselineName::TokenProbs), CapabilityError);
    fs::remove_all(config.output_dir);
}

TEST(HarnessTest, UnparseableVerbalizedConfidenceIsFullyImputed) {
    auto config = small_config("lscl_harness_imputed");
    SimulatedKnowledgeProfile profile;
    profile.verbalized_mode = VerbalizedMode::Unparseable;
    config.simulator = profile;
    Harness h(config);
    const auto result = h.run_prompt_guided();
    EXPECT_EQ(result.imputed, 360u);
    EXPECT_EQ(result.report.metadata.at("imputed_fraction"), "1.000000");
    fs::remove_all(config.output_dir);
}
