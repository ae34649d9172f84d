#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscl/boundary.hpp"
#include "lscl/calibration.hpp"
#include "lscl/confidence_net.hpp"
#include "lscl/gateway.hpp"
#include "lscl/metrics.hpp"
#include "lscl/simulator.hpp"

namespace lscl {

enum class BaselineName { GuidingByPrompt, TokenProbs, PriorPrompt, PosteriorPrompt };

std::string_view to_string(BaselineName name);
BaselineName baseline_from_string(std::string_view text);
inline constexpr BaselineName kAllBaselines[] = {BaselineName::GuidingByPrompt, BaselineName::TokenProbs,
                                                 BaselineName::PriorPrompt, BaselineName::PosteriorPrompt};

struct RunConfig {
    std::filesystem::path train_path;
    std::filesystem::path validation_path;
    std::filesystem::path test_path;
    /// Generates the datasets and the simulator profile instead of reading files.
    std::optional<CorpusSpec> synthetic_corpus;

    LLMEndpointConfig endpoint;
    /// When set, answers come from the simulated model instead of `endpoint.base_url`.
    std::optional<SimulatedKnowledgeProfile> simulator;

    LabelingPolicy labeling;
    AugmentationPolicy augmentation;
    bool oversample = true;
    EncoderSpec encoder;
    NetConfig net;
    int m_bins = 100;

    double sweep_start = 0.80;
    double sweep_stop = 1.00;
    double sweep_step = 0.02;

    std::filesystem::path output_dir = "lscl-out";
    /// Master seed; network, augmentation and simulator seeds derive from it.
    std::uint64_t seed = 0;

    void validate() const;
    /// Hash of the canonical JSON form; embedded in every artifact.
    std::string fingerprint() const;
    std::vector<double> sweep_cutoffs() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults. Relative dataset paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct DatasetSplits {
    std::vector<QASample> train;
    std::vector<QASample> validation;
    std::vector<QASample> test;
};

struct PipelineResult {
    EvalReport report;
    ThresholdPair thresholds;
    ModelCheckpoint checkpoint;
    std::vector<ConfidenceRecord> train_records;  // originals with predictions
    std::vector<ConfidenceRecord> test_records;
    std::size_t imputed = 0;  // records whose probability input was imputed at 0.5
};

struct SweepRow {
    double accuracy_cutoff = 0.0;
    std::string method;
    double macro_f1 = 0.0;
};

/// Drives the stages against one output directory. All stages after
/// collection run single-threaded and deterministically.
class Harness {
public:
    explicit Harness(RunConfig config, std::shared_ptr<CompletionBackend> backend_override = nullptr);

    const RunConfig& config() const { return config_; }

    /// Loads (or generates) the dataset splits and writes them under datasets/.
    const DatasetSplits& ingest();

    /// Token-probability answers for every sample, through the cache.
    std::vector<LLMResponse> collect(std::span<const QASample> samples, TemplateName tmpl);

    /// Records with CATP and truth labels for train and test. `verbalized`
    /// substitutes the verbalized confidence for the token probability.
    std::pair<std::vector<ConfidenceRecord>, std::vector<ConfidenceRecord>> labeled_records(
        bool verbalized, const LabelingPolicy& policy);

    PipelineResult run_lscl();
    PipelineResult run_prompt_guided();
    EvalReport run_baseline(BaselineName name);
    std::vector<SweepRow> run_threshold_sweep();

    /// Collects every summary row under reports/ into tables/summary.csv.
    std::filesystem::path write_summary();

    std::size_t llm_calls() const;
    std::size_t cache_hits() const;
    Gateway& gateway();

private:
    PipelineResult run_confidence_learning(bool verbalized, const std::string& method);
    void write_report(const std::string& method, const EvalReport& report) const;
    std::filesystem::path out(const std::string& relative) const;
    std::vector<LLMResponse> collect_stage(std::span<const QASample> samples, TemplateName tmpl,
                                           std::span<const std::string> prior_answers = {});

    RunConfig config_;
    std::string fingerprint_;
    std::shared_ptr<CompletionBackend> backend_;
    std::unique_ptr<Gateway> gateway_;
    std::optional<DatasetSplits> splits_;
    std::optional<PipelineResult> lscl_result_;
};

PipelineResult run_lscl_pipeline(const RunConfig& config);
EvalReport run_baseline(BaselineName name, const RunConfig& config);
EvalReport run_prompt_guided(const RunConfig& config);
std::vector<SweepRow> run_threshold_sweep(const RunConfig& config);

}  // namespace lscl
