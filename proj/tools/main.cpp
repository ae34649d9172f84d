#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "lscl/dataset.hpp"
#include "lscl/error.hpp"
#include "lscl/harness.hpp"

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string simulate;
    std::string log_level = "info";
};

lscl::RunConfig resolve_config(const GlobalOptions& g) {
    lscl::RunConfig config = lscl::load_run_config(g.config_path);
    if (g.seed) config.seed = *g.seed;
    if (!g.out.empty()) config.output_dir = g.out;
    if (!g.simulate.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lscl::read_file(g.simulate));
        } catch (const std::exception& e) {
            throw lscl::ConfigError("cannot read simulator profile " + g.simulate + ": " + e.what());
        }
        config.simulator = lscl::profile_from_json(j);
    }
    config.validate();
    return config;
}

void print_report(const std::string& method, const lscl::EvalReport& report) {
    std::printf("%-20s macro_f1=%.4f accuracy=%.4f macro_recall=%.4f", method.c_str(), report.macro_f1, report.accuracy,
                report.macro_recall);
    for (const char* key : {"thresholds", "unparsed_outputs", "imputed"}) {
        const auto it = report.metadata.find(key);
        if (it != report.metadata.end()) std::printf(" %s=%s", key, it->second.c_str());
    }
    std::printf("\n");
}

void print_label_counts(const char* split, const std::vector<lscl::ConfidenceRecord>& records) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) ++counts[std::string(lscl::to_string(r.label.value()))];
    std::printf("%s:", split);
    for (const auto& [label, n] : counts) std::printf(" %s=%zu", label.c_str(), n);
    std::printf("\n");
}

int exit_code(lscl::ExitCode code) { return static_cast<int>(code); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-boundary calibration pipeline for black-box language models"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("-c,--config", g.config_path, "Run configuration (JSON)")->required();
    app.add_option("--seed", g.seed, "Override the master seed");
    app.add_option("--out", g.out, "Override the output directory");
    app.add_option("--simulate", g.simulate, "Answer from a simulated model profile (JSON) instead of the endpoint");
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

    auto* ingest = app.add_subcommand("ingest", "Load or generate the dataset splits");
    auto* collect = app.add_subcommand("collect", "Query the model for every sample (cached)");
    auto* label = app.add_subcommand("label", "Judge answers, compute CATP and assign knowledge labels");
    auto* augment = app.add_subcommand("augment", "Oversample sparse CATP bins");
    auto* train = app.add_subcommand("train", "Train the confidence network");
    auto* thresholds = app.add_subcommand("thresholds", "Search the demarcation thresholds on the train split");
    auto* evaluate = app.add_subcommand("evaluate", "Run the full pipeline and score the test split");
    auto* baseline = app.add_subcommand("baseline", "Run one baseline");
    std::string baseline_name;
    baseline->add_option("name", baseline_name, "guiding_by_prompt, token_probs, prior_prompt, posterior_prompt or all")
        ->required();
    auto* prompt_guided = app.add_subcommand("prompt-guided", "Run the verbalized-confidence pipeline");
    auto* sweep = app.add_subcommand("sweep", "Sweep the Know accuracy cutoff for every method");
    auto* report = app.add_subcommand("report", "Collect every report into tables/summary.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(lscl::ExitCode::ConfigError);
    }
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        lscl::Harness harness(resolve_config(g));
        if (ingest->parsed()) {
            const auto& s = harness.ingest();
            std::printf("train=%zu validation=%zu test=%zu\n", s.train.size(), s.validation.size(), s.test.size());
        } else if (collect->parsed()) {
            const auto& s = harness.ingest();
            const auto tmpl = harness.gateway().endpoint().supports_logprobs ? lscl::TemplateName::TokenProbs
                                                                             : lscl::TemplateName::PromptGuidedLscl;
            harness.collect(s.train, tmpl);
            harness.collect(s.test, tmpl);
            std::printf("llm_calls=%zu cache_hits=%zu\n", harness.llm_calls(), harness.cache_hits());
        } else if (label->parsed()) {
            const bool verbalized = !harness.gateway().endpoint().supports_logprobs;
            const auto [tr, te] = harness.labeled_records(verbalized, harness.config().labeling);
            print_label_counts("train", tr);
            print_label_counts("test", te);
        } else if (augment->parsed()) {
            const bool verbalized = !harness.gateway().endpoint().supports_logprobs;
            const auto [tr, te] = harness.labeled_records(verbalized, harness.config().labeling);
            const auto encoder = lscl::make_encoder(harness.config().encoder);
            lscl::OversampleSummary summary;
            const auto out = lscl::oversample_bins(
                tr, harness.config().augmentation,
                [&](const lscl::ConfidenceRecord& r) { return lscl::record_features(*encoder, harness.config().encoder, r); },
                &summary);
            std::printf("target=%zu synthetic=%zu\nbin,before,after\n", summary.target, out.size() - tr.size());
            for (std::size_t k = 0; k < summary.counts_before.size(); ++k) {
                std::printf("%zu,%zu,%zu\n", k, summary.counts_before[k], summary.counts_after[k]);
            }
        } else if (train->parsed()) {
            const auto result = harness.run_lscl();
            std::fputs(lscl::loss_curve_csv(result.checkpoint.loss_curve).c_str(), stdout);
        } else if (thresholds->parsed()) {
            const auto result = harness.run_lscl();
            std::printf("t1=%.6f t2=%.6f train_macro_f1=%.6f ties_seen=%zu\n", result.thresholds.t1, result.thresholds.t2,
                        result.thresholds.train_macro_f1, result.thresholds.ties_seen);
        } else if (evaluate->parsed()) {
            print_report("lscl", harness.run_lscl().report);
        } else if (baseline->parsed()) {
            if (baseline_name == "all") {
                for (auto b : lscl::kAllBaselines) print_report(std::string(lscl::to_string(b)), harness.run_baseline(b));
            } else {
                print_report(baseline_name, harness.run_baseline(lscl::baseline_from_string(baseline_name)));
            }
        } else if (prompt_guided->parsed()) {
            print_report("prompt_guided_lscl", harness.run_prompt_guided().report);
        } else if (sweep->parsed()) {
            std::printf("accuracy_cutoff,method,macro_f1\n");
            for (const auto& row : harness.run_threshold_sweep()) {
                std::printf("%.2f,%s,%.6f\n", row.accuracy_cutoff, row.method.c_str(), row.macro_f1);
            }
        } else if (report->parsed()) {
            std::fputs(lscl::read_file(harness.write_summary()).c_str(), stdout);
        }
    } catch (const lscl::ConfigError& e) {
        spdlog::error("configuration error: {}", e.what());
        return exit_code(lscl::ExitCode::ConfigError);
    } catch (const lscl::CapabilityError& e) {
        spdlog::error("capability error: {}", e.what());
        return exit_code(lscl::ExitCode::CapabilityError);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_code(lscl::ExitCode::StageFailure);
    }
    return exit_code(lscl::ExitCode::Success);
}
