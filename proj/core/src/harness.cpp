#include "lscl/harness.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "lscl/dataset.hpp"
#include "lscl/error.hpp"
#include "lscl/hashing.hpp"
#include "lscl/openai_backend.hpp"
#include "lscl/random.hpp"
#include "lscl/serialization.hpp"

namespace lscl {

using nlohmann::json;

std::string_view to_string(BaselineName name) {
    switch (name) {
        case BaselineName::GuidingByPrompt: return "guiding_by_prompt";
        case BaselineName::TokenProbs: return "token_probs";
        case BaselineName::PriorPrompt: return "prior_prompt";
        case BaselineName::PosteriorPrompt: return "posterior_prompt";
    }
    return "unknown";
}

BaselineName baseline_from_string(std::string_view text) {
    for (auto b : kAllBaselines) {
        if (to_string(b) == text) return b;
    }
    throw ConfigError("unknown baseline '" + std::string(text) +
                      "' (expected guiding_by_prompt, token_probs, prior_prompt or posterior_prompt)");
}

namespace {

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t local) {
    return splitmix64(master ^ splitmix64(fnv1a64(tag) ^ local));
}

json endpoint_json(const LLMEndpointConfig& e) {
    return json{{"model_id", e.model_id},
                {"base_url", e.base_url},
                {"api_key_env", e.api_key_env},
                {"supports_logprobs", e.supports_logprobs},
                {"max_concurrency", e.max_concurrency},
                {"requests_per_minute", e.requests_per_minute},
                {"temperature", e.temperature},
                {"max_retries", e.max_retries},
                {"max_tokens", e.max_tokens},
                {"timeout_seconds", e.timeout_seconds}};
}

LLMEndpointConfig endpoint_from_json(const json& j) {
    LLMEndpointConfig e;
    e.model_id = j.value("model_id", e.model_id);
    e.base_url = j.value("base_url", e.base_url);
    e.api_key_env = j.value("api_key_env", e.api_key_env);
    e.supports_logprobs = j.value("supports_logprobs", e.supports_logprobs);
    e.max_concurrency = j.value("max_concurrency", e.max_concurrency);
    e.requests_per_minute = j.value("requests_per_minute", e.requests_per_minute);
    e.temperature = j.value("temperature", e.temperature);
    e.max_retries = j.value("max_retries", e.max_retries);
    e.max_tokens = j.value("max_tokens", e.max_tokens);
    e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
    return e;
}

json corpus_json(const CorpusSpec& c) {
    return json{{"train_size", c.train_size},
                {"validation_size", c.validation_size},
                {"test_size", c.test_size},
                {"know_share", c.know_share},
                {"sciolism_share", c.sciolism_share},
                {"topics_per_state", c.topics_per_state},
                {"filler_vocabulary", c.filler_vocabulary},
                {"filler_words", c.filler_words},
                {"seed", c.seed}};
}

CorpusSpec corpus_from_json(const json& j) {
    CorpusSpec c;
    c.train_size = j.value("train_size", c.train_size);
    c.validation_size = j.value("validation_size", c.validation_size);
    c.test_size = j.value("test_size", c.test_size);
    c.know_share = j.value("know_share", c.know_share);
    c.sciolism_share = j.value("sciolism_share", c.sciolism_share);
    c.topics_per_state = j.value("topics_per_state", c.topics_per_state);
    c.filler_vocabulary = j.value("filler_vocabulary", c.filler_vocabulary);
    c.filler_words = j.value("filler_words", c.filler_words);
    c.seed = j.value("seed", c.seed);
    return c;
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string thresholds_text(const ThresholdPair& t) { return fmt6(t.t1) + "/" + fmt6(t.t2); }

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const CapabilityError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::string jsonl(std::span<const ConfidenceRecord> records, const json& header) {
    std::string out = json{{"header", header}}.dump() + "\n";
    for (const auto& r : records) {
        json j = r;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string histogram_csv(const std::vector<std::vector<double>>& series, const std::vector<std::string>& names, double lo,
                          double hi, int bins) {
    std::vector<std::vector<std::size_t>> counts(series.size(), std::vector<std::size_t>(static_cast<std::size_t>(bins), 0));
    for (std::size_t s = 0; s < series.size(); ++s) {
        for (const double v : series[s]) {
            const int k = std::clamp(static_cast<int>(std::floor((v - lo) / (hi - lo) * bins)), 0, bins - 1);
            ++counts[s][static_cast<std::size_t>(k)];
        }
    }
    std::string out = "bin_lo,bin_hi";
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (int k = 0; k < bins; ++k) {
        out += fmt6(lo + (hi - lo) * k / bins) + "," + fmt6(lo + (hi - lo) * (k + 1) / bins);
        for (const auto& c : counts) out += "," + std::to_string(c[static_cast<std::size_t>(k)]);
        out += "\n";
    }
    return out;
}

std::vector<ScoredConfidence> scored(std::span<const ConfidenceRecord> records,
                                     const std::function<double(const ConfidenceRecord&)>& confidence) {
    std::vector<ScoredConfidence> out;
    out.reserve(records.size());
    for (const auto& r : records) out.emplace_back(confidence(r), r.label.value());
    return out;
}

EvalReport score_pairs(std::span<const LabelPair> pairs, std::span<const ConfidenceRecord> test) {
    EvalReport report = compute_metrics(pairs);
    std::unique_ptr<bool[]> buf(new bool[test.size()]);
    for (std::size_t i = 0; i < test.size(); ++i) buf[i] = test[i].is_correct;
    tally_answer_accuracy(report, pairs, std::span<const bool>(buf.get(), test.size()));
    return report;
}

/// Thresholds from train, predicted labels and metrics on test.
EvalReport threshold_and_score(std::span<const ConfidenceRecord> train, std::span<const ConfidenceRecord> test,
                               const std::function<double(const ConfidenceRecord&)>& confidence, int m_bins,
                               ThresholdPair* chosen) {
    const auto thresholds = search_thresholds(scored(train, confidence), m_bins);
    std::vector<LabelPair> pairs;
    for (const auto& r : test) pairs.emplace_back(r.label.value(), map_label(confidence(r), thresholds));
    EvalReport report = score_pairs(pairs, test);
    report.metadata["thresholds"] = thresholds_text(thresholds);
    report.metadata["train_macro_f1"] = fmt6(thresholds.train_macro_f1);
    if (chosen) *chosen = thresholds;
    return report;
}

/// Relabels train and test jointly under `policy`.
void relabel(std::vector<ConfidenceRecord>& train, std::vector<ConfidenceRecord>& test, const LabelingPolicy& policy) {
    std::vector<ConfidenceRecord> all;
    all.reserve(train.size() + test.size());
    all.insert(all.end(), train.begin(), train.end());
    all.insert(all.end(), test.begin(), test.end());
    all = assign_knowledge_labels(std::move(all), policy);
    for (std::size_t i = 0; i < train.size(); ++i) train[i].label = all[i].label;
    for (std::size_t i = 0; i < test.size(); ++i) test[i].label = all[train.size() + i].label;
}

std::string answer_for_posterior(const LLMResponse& r) {
    return r.extracted_answer.empty() ? r.answer_text : r.extracted_answer;
}

}  // namespace

void RunConfig::validate() const {
    if (!synthetic_corpus) {
        if (train_path.empty()) throw ConfigError("config: 'train' dataset path is required");
        if (test_path.empty()) throw ConfigError("config: 'test' dataset path is required");
    } else {
        const auto& c = *synthetic_corpus;
        if (c.train_size == 0 || c.test_size == 0) throw ConfigError("config: synthetic corpus needs train and test samples");
        if (c.know_share < 0 || c.sciolism_share < 0 || c.know_share + c.sciolism_share > 1.0) {
            throw ConfigError("config: synthetic corpus state shares must be non-negative and sum to at most 1");
        }
        if (c.topics_per_state == 0 || c.filler_vocabulary < 4) throw ConfigError("config: synthetic corpus vocabulary too small");
    }
    if (!simulator && !synthetic_corpus) endpoint.validate();
    if (simulator) simulator->validate();
    labeling.validate();
    augmentation.validate();
    encoder.validate();
    net.validate();
    if (m_bins < 3) throw ConfigError("config: m_bins must be at least 3");
    if (output_dir.empty()) throw ConfigError("config: output_dir is empty");
    (void)sweep_cutoffs();
}

std::vector<double> RunConfig::sweep_cutoffs() const {
    if (!(sweep_step > 0.0) || !(sweep_stop >= sweep_start)) throw ConfigError("config: invalid sweep range");
    if (sweep_start < 0.0 || sweep_stop > 1.0) throw ConfigError("config: sweep range must lie within [0, 1]");
    const double intervals = (sweep_stop - sweep_start) / sweep_step;
    const double rounded = std::round(intervals);
    if (std::abs(intervals - rounded) > 1e-9) throw ConfigError("config: sweep step does not divide the sweep range");
    std::vector<double> out;
    for (int i = 0; i <= static_cast<int>(rounded); ++i) out.push_back(std::round((sweep_start + i * sweep_step) * 1e9) / 1e9);
    return out;
}

json to_json(const RunConfig& c) {
    json j{{"train", c.train_path.generic_string()},
           {"validation", c.validation_path.generic_string()},
           {"test", c.test_path.generic_string()},
           {"endpoint", endpoint_json(c.endpoint)},
           {"labeling", to_json(c.labeling)},
           {"augmentation", to_json(c.augmentation)},
           {"oversample", c.oversample},
           {"encoder", to_json(c.encoder)},
           {"net", to_json(c.net)},
           {"m_bins", c.m_bins},
           {"sweep", {{"start", c.sweep_start}, {"stop", c.sweep_stop}, {"step", c.sweep_step}}},
           {"output_dir", c.output_dir.generic_string()},
           {"seed", c.seed}};
    if (c.synthetic_corpus) j["synthetic_corpus"] = corpus_json(*c.synthetic_corpus);
    if (c.simulator) j["simulator"] = to_json(*c.simulator);
    return j;
}

std::string RunConfig::fingerprint() const {
    json j = to_json(*this);
    j.erase("output_dir");
    return to_hex(fnv1a64(j.dump()));
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    try {
        RunConfig c;
        auto path = [&](const char* key) -> std::filesystem::path {
            const auto s = j.value(key, std::string());
            if (s.empty()) return {};
            std::filesystem::path p(s);
            return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        };
        c.train_path = path("train");
        c.validation_path = path("validation");
        c.test_path = path("test");
        if (j.contains("synthetic_corpus") && !j["synthetic_corpus"].is_null()) c.synthetic_corpus = corpus_from_json(j["synthetic_corpus"]);
        if (j.contains("endpoint")) c.endpoint = endpoint_from_json(j["endpoint"]);
        if (j.contains("simulator") && !j["simulator"].is_null()) c.simulator = profile_from_json(j["simulator"]);
        if (j.contains("labeling")) c.labeling = labeling_policy_from_json(j["labeling"]);
        if (j.contains("augmentation")) c.augmentation = augmentation_policy_from_json(j["augmentation"]);
        c.oversample = j.value("oversample", c.oversample);
        if (j.contains("encoder")) c.encoder = encoder_spec_from_json(j["encoder"]);
        if (j.contains("net")) c.net = net_config_from_json(j["net"]);
        c.m_bins = j.value("m_bins", c.m_bins);
        if (j.contains("sweep")) {
            const auto& s = j["sweep"];
            c.sweep_start = s.value("start", c.sweep_start);
            c.sweep_stop = s.value("stop", c.sweep_stop);
            c.sweep_step = s.value("step", c.sweep_step);
        }
        if (j.contains("output_dir")) {
            std::filesystem::path p(j["output_dir"].get<std::string>());
            c.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        }
        c.seed = j.value("seed", c.seed);
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError("cannot read config " + path.string() + ": " + e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

Harness::Harness(RunConfig config, std::shared_ptr<CompletionBackend> backend_override)
    : config_(std::move(config)), backend_(std::move(backend_override)) {
    config_.validate();
    fingerprint_ = config_.fingerprint();
}

std::filesystem::path Harness::out(const std::string& relative) const {
    auto p = config_.output_dir / relative;
    std::filesystem::create_directories(p.parent_path());
    return p;
}

const DatasetSplits& Harness::ingest() {
    if (splits_) return *splits_;
    return stage("ingest", [&]() -> const DatasetSplits& {
        DatasetSplits s;
        std::vector<QASample> all;
        if (config_.synthetic_corpus) {
            SimulatedKnowledgeProfile base = config_.simulator.value_or(SimulatedKnowledgeProfile{});
            base.seed = derive_seed(config_.seed, "simulator", base.seed);
            auto corpus = generate_corpus(*config_.synthetic_corpus, base);
            config_.simulator = std::move(corpus.profile);
            all = std::move(corpus.samples);
            for (auto& q : all) {
                (q.split == Split::Train ? s.train : q.split == Split::Test ? s.test : s.validation).push_back(q);
            }
        } else {
            s.train = load_dataset(config_.train_path);
            s.test = load_dataset(config_.test_path);
            if (!config_.validation_path.empty()) s.validation = load_dataset(config_.validation_path);
            if (config_.simulator) config_.simulator->seed = derive_seed(config_.seed, "simulator", config_.simulator->seed);
        }
        std::set<std::string> ids;
        for (const auto* part : {&s.train, &s.validation, &s.test}) {
            for (const auto& q : *part) {
                if (!ids.insert(q.id).second) throw ValidationError("sample id '" + q.id + "' appears in more than one split");
            }
        }
        write_dataset(out("datasets/train.jsonl"), s.train);
        write_dataset(out("datasets/test.jsonl"), s.test);
        if (!s.validation.empty()) write_dataset(out("datasets/validation.jsonl"), s.validation);
        spdlog::info("ingest: {} train, {} validation, {} test samples", s.train.size(), s.validation.size(), s.test.size());
        splits_ = std::move(s);
        return *splits_;
    });
}

Gateway& Harness::gateway() {
    if (gateway_) return *gateway_;
    ingest();
    LLMEndpointConfig endpoint = config_.endpoint;
    std::shared_ptr<RateLimiter> limiter;
    if (config_.simulator) {
        endpoint.model_id = config_.simulator->model_id;
        endpoint.supports_logprobs = true;
        if (endpoint.base_url.empty()) endpoint.base_url = "simulated://";
        limiter = std::make_shared<RateLimiter>(INT_MAX);
    }
    if (!backend_) {
        if (config_.simulator) {
            backend_ = std::make_shared<SimulatedBackend>(*config_.simulator);
        } else {
            backend_ = std::make_shared<OpenAiCompatibleBackend>(endpoint);
        }
    }
    auto cache = std::make_shared<ResponseCache>(config_.output_dir / "responses", endpoint.model_id);
    gateway_ = std::make_unique<Gateway>(endpoint, backend_, cache, limiter);
    return *gateway_;
}

std::vector<LLMResponse> Harness::collect_stage(std::span<const QASample> samples, TemplateName tmpl,
                                                std::span<const std::string> prior_answers) {
    Gateway& gw = gateway();
    return stage("collect", [&] { return gw.query_all(samples, builtin_template(tmpl), prior_answers); });
}

std::vector<LLMResponse> Harness::collect(std::span<const QASample> samples, TemplateName tmpl) {
    return collect_stage(samples, tmpl);
}

std::size_t Harness::llm_calls() const { return gateway_ ? gateway_->backend_calls() : 0; }
std::size_t Harness::cache_hits() const { return gateway_ ? gateway_->cache_hits() : 0; }

std::pair<std::vector<ConfidenceRecord>, std::vector<ConfidenceRecord>> Harness::labeled_records(bool verbalized,
                                                                                               const LabelingPolicy& policy) {
    const auto& splits = ingest();
    const auto tmpl = verbalized ? TemplateName::PromptGuidedLscl : TemplateName::TokenProbs;
    auto train_resp = collect_stage(splits.train, tmpl);
    auto test_resp = collect_stage(splits.test, tmpl);
    return stage("label", [&] {
        auto substitute = [&](std::vector<LLMResponse>& rs) {
            if (!verbalized) return;
            for (auto& r : rs) {
                if (r.verbalized_confidence) {
                    r.aggregate_prob = *r.verbalized_confidence;
                } else {
                    r.aggregate_prob = 0.5;
                    r.add_flag("confidence_imputed");
                }
            }
        };
        substitute(train_resp);
        substitute(test_resp);
        auto train = make_records(splits.train, train_resp);
        auto test = make_records(splits.test, test_resp);
        relabel(train, test, policy);
        const std::string prefix = verbalized ? "labels/prompt_guided_lscl_" : "labels/lscl_";
        const json header = {{"labeling_policy", to_json(policy)}, {"config_fingerprint", fingerprint_}};
        write_file_atomic(out(prefix + "train.jsonl"), jsonl(train, header));
        write_file_atomic(out(prefix + "test.jsonl"), jsonl(test, header));
        return std::make_pair(std::move(train), std::move(test));
    });
}

PipelineResult Harness::run_confidence_learning(bool verbalized, const std::string& method) {
    auto [train, test] = labeled_records(verbalized, config_.labeling);
    PipelineResult result;
    for (const auto& r : test) {
        if (r.response.has_flag("confidence_imputed")) ++result.imputed;
    }
    for (const auto& r : train) {
        if (r.response.has_flag("confidence_imputed")) ++result.imputed;
    }

    NetConfig net = config_.net;
    net.seed = derive_seed(config_.seed, "net", net.seed);
    AugmentationPolicy aug = config_.augmentation;
    aug.seed = derive_seed(config_.seed, "augmentation", aug.seed);

    auto training_set = stage("augment", [&] {
        if (!config_.oversample) return train;
        const auto encoder = make_encoder(config_.encoder);
        OversampleSummary summary;
        auto out_records = oversample_bins(
            train, aug, [&](const ConfidenceRecord& r) { return record_features(*encoder, config_.encoder, r); }, &summary);
        spdlog::info("augment: {} synthetic records, median target {}", out_records.size() - train.size(), summary.target);
        return out_records;
    });

    const auto stem = out("checkpoints/" + method);
    result.checkpoint = stage("train", [&] {
        const auto fingerprint = fingerprint_records(training_set);
        if (std::filesystem::exists(stem.string() + ".json") && std::filesystem::exists(stem.string() + ".tensors")) {
            try {
                auto existing = load_checkpoint(stem);
                if (existing.training_data_fingerprint == fingerprint && existing.net_config == net &&
                    existing.encoder_spec == config_.encoder && !existing.diagnostic) {
                    spdlog::info("train: reusing checkpoint {}", stem.string());
                    return existing;
                }
            } catch (const ValidationError& e) {
                spdlog::warn("train: ignoring unreadable checkpoint: {}", e.what());
            }
        }
        auto ckpt = lscl::train(training_set, config_.encoder, net, [](const EpochStats& e) {
            spdlog::debug("epoch {}: loss {:.6f}", e.epoch, e.total);
        });
        save_checkpoint(ckpt, stem);
        if (ckpt.diagnostic) throw NumericError(*ckpt.diagnostic);
        return ckpt;
    });

    result.train_records = stage("predict", [&] { return predict(result.checkpoint, train, config_.encoder); });
    result.test_records = stage("predict", [&] { return predict(result.checkpoint, test, config_.encoder); });

    auto confidence = [](const ConfidenceRecord& r) { return r.predicted_confidence.value(); };
    result.report = stage("thresholds", [&] {
        return threshold_and_score(result.train_records, result.test_records, confidence, config_.m_bins, &result.thresholds);
    });
    for (auto& r : result.test_records) r.predicted_label = map_label(*r.predicted_confidence, result.thresholds);
    for (auto& r : result.train_records) r.predicted_label = map_label(*r.predicted_confidence, result.thresholds);

    stage("report", [&] {
        json tj = to_json(result.thresholds);
        tj["config_fingerprint"] = fingerprint_;
        tj["method"] = method;
        write_file_atomic(out("checkpoints/" + method + ".thresholds.json"), tj.dump(2) + "\n");

        auto& meta = result.report.metadata;
        meta["training_data_fingerprint"] = result.checkpoint.training_data_fingerprint;
        meta["final_train_loss"] = fmt6(result.checkpoint.final_train_loss);
        meta["imputed"] = std::to_string(result.imputed);
        const auto total = train.size() + test.size();
        meta["imputed_fraction"] = fmt6(total ? static_cast<double>(result.imputed) / static_cast<double>(total) : 0.0);
        write_report(method, result.report);

        std::vector<double> predicted;
        std::vector<double> truth;
        std::vector<double> residual;
        for (const auto& r : result.train_records) {
            predicted.push_back(*r.predicted_confidence);
            truth.push_back(r.catp);
            residual.push_back(*r.predicted_confidence - r.catp);
        }
        write_file_atomic(out("figures/" + method + "_confidence_hist.csv"),
                          histogram_csv({predicted, truth}, {"predicted", "true"}, 0.0, 1.0, 20));
        write_file_atomic(out("figures/" + method + "_residual_hist.csv"),
                          histogram_csv({residual}, {"residual"}, -1.0, 1.0, 40));
        write_file_atomic(out("figures/" + method + "_loss_curve.csv"), loss_curve_csv(result.checkpoint.loss_curve));
        return 0;
    });
    spdlog::info("{}: test macro-F1 {:.4f} with thresholds {}", method, result.report.macro_f1, thresholds_text(result.thresholds));
    return result;
}

void Harness::write_report(const std::string& method, const EvalReport& report_in) const {
    EvalReport report = report_in;
    report.metadata["method"] = method;
    report.metadata["config_fingerprint"] = fingerprint_;
    report.metadata["model_id"] = config_.simulator ? config_.simulator->model_id : config_.endpoint.model_id;
    write_file_atomic(out("reports/" + method + ".json"), to_json(report).dump(2) + "\n");
    write_file_atomic(out("reports/" + method + ".csv"), csv_header() + csv_row(report));
    write_file_atomic(out("tables/" + method + "_confusion.csv"), confusion_csv(report));
    write_file_atomic(out("tables/" + method + "_answer_accuracy.csv"), answer_accuracy_csv(report));
}

PipelineResult Harness::run_lscl() {
    if (!lscl_result_) lscl_result_ = run_confidence_learning(false, "lscl");
    return *lscl_result_;
}

PipelineResult Harness::run_prompt_guided() { return run_confidence_learning(true, "prompt_guided_lscl"); }

EvalReport Harness::run_baseline(BaselineName name) {
    const std::string method(to_string(name));
    const auto& splits = ingest();
    const bool logprobs = gateway().endpoint().supports_logprobs;
    if (name == BaselineName::TokenProbs && !logprobs) {
        throw CapabilityError("baseline token_probs requires token log-probabilities, which endpoint '" +
                              gateway().endpoint().model_id + "' does not provide");
    }
    auto [train, test] = labeled_records(!logprobs, config_.labeling);
    EvalReport report;
    std::size_t unparsed = 0;

    switch (name) {
        case BaselineName::TokenProbs: {
            report = stage("evaluate", [&] {
                return threshold_and_score(train, test, [](const ConfidenceRecord& r) { return probability_input(r); },
                                           config_.m_bins, nullptr);
            });
            break;
        }
        case BaselineName::GuidingByPrompt: {
            const auto tr = collect_stage(splits.train, TemplateName::GuidingByPrompt);
            const auto te = collect_stage(splits.test, TemplateName::GuidingByPrompt);
            for (const auto* rs : {&tr, &te}) {
                for (const auto& r : *rs) unparsed += r.verbalized_confidence ? 0 : 1;
            }
            for (std::size_t i = 0; i < train.size(); ++i) train[i].predicted_confidence = tr[i].verbalized_confidence.value_or(0.0);
            for (std::size_t i = 0; i < test.size(); ++i) test[i].predicted_confidence = te[i].verbalized_confidence.value_or(0.0);
            report = stage("evaluate", [&] {
                return threshold_and_score(train, test, [](const ConfidenceRecord& r) { return *r.predicted_confidence; },
                                           config_.m_bins, nullptr);
            });
            break;
        }
        case BaselineName::PriorPrompt:
        case BaselineName::PosteriorPrompt: {
            std::vector<LLMResponse> rs;
            std::string positive;
            if (name == BaselineName::PriorPrompt) {
                rs = collect_stage(splits.test, TemplateName::PriorPrompt);
                positive = "YES";
            } else {
                std::vector<std::string> answers;
                for (const auto& r : test) answers.push_back(answer_for_posterior(r.response));
                rs = collect_stage(splits.test, TemplateName::PosteriorPrompt, answers);
                positive = "CONFIDENT";
            }
            std::vector<LabelPair> pairs;
            for (std::size_t i = 0; i < test.size(); ++i) {
                if (rs[i].has_flag("verdict_unparsed")) ++unparsed;
                const auto pred = rs[i].extracted_answer == positive ? KnowledgeLabel::Know : KnowledgeLabel::Unknow;
                pairs.emplace_back(*test[i].label, pred);
            }
            report = stage("evaluate", [&] { return score_pairs(pairs, test); });
            break;
        }
    }
    report.metadata["unparsed_outputs"] = std::to_string(unparsed);
    stage("report", [&] {
        write_report(method, report);
        return 0;
    });
    spdlog::info("{}: test macro-F1 {:.4f}", method, report.macro_f1);
    report.metadata["method"] = method;
    report.metadata["config_fingerprint"] = fingerprint_;
    return report;
}

std::vector<SweepRow> Harness::run_threshold_sweep() {
    const auto cutoffs = config_.sweep_cutoffs();
    const auto lscl = run_lscl();
    const auto& splits = ingest();
    const bool logprobs = gateway().endpoint().supports_logprobs;
    if (!logprobs) throw CapabilityError("the threshold sweep requires token log-probabilities");

    std::vector<ConfidenceRecord> train = lscl.train_records;
    std::vector<ConfidenceRecord> test = lscl.test_records;
    const auto guide_tr = collect_stage(splits.train, TemplateName::GuidingByPrompt);
    const auto guide_te = collect_stage(splits.test, TemplateName::GuidingByPrompt);
    const auto prior = collect_stage(splits.test, TemplateName::PriorPrompt);
    std::vector<std::string> answers;
    for (const auto& r : test) answers.push_back(answer_for_posterior(r.response));
    const auto posterior = collect_stage(splits.test, TemplateName::PosteriorPrompt, answers);

    std::vector<double> guide_train;
    std::vector<double> guide_test;
    for (const auto& r : guide_tr) guide_train.push_back(r.verbalized_confidence.value_or(0.0));
    for (const auto& r : guide_te) guide_test.push_back(r.verbalized_confidence.value_or(0.0));

    std::vector<SweepRow> rows;
    stage("sweep", [&] {
        for (const double cutoff : cutoffs) {
            LabelingPolicy policy = config_.labeling;
            policy.know_accuracy_cutoff = cutoff;
            policy.validate();
            relabel(train, test, policy);

            auto lscl_conf = [](const ConfidenceRecord& r) { return *r.predicted_confidence; };
            rows.push_back({cutoff, "lscl", threshold_and_score(train, test, lscl_conf, config_.m_bins, nullptr).macro_f1});
            rows.push_back({cutoff, "token_probs",
                            threshold_and_score(train, test, [](const ConfidenceRecord& r) { return probability_input(r); },
                                                config_.m_bins, nullptr)
                                .macro_f1});

            auto gtrain = train;
            auto gtest = test;
            for (std::size_t i = 0; i < gtrain.size(); ++i) gtrain[i].predicted_confidence = guide_train[i];
            for (std::size_t i = 0; i < gtest.size(); ++i) gtest[i].predicted_confidence = guide_test[i];
            rows.push_back({cutoff, "guiding_by_prompt",
                            threshold_and_score(gtrain, gtest, lscl_conf, config_.m_bins, nullptr).macro_f1});

            for (const auto& [method, rs, positive] :
                 {std::tuple{"prior_prompt", &prior, "YES"}, std::tuple{"posterior_prompt", &posterior, "CONFIDENT"}}) {
                std::vector<LabelPair> pairs;
                for (std::size_t i = 0; i < test.size(); ++i) {
                    pairs.emplace_back(*test[i].label, (*rs)[i].extracted_answer == positive ? KnowledgeLabel::Know
                                                                                            : KnowledgeLabel::Unknow);
                }
                rows.push_back({cutoff, method, compute_metrics(pairs).macro_f1});
            }
        }
        std::string csv = "accuracy_cutoff,method,macro_f1,config_fingerprint\n";
        for (const auto& r : rows) csv += fmt6(r.accuracy_cutoff) + "," + r.method + "," + fmt6(r.macro_f1) + "," + fingerprint_ + "\n";
        write_file_atomic(out("tables/sweep.csv"), csv);
        return 0;
    });
    return rows;
}

std::filesystem::path Harness::write_summary() {
    const auto dir = config_.output_dir / "reports";
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(dir)) {
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.path().extension() == ".csv") files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::string csv = csv_header();
    for (const auto& f : files) {
        const auto text = read_file(f);
        const auto nl = text.find('\n');
        if (nl != std::string::npos) csv += text.substr(nl + 1);
    }
    const auto path = out("tables/summary.csv");
    write_file_atomic(path, csv);
    return path;
}

PipelineResult run_lscl_pipeline(const RunConfig& config) { return Harness(config).run_lscl(); }
EvalReport run_baseline(BaselineName name, const RunConfig& config) { return Harness(config).run_baseline(name); }
EvalReport run_prompt_guided(const RunConfig& config) { return Harness(config).run_prompt_guided().report; }
std::vector<SweepRow> run_threshold_sweep(const RunConfig& config) { return Harness(config).run_threshold_sweep(); }

}  // namespace lscl
