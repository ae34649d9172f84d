#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lscl/prompts.hpp"
#include "lscl/types.hpp"

namespace lscl {

struct LLMEndpointConfig {
    std::string model_id;
    std::string base_url;
    std::string api_key_env;  // name of the environment variable holding the key
    bool supports_logprobs = true;
    int max_concurrency = 1;
    int requests_per_minute = 60;
    double temperature = 0.0;
    int max_retries = 3;
    int max_tokens = 64;
    double timeout_seconds = 60.0;

    void validate() const;
};

/// Length-normalized product (geometric mean) of per-token probabilities.
/// Throws ValidationError on an empty list or an out-of-range element.
double aggregate_token_probs(std::span<const double> token_probs);

struct CompletionRequest {
    const QASample* sample = nullptr;
    const PromptTemplate* tmpl = nullptr;
    std::string prompt;
    std::string prior_answer;  // bound to {answer}
    bool want_logprobs = false;
    double temperature = 0.0;
    int max_tokens = 64;
};

struct Completion {
    std::string text;
    std::vector<double> token_probs;
    std::vector<std::string> flags;
    std::string timestamp;
};

/// Something that turns a rendered prompt into text (an HTTP endpoint or the simulator).
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual Completion complete(const CompletionRequest& request) = 0;
};

/// Append-only JSONL response cache, one file per model id. Safe for
/// concurrent readers; writers are serialized.
class ResponseCache {
public:
    ResponseCache(std::filesystem::path directory, std::string model_id);

    std::optional<LLMResponse> get(const std::string& key) const;
    void put(const std::string& key, const LLMResponse& response);
    std::size_t size() const;
    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, LLMResponse> entries_;
};

std::string cache_key(std::string_view model_id, std::string_view rendered_prompt,
                      std::string_view sample_id);

/// Sliding 60-second window limiter.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;
    using Sleeper = std::function<void(std::chrono::steady_clock::duration)>;

    explicit RateLimiter(int requests_per_minute, Clock clock = {}, Sleeper sleeper = {});

    /// Blocks until a request may be issued, then records it.
    void acquire();

private:
    int limit_;
    Clock clock_;
    Sleeper sleeper_;
    std::mutex mutex_;
    std::deque<std::chrono::steady_clock::time_point> issued_;
};

/// Uniform access to a black-box model: renders prompts, consults the cache,
/// rate-limits and retries backend calls, and parses the reply.
class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::steady_clock::duration)>;

    Gateway(LLMEndpointConfig endpoint, std::shared_ptr<CompletionBackend> backend,
            std::shared_ptr<ResponseCache> cache = nullptr,
            std::shared_ptr<RateLimiter> limiter = nullptr, Sleeper retry_sleeper = {});

    /// Answer query. `prior_answer` binds {answer} (posterior prompt).
    LLMResponse query_answer(const QASample& sample, const PromptTemplate& tmpl,
                             std::string_view prior_answer = {});

    /// Answer-plus-confidence query for endpoints without logprobs.
    LLMResponse query_verbalized(const QASample& sample);

    /// Runs query_answer over many samples with up to max_concurrency workers.
    /// Output order matches input order.
    std::vector<LLMResponse> query_all(std::span<const QASample> samples, const PromptTemplate& tmpl,
                                       std::span<const std::string> prior_answers = {});

    const LLMEndpointConfig& endpoint() const { return endpoint_; }
    std::size_t backend_calls() const { return backend_calls_.load(); }
    std::size_t cache_hits() const { return cache_hits_.load(); }

private:
    Completion call_with_retries(const CompletionRequest& request, const std::string& sample_id);

    LLMEndpointConfig endpoint_;
    std::shared_ptr<CompletionBackend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    std::shared_ptr<RateLimiter> limiter_;
    Sleeper retry_sleeper_;
    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

/// Parses a completion into an LLMResponse according to the template's output parser.
LLMResponse parse_completion(const Completion& completion, const QASample& sample,
                             const PromptTemplate& tmpl, std::string_view model_id);

}  // namespace lscl
