#include "lscl/gateway.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lscl/error.hpp"
#include "lscl/hashing.hpp"
#include "lscl/serialization.hpp"

namespace lscl {

void LLMEndpointConfig::validate() const {
    if (model_id.empty()) throw ConfigError("endpoint: model_id is empty");
    if (max_concurrency < 1) throw ConfigError("endpoint: max_concurrency must be >= 1");
    if (requests_per_minute < 1) throw ConfigError("endpoint: requests_per_minute must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("endpoint: temperature must be >= 0");
    if (max_retries < 0) throw ConfigError("endpoint: max_retries must be >= 0");
}

double aggregate_token_probs(std::span<const double> token_probs) {
    if (token_probs.empty()) throw ValidationError("aggregate_token_probs: empty token list");
    if (token_probs.size() == 1) {
        const double p = token_probs[0];
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("aggregate_token_probs: probability out of [0,1]");
        return p;
    }
    double log_sum = 0.0;
    for (double p : token_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("aggregate_token_probs: probability out of [0,1]");
        if (p == 0.0) return 0.0;
        log_sum += std::log(p);
    }
    return std::clamp(std::exp(log_sum / static_cast<double>(token_probs.size())), 0.0, 1.0);
}

std::string cache_key(std::string_view model_id, std::string_view rendered_prompt, std::string_view sample_id) {
    Fingerprint prompt_hash;
    prompt_hash.add(rendered_prompt);
    return std::string(model_id) + "|" + prompt_hash.hex() + "|" + std::string(sample_id);
}

namespace {

std::string file_safe(std::string_view name) {
    std::string out;
    for (char c : name) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? std::string("model") : out;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path directory, std::string model_id) {
    std::filesystem::create_directories(directory);
    file_ = directory / (file_safe(model_id) + ".jsonl");
    std::ifstream in(file_);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            // Later lines win, so a re-queried entry supersedes the old one.
            entries_[j.at("key").get<std::string>()] = j.at("response").get<LLMResponse>();
        } catch (const nlohmann::json::exception& e) {
            spdlog::warn("cache {}:{}: ignoring unreadable entry ({})", file_.string(), number, e.what());
        }
    }
}

std::optional<LLMResponse> ResponseCache::get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::put(const std::string& key, const LLMResponse& response) {
    std::unique_lock lock(mutex_);
    std::ofstream out(file_, std::ios::app);
    if (!out) throw Error("cannot append to cache '" + file_.string() + "'");
    out << nlohmann::json{{"key", key}, {"response", response}}.dump() << '\n';
    entries_[key] = response;
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

RateLimiter::RateLimiter(int requests_per_minute, Clock clock, Sleeper sleeper)
    : limit_(requests_per_minute), clock_(std::move(clock)), sleeper_(std::move(sleeper)) {
    if (limit_ < 1) throw ConfigError("rate limiter: requests_per_minute must be >= 1");
    if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
    if (!sleeper_) sleeper_ = [](std::chrono::steady_clock::duration d) { std::this_thread::sleep_for(d); };
}

void RateLimiter::acquire() {
    constexpr auto kWindow = std::chrono::seconds(60);
    std::unique_lock lock(mutex_);
    for (;;) {
        const auto now = clock_();
        while (!issued_.empty() && now - issued_.front() >= kWindow) issued_.pop_front();
        if (static_cast<int>(issued_.size()) < limit_) {
            issued_.push_back(now);
            return;
        }
        const auto wait = issued_.front() + kWindow - now;
        lock.unlock();
        sleeper_(wait);
        lock.lock();
    }
}

LLMResponse parse_completion(const Completion& completion, const QASample& sample, const PromptTemplate& tmpl,
                             std::string_view model_id) {
    LLMResponse r;
    r.sample_id = sample.id;
    r.model_id = std::string(model_id);
    r.template_name = std::string(to_string(tmpl.name));
    r.answer_text = completion.text;
    r.token_probs = completion.token_probs;
    r.flags = completion.flags;
    r.timestamp = completion.timestamp;

    switch (tmpl.parser) {
        case OutputParser::OptionLetter:
            r.extracted_answer = extract_answer(completion.text, sample);
            break;
        case OutputParser::AnswerPlusConfidence:
            r.extracted_answer = extract_answer(completion.text, sample);
            r.verbalized_confidence = parse_verbalized_confidence(completion.text);
            if (!r.verbalized_confidence) r.add_flag("confidence_unparsed");
            break;
        case OutputParser::YesNo: {
            const auto v = parse_yes_no(completion.text);
            if (v == BinaryVerdict::Positive) r.extracted_answer = "YES";
            if (v == BinaryVerdict::Negative) r.extracted_answer = "NO";
            if (v == BinaryVerdict::Unparsed) r.add_flag("verdict_unparsed");
            break;
        }
        case OutputParser::ConfidentUnconfident: {
            const auto v = parse_confident(completion.text);
            if (v == BinaryVerdict::Positive) r.extracted_answer = "CONFIDENT";
            if (v == BinaryVerdict::Negative) r.extracted_answer = "UNCONFIDENT";
            if (v == BinaryVerdict::Unparsed) r.add_flag("verdict_unparsed");
            break;
        }
    }
    if (!r.token_probs.empty()) r.aggregate_prob = aggregate_token_probs(r.token_probs);
    return r;
}

Gateway::Gateway(LLMEndpointConfig endpoint, std::shared_ptr<CompletionBackend> backend,
                 std::shared_ptr<ResponseCache> cache, std::shared_ptr<RateLimiter> limiter, Sleeper retry_sleeper)
    : endpoint_(std::move(endpoint)),
      backend_(std::move(backend)),
      cache_(std::move(cache)),
      limiter_(std::move(limiter)),
      retry_sleeper_(std::move(retry_sleeper)) {
    endpoint_.validate();
    if (!backend_) throw ConfigError("gateway: no completion backend");
    if (!limiter_) limiter_ = std::make_shared<RateLimiter>(endpoint_.requests_per_minute);
    if (!retry_sleeper_) {
        retry_sleeper_ = [](std::chrono::steady_clock::duration d) { std::this_thread::sleep_for(d); };
    }
}

Completion Gateway::call_with_retries(const CompletionRequest& request, const std::string& sample_id) {
    auto backoff = std::chrono::milliseconds(500);
    for (int attempt = 0;; ++attempt) {
        limiter_->acquire();
        ++backend_calls_;
        try {
            return backend_->complete(request);
        } catch (const TransportError& e) {
            if (attempt >= endpoint_.max_retries) {
                throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) + " attempts)",
                                     sample_id);
            }
            spdlog::warn("sample {}: transport error '{}', retry {}/{}", sample_id, e.what(), attempt + 1,
                         endpoint_.max_retries);
            retry_sleeper_(backoff);
            backoff *= 2;
        }
    }
}

LLMResponse Gateway::query_answer(const QASample& sample, const PromptTemplate& tmpl, std::string_view prior_answer) {
    if (tmpl.requires_logprobs && !endpoint_.supports_logprobs) {
        throw CapabilityError("endpoint '" + endpoint_.model_id + "' does not return token probabilities, which the " +
                              std::string(to_string(tmpl.name)) + " prompt needs; use prompt-guided mode instead");
    }
    CompletionRequest request;
    request.sample = &sample;
    request.tmpl = &tmpl;
    request.prompt = render(tmpl, sample, prior_answer);
    request.prior_answer = std::string(prior_answer);
    request.want_logprobs = endpoint_.supports_logprobs &&
                            (tmpl.requires_logprobs || tmpl.parser == OutputParser::OptionLetter);
    request.temperature = endpoint_.temperature;
    request.max_tokens = endpoint_.max_tokens;

    const std::string key = cache_key(endpoint_.model_id, request.prompt, sample.id);
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            ++cache_hits_;
            return *hit;
        }
    }
    const Completion completion = call_with_retries(request, sample.id);
    LLMResponse response = parse_completion(completion, sample, tmpl, endpoint_.model_id);
    if (request.want_logprobs && response.token_probs.empty()) response.add_flag("logprob_unavailable");
    validate(response);
    if (cache_) cache_->put(key, response);
    return response;
}

LLMResponse Gateway::query_verbalized(const QASample& sample) {
    return query_answer(sample, builtin_template(TemplateName::PromptGuidedLscl));
}

std::vector<LLMResponse> Gateway::query_all(std::span<const QASample> samples, const PromptTemplate& tmpl,
                                            std::span<const std::string> prior_answers) {
    if (!prior_answers.empty() && prior_answers.size() != samples.size()) {
        throw ValidationError("query_all: prior answers do not match samples");
    }
    std::vector<LLMResponse> out(samples.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= samples.size()) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                const std::string_view answer = prior_answers.empty() ? std::string_view{} : prior_answers[i];
                out[i] = query_answer(samples[i], tmpl, answer);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(endpoint_.max_concurrency), samples.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace lscl
