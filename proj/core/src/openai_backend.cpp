#include "lscl/openai_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>

#include <httplib.h>

#include "lscl/error.hpp"

namespace lscl {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // path prefix without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint: base_url needs a scheme: '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? std::string{} : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

OpenAiCompatibleBackend::OpenAiCompatibleBackend(LLMEndpointConfig endpoint) : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    if (endpoint_.base_url.empty()) throw ConfigError("endpoint '" + endpoint_.model_id + "': base_url is empty");
    parse_url(endpoint_.base_url);
    if (!endpoint_.api_key_env.empty()) {
        const char* key = std::getenv(endpoint_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("endpoint '" + endpoint_.model_id + "': environment variable " + endpoint_.api_key_env +
                              " is not set");
        }
        api_key_ = key;
    }
}

json build_chat_request(const LLMEndpointConfig& endpoint, const CompletionRequest& request) {
    json body = {{"model", endpoint.model_id},
                 {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens},
                 {"stream", false}};
    if (request.want_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = 1;
    }
    return body;
}

Completion parse_chat_response(const json& body, bool want_logprobs) {
    Completion out;
    const auto& choices = body.at("choices");
    if (!choices.is_array() || choices.empty()) throw Error("chat response has no choices");
    const auto& choice = choices.at(0);
    const auto& message = choice.at("message");
    if (message.contains("content") && message["content"].is_string()) out.text = message["content"].get<std::string>();

    if (!want_logprobs) return out;
    const auto it = choice.find("logprobs");
    if (it == choice.end() || it->is_null() || !it->contains("content") || (*it)["content"].is_null()) {
        out.flags.push_back("logprob_unavailable");
        return out;
    }
    bool missing = false;
    for (const auto& token : (*it)["content"]) {
        const auto lp = token.find("logprob");
        if (lp == token.end() || !lp->is_number()) {
            missing = true;
            continue;
        }
        out.token_probs.push_back(std::clamp(std::exp(lp->get<double>()), 0.0, 1.0));
    }
    if (missing || out.token_probs.empty()) out.flags.push_back("logprob_unavailable");
    return out;
}

Completion OpenAiCompatibleBackend::complete(const CompletionRequest& request) {
    const std::string sample_id = request.sample ? request.sample->id : std::string{};
    const ParsedUrl url = parse_url(endpoint_.base_url);
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::duration<double>(endpoint_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const std::string body = build_chat_request(endpoint_, request).dump();
    auto res = client.Post(url.path + "/chat/completions", headers, body, "application/json");
    if (!res) {
        throw TransportError("request to " + url.origin + " failed: " + httplib::to_string(res.error()), sample_id);
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + url.origin, sample_id);
    }
    if (res->status != 200) {
        if (request.want_logprobs && res->body.find("logprob") != std::string::npos) {
            throw CapabilityError("endpoint '" + endpoint_.model_id +
                                  "' rejected the logprobs request; use prompt-guided mode");
        }
        throw Error("HTTP " + std::to_string(res->status) + " from " + url.origin + ": " + res->body.substr(0, 200));
    }
    Completion out;
    try {
        out = parse_chat_response(json::parse(res->body), request.want_logprobs);
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed chat response: ") + e.what(), sample_id);
    }
    out.timestamp = utc_now();
    return out;
}

}  // namespace lscl
