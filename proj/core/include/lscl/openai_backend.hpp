#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "lscl/gateway.hpp"

namespace lscl {

/// OpenAI-compatible chat-completions client (`POST {base_url}/chat/completions`).
/// The API key is read from `endpoint.api_key_env` at construction; an empty
/// variable name sends no Authorization header.
class OpenAiCompatibleBackend : public CompletionBackend {
public:
    explicit OpenAiCompatibleBackend(LLMEndpointConfig endpoint);

    Completion complete(const CompletionRequest& request) override;

private:
    LLMEndpointConfig endpoint_;
    std::string api_key_;
};

nlohmann::json build_chat_request(const LLMEndpointConfig& endpoint, const CompletionRequest& request);

/// Extracts the message text and chosen-token probabilities. Tokens whose
/// logprob is missing are skipped and flagged "logprob_unavailable".
Completion parse_chat_response(const nlohmann::json& body, bool want_logprobs);

}  // namespace lscl
