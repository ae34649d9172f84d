#pragma once

#include <nlohmann/json.hpp>

#include "lscl/types.hpp"

namespace lscl {

void to_json(nlohmann::json& j, const AnswerOption& option);
void from_json(const nlohmann::json& j, AnswerOption& option);

void to_json(nlohmann::json& j, const QASample& sample);
void from_json(const nlohmann::json& j, QASample& sample);

void to_json(nlohmann::json& j, const LLMResponse& response);
void from_json(const nlohmann::json& j, LLMResponse& response);

void to_json(nlohmann::json& j, const ConfidenceRecord& record);
void from_json(const nlohmann::json& j, ConfidenceRecord& record);

}  // namespace lscl
