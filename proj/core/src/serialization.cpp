#include "lscl/serialization.hpp"

#include "lscl/error.hpp"

namespace lscl {

using nlohmann::json;

namespace {

template <typename T>
void optional_to(json& j, const char* key, const std::optional<T>& value) {
    if (value) {
        j[key] = *value;
    } else {
        j[key] = nullptr;
    }
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

void to_json(json& j, const AnswerOption& option) { j = json{{"key", option.key}, {"text", option.text}}; }

void from_json(const json& j, AnswerOption& option) {
    if (j.is_array() && j.size() == 2) {
        option.key = j.at(0).get<std::string>();
        option.text = j.at(1).get<std::string>();
        return;
    }
    option.key = j.at("key").get<std::string>();
    option.text = j.value("text", std::string{});
}

void to_json(json& j, const QASample& sample) {
    j = json{{"id", sample.id},
             {"question", sample.question},
             {"options", sample.options},
             {"gold_answer", sample.gold_answer},
             {"domain_tag", sample.domain_tag},
             {"split", std::string(to_string(sample.split))}};
}

void from_json(const json& j, QASample& sample) {
    sample.id = j.at("id").get<std::string>();
    sample.question = j.at("question").get<std::string>();
    sample.options.clear();
    if (auto it = j.find("options"); it != j.end() && !it->is_null()) {
        if (it->is_object()) {
            for (const auto& [key, text] : it->items()) sample.options.push_back({key, text.get<std::string>()});
        } else {
            sample.options = it->get<std::vector<AnswerOption>>();
        }
    }
    sample.gold_answer = j.value("gold_answer", std::string{});
    sample.domain_tag = j.value("domain_tag", std::string{});
    sample.split = split_from_string(j.value("split", std::string("train")));
}

void to_json(json& j, const LLMResponse& r) {
    j = json{{"sample_id", r.sample_id},       {"model_id", r.model_id},
             {"template", r.template_name},    {"answer_text", r.answer_text},
             {"extracted_answer", r.extracted_answer}, {"token_probs", r.token_probs}};
    optional_to(j, "aggregate_prob", r.aggregate_prob);
    optional_to(j, "verbalized_confidence", r.verbalized_confidence);
    j["flags"] = r.flags;
    j["timestamp"] = r.timestamp;
}

void from_json(const json& j, LLMResponse& r) {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.model_id = j.value("model_id", std::string{});
    r.template_name = j.value("template", std::string{});
    r.answer_text = j.value("answer_text", std::string{});
    r.extracted_answer = j.value("extracted_answer", std::string{});
    r.token_probs = j.value("token_probs", std::vector<double>{});
    r.aggregate_prob = optional_from<double>(j, "aggregate_prob");
    r.verbalized_confidence = optional_from<double>(j, "verbalized_confidence");
    r.flags = j.value("flags", std::vector<std::string>{});
    r.timestamp = j.value("timestamp", std::string{});
}

void to_json(json& j, const ConfidenceRecord& r) {
    j = json{{"sample", r.sample}, {"response", r.response}, {"is_correct", r.is_correct}, {"catp", r.catp}};
    j["label"] = r.label ? json(std::string(to_string(*r.label))) : json(nullptr);
    optional_to(j, "predicted_confidence", r.predicted_confidence);
    j["predicted_label"] = r.predicted_label ? json(std::string(to_string(*r.predicted_label))) : json(nullptr);
    j["synthetic"] = r.synthetic;
    if (!r.features.empty()) j["features"] = r.features;
}

void from_json(const json& j, ConfidenceRecord& r) {
    r.sample = j.at("sample").get<QASample>();
    r.response = j.at("response").get<LLMResponse>();
    r.is_correct = j.at("is_correct").get<bool>();
    r.catp = j.at("catp").get<double>();
    auto label = optional_from<std::string>(j, "label");
    r.label = label ? std::optional(label_from_string(*label)) : std::nullopt;
    r.predicted_confidence = optional_from<double>(j, "predicted_confidence");
    auto predicted = optional_from<std::string>(j, "predicted_label");
    r.predicted_label = predicted ? std::optional(label_from_string(*predicted)) : std::nullopt;
    r.synthetic = j.value("synthetic", false);
    r.features = j.value("features", std::vector<double>{});
}

}  // namespace lscl
