#include "lscl/simulator.hpp"

#include <array>
#include <cmath>

#include "lscl/error.hpp"
#include "lscl/hashing.hpp"
#include "lscl/random.hpp"
#include "lscl/text.hpp"

namespace lscl {

using nlohmann::json;

namespace {

constexpr const char* kSimulatedTimestamp = "1970-01-01T00:00:00Z";

// Independent random stream per (profile seed, sample, purpose).
Rng stream(std::uint64_t seed, std::string_view sample_id, std::uint64_t purpose) {
    return Rng(splitmix64(fnv1a64(sample_id) ^ splitmix64(seed + 0x51ED270B27A5D5C1ULL * (purpose + 1))));
}

void check_range(const ProbRange& r, const char* name) {
    if (!(r.lo >= 0.0 && r.hi <= 1.0 && r.lo <= r.hi)) {
        throw ConfigError(std::string("simulator: ") + name + " must be a sub-interval of [0,1]");
    }
}

std::string_view to_string(UnknowMode mode) {
    return mode == UnknowMode::ConfidentWrong ? "confident_wrong" : "diffuse";
}

std::string_view to_string(VerbalizedMode mode) {
    return mode == VerbalizedMode::Mirror ? "mirror" : "unparseable";
}

json range_json(const ProbRange& r) { return json::array({r.lo, r.hi}); }

ProbRange range_from(const json& j, const char* key, ProbRange fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    return {a.at(0).get<double>(), a.at(1).get<double>()};
}

std::string wrong_key(const QASample& sample, Rng& rng) {
    if (sample.options.empty()) return sample.gold_answer == "true" ? "false" : "true";
    std::vector<std::string> others;
    for (const auto& o : sample.options) {
        if (text::normalize_answer(o.key) != text::normalize_answer(sample.gold_answer)) others.push_back(o.key);
    }
    if (others.empty()) return sample.gold_answer;
    return others[static_cast<std::size_t>(rng.below(others.size()))];
}

std::string random_key(const QASample& sample, Rng& rng) {
    if (sample.options.empty()) return rng.bernoulli(0.5) ? "true" : "false";
    return sample.options[static_cast<std::size_t>(rng.below(sample.options.size()))].key;
}

std::string answer_surface(const std::string& key) {
    if (key == "true") return "True";
    if (key == "false") return "False";
    return key;
}

}  // namespace

void SimulatedKnowledgeProfile::validate() const {
    check_range(know_prob_range, "know_prob_range");
    check_range(sciolism_prob_range, "sciolism_prob_range");
    check_range(confident_wrong_range, "confident_wrong_range");
    check_range(diffuse_range, "diffuse_range");
    if (!(sciolism_accuracy >= 0.0 && sciolism_accuracy <= 1.0)) throw ConfigError("simulator: sciolism_accuracy out of [0,1]");
    if (!(garble_rate >= 0.0 && garble_rate <= 1.0)) throw ConfigError("simulator: garble_rate out of [0,1]");
}

json to_json(const SimulatedKnowledgeProfile& p) {
    json planted = json::object();
    for (const auto& [id, state] : p.planted) planted[id] = std::string(to_string(state));
    return json{{"model_id", p.model_id},
                {"know_prob_range", range_json(p.know_prob_range)},
                {"sciolism_prob_range", range_json(p.sciolism_prob_range)},
                {"confident_wrong_range", range_json(p.confident_wrong_range)},
                {"diffuse_range", range_json(p.diffuse_range)},
                {"unknow_mode", std::string(to_string(p.unknow_mode))},
                {"sciolism_accuracy", p.sciolism_accuracy},
                {"verbalized_mode", std::string(to_string(p.verbalized_mode))},
                {"garble_rate", p.garble_rate},
                {"seed", p.seed},
                {"planted", planted}};
}

SimulatedKnowledgeProfile profile_from_json(const json& j) {
    SimulatedKnowledgeProfile p;
    p.model_id = j.value("model_id", p.model_id);
    p.know_prob_range = range_from(j, "know_prob_range", p.know_prob_range);
    p.sciolism_prob_range = range_from(j, "sciolism_prob_range", p.sciolism_prob_range);
    p.confident_wrong_range = range_from(j, "confident_wrong_range", p.confident_wrong_range);
    p.diffuse_range = range_from(j, "diffuse_range", p.diffuse_range);
    const auto mode = j.value("unknow_mode", std::string("confident_wrong"));
    if (mode == "confident_wrong") {
        p.unknow_mode = UnknowMode::ConfidentWrong;
    } else if (mode == "diffuse") {
        p.unknow_mode = UnknowMode::Diffuse;
    } else {
        throw ConfigError("simulator: unknown unknow_mode '" + mode + "'");
    }
    p.sciolism_accuracy = j.value("sciolism_accuracy", p.sciolism_accuracy);
    const auto verbal = j.value("verbalized_mode", std::string("mirror"));
    if (verbal == "mirror") {
        p.verbalized_mode = VerbalizedMode::Mirror;
    } else if (verbal == "unparseable") {
        p.verbalized_mode = VerbalizedMode::Unparseable;
    } else {
        throw ConfigError("simulator: unknown verbalized_mode '" + verbal + "'");
    }
    p.garble_rate = j.value("garble_rate", p.garble_rate);
    p.seed = j.value("seed", p.seed);
    if (j.contains("planted")) {
        for (const auto& [id, state] : j["planted"].items()) p.planted[id] = label_from_string(state.get<std::string>());
    }
    p.validate();
    return p;
}

namespace {

struct Draw {
    KnowledgeLabel state = KnowledgeLabel::Unknow;
    double p = 0.0;
    std::string key;
};

Draw draw(const SimulatedKnowledgeProfile& profile, const QASample& sample) {
    const auto it = profile.planted.find(sample.id);
    if (it == profile.planted.end()) throw ValidationError("simulator: no planted state for sample '" + sample.id + "'");
    Rng rng = stream(profile.seed, sample.id, 0);
    Draw d;
    d.state = it->second;
    switch (d.state) {
        case KnowledgeLabel::Know:
            d.p = rng.uniform(profile.know_prob_range.lo, profile.know_prob_range.hi);
            d.key = sample.gold_answer;
            break;
        case KnowledgeLabel::Sciolism: {
            d.p = rng.uniform(profile.sciolism_prob_range.lo, profile.sciolism_prob_range.hi);
            const bool correct = rng.bernoulli(profile.sciolism_accuracy);
            d.key = correct ? sample.gold_answer : wrong_key(sample, rng);
            break;
        }
        case KnowledgeLabel::Unknow:
            if (profile.unknow_mode == UnknowMode::ConfidentWrong) {
                d.p = rng.uniform(profile.confident_wrong_range.lo, profile.confident_wrong_range.hi);
                d.key = wrong_key(sample, rng);
            } else {
                d.p = rng.uniform(profile.diffuse_range.lo, profile.diffuse_range.hi);
                d.key = random_key(sample, rng);
            }
            break;
    }
    return d;
}

}  // namespace

LLMResponse simulate(const SimulatedKnowledgeProfile& profile, const QASample& sample) {
    const Draw d = draw(profile, sample);
    LLMResponse r;
    r.sample_id = sample.id;
    r.model_id = profile.model_id;
    r.template_name = std::string(to_string(TemplateName::TokenProbs));
    r.answer_text = answer_surface(d.key);
    r.extracted_answer = text::normalize_answer(d.key);
    r.token_probs = {d.p};
    r.aggregate_prob = d.p;
    r.timestamp = kSimulatedTimestamp;
    return r;
}

SimulatedBackend::SimulatedBackend(SimulatedKnowledgeProfile profile) : profile_(std::move(profile)) {
    profile_.validate();
}

Completion SimulatedBackend::complete(const CompletionRequest& request) {
    if (request.sample == nullptr || request.tmpl == nullptr) {
        throw ValidationError("simulator: request without sample or template");
    }
    const QASample& sample = *request.sample;
    const Draw d = draw(profile_, sample);
    Completion out;
    out.timestamp = kSimulatedTimestamp;
    const std::string answer = answer_surface(d.key);

    Rng style = stream(profile_.seed, sample.id, 1);
    Rng garble = stream(profile_.seed, sample.id, 2 + static_cast<std::uint64_t>(request.tmpl->name));
    const bool garbled = garble.bernoulli(profile_.garble_rate);

    switch (request.tmpl->name) {
        case TemplateName::TokenProbs:
            out.text = answer;
            if (request.want_logprobs) out.token_probs = {d.p};
            break;
        case TemplateName::GuidingByPrompt:
        case TemplateName::PromptGuidedLscl: {
            if (profile_.verbalized_mode == VerbalizedMode::Unparseable) {
                out.text = answer + ", very confident";
                break;
            }
            const long percent = std::lround(d.p * 100.0);
            char buf[128];
            switch (style.below(3)) {
                case 0:
                    std::snprintf(buf, sizeof buf, "Answer: %s. Confidence: %ld%%", answer.c_str(), percent);
                    break;
                case 1:
                    std::snprintf(buf, sizeof buf, "%s (confidence %.2f)", answer.c_str(), static_cast<double>(percent) / 100.0);
                    break;
                default:
                    std::snprintf(buf, sizeof buf, "The answer is %s, and my confidence level is %ld%%.", answer.c_str(), percent);
                    break;
            }
            out.text = buf;
            break;
        }
        case TemplateName::PriorPrompt:
        case TemplateName::PosteriorPrompt: {
            const bool prior = request.tmpl->name == TemplateName::PriorPrompt;
            if (garbled) {
                out.text = prior ? "I am not sure." : "Maybe.";
                break;
            }
            bool positive = true;
            switch (d.state) {
                case KnowledgeLabel::Know: positive = true; break;
                case KnowledgeLabel::Sciolism: positive = d.p >= (prior ? 0.5 : 0.6); break;
                case KnowledgeLabel::Unknow:
                    positive = profile_.unknow_mode == UnknowMode::ConfidentWrong && !style.bernoulli(0.3);
                    break;
            }
            if (prior) {
                out.text = positive ? "Yes" : "No";
            } else {
                out.text = positive ? "Confident" : "Unconfident";
            }
            break;
        }
    }
    return out;
}

namespace {

std::string pseudo_word(Rng& rng) {
    static constexpr std::array<const char*, 24> kSyllables = {"ka", "lo", "mi", "ren", "su", "ta", "vor", "ne",
                                                               "pi", "dal", "qu", "ox", "zel", "bri", "fa", "gu",
                                                               "hel", "jo", "wen", "yam", "cor", "tri", "ul", "ses"};
    std::string w;
    const auto n = 2 + rng.below(2);
    for (std::uint64_t i = 0; i < n; ++i) w += kSyllables[static_cast<std::size_t>(rng.below(kSyllables.size()))];
    return w;
}

std::vector<std::string> vocabulary(Rng& rng, std::size_t n, std::unordered_map<std::string, int>& used) {
    std::vector<std::string> out;
    while (out.size() < n) {
        auto w = pseudo_word(rng);
        if (used.emplace(w, 0).second) out.push_back(std::move(w));
    }
    return out;
}

}  // namespace

SyntheticCorpus generate_corpus(const CorpusSpec& spec, const SimulatedKnowledgeProfile& base) {
    if (spec.know_share < 0.0 || spec.sciolism_share < 0.0 || spec.know_share + spec.sciolism_share > 1.0) {
        throw ConfigError("corpus: state shares must be non-negative and sum to at most 1");
    }
    if (spec.topics_per_state == 0 || spec.filler_vocabulary == 0) throw ConfigError("corpus: empty vocabulary");
    Rng rng(splitmix64(spec.seed ^ 0xC0A9F0E5ULL));
    std::unordered_map<std::string, int> used;
    // Two keywords per topic; topics are grouped by the state they plant.
    std::array<std::vector<std::pair<std::string, std::string>>, kNumLabels> topics;
    for (auto& group : topics) {
        for (std::size_t t = 0; t < spec.topics_per_state; ++t) {
            auto words = vocabulary(rng, 2, used);
            group.emplace_back(words[0], words[1]);
        }
    }
    const auto filler = vocabulary(rng, spec.filler_vocabulary, used);
    auto fill = [&](std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += filler[static_cast<std::size_t>(rng.below(filler.size()))];
        }
        return s;
    };

    SyntheticCorpus corpus;
    corpus.profile = base;
    corpus.profile.planted.clear();
    const std::size_t total = spec.train_size + spec.validation_size + spec.test_size;
    corpus.samples.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        const double u = rng.uniform();
        KnowledgeLabel state = KnowledgeLabel::Unknow;
        if (u < spec.know_share) {
            state = KnowledgeLabel::Know;
        } else if (u < spec.know_share + spec.sciolism_share) {
            state = KnowledgeLabel::Sciolism;
        }
        const auto& group = topics[label_index(state)];
        const auto& [kw1, kw2] = group[static_cast<std::size_t>(rng.below(group.size()))];

        QASample s;
        char id[32];
        std::snprintf(id, sizeof id, "syn-%06zu", i + 1);
        s.id = id;
        s.question = "Regarding " + kw1 + " and " + kw2 + ", which statement about " + fill(spec.filler_words) +
                     " is correct?";
        for (const char* key : {"A", "B", "C", "D"}) s.options.push_back({key, fill(3)});
        s.gold_answer = s.options[static_cast<std::size_t>(rng.below(4))].key;
        s.domain_tag = "synthetic";
        s.split = i < spec.train_size                          ? Split::Train
                  : i < spec.train_size + spec.validation_size ? Split::Validation
                                                               : Split::Test;
        corpus.profile.planted[s.id] = state;
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

}  // namespace lscl
