#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscl/gateway.hpp"
#include "lscl/types.hpp"

namespace lscl {

struct ProbRange {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(double p) const { return p >= lo && p <= hi; }
};

enum class UnknowMode {
    ConfidentWrong,  // wrong answer, high token probability
    Diffuse,         // random answer, low token probability
};

/// How the simulated model reports confidence when asked to verbalize it.
enum class VerbalizedMode {
    Mirror,       // reports its internal probability, rounded to whole percent
    Unparseable,  // never gives a number
};

/// Planted knowledge state per sample plus the behaviour of each state.
/// Identical profile and seed yield bit-identical responses.
struct SimulatedKnowledgeProfile {
    std::string model_id = "simulated";
    std::unordered_map<std::string, KnowledgeLabel> planted;
    ProbRange know_prob_range{0.90, 1.00};
    ProbRange sciolism_prob_range{0.30, 0.70};
    ProbRange confident_wrong_range{0.85, 1.00};
    ProbRange diffuse_range{0.00, 0.35};
    UnknowMode unknow_mode = UnknowMode::ConfidentWrong;
    /// Probability that a Sciolism answer is correct; keeps per-bin accuracy
    /// between the labeling cutoffs.
    double sciolism_accuracy = 0.55;
    VerbalizedMode verbalized_mode = VerbalizedMode::Mirror;
    /// Share of prior/posterior replies that are not a valid single word.
    double garble_rate = 0.02;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const SimulatedKnowledgeProfile& profile);
SimulatedKnowledgeProfile profile_from_json(const nlohmann::json& j);

/// The simulated model's token-probability answer for `sample`.
/// Throws ValidationError when the sample id is not in the profile.
LLMResponse simulate(const SimulatedKnowledgeProfile& profile, const QASample& sample);

/// Backend answering every built-in prompt kind from a profile.
class SimulatedBackend : public CompletionBackend {
public:
    explicit SimulatedBackend(SimulatedKnowledgeProfile profile);

    Completion complete(const CompletionRequest& request) override;
    const SimulatedKnowledgeProfile& profile() const { return profile_; }

private:
    SimulatedKnowledgeProfile profile_;
};

/// Parameters of the synthetic question corpus used for offline runs.
struct CorpusSpec {
    std::size_t train_size = 2000;
    std::size_t validation_size = 0;
    std::size_t test_size = 500;
    double know_share = 0.60;
    double sciolism_share = 0.25;  // remainder is Unknow
    std::size_t topics_per_state = 12;
    std::size_t filler_vocabulary = 150;
    std::size_t filler_words = 6;
    std::uint64_t seed = 7;
};

struct SyntheticCorpus {
    std::vector<QASample> samples;
    SimulatedKnowledgeProfile profile;
};

/// Generates four-option questions whose topic words determine the planted
/// state, and a matching profile.
SyntheticCorpus generate_corpus(const CorpusSpec& spec, const SimulatedKnowledgeProfile& base = {});

}  // namespace lscl
