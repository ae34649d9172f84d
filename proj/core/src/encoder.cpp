#include "lscl/encoder.hpp"

#include <charconv>

#include "lscl/error.hpp"
#include "lscl/hashing.hpp"
#include "lscl/random.hpp"
#include "lscl/text.hpp"

namespace lscl {

using nlohmann::json;

namespace {

std::optional<std::uint64_t> hash_seed(std::string_view id) {
    if (id == "hash") return 0;
    constexpr std::string_view prefix = "hash-";
    if (!id.starts_with(prefix)) return std::nullopt;
    const auto digits = id.substr(prefix.size());
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) return std::nullopt;
    return seed;
}

}  // namespace

void EncoderSpec::validate() const {
    if (encoder_id.empty()) throw ConfigError("encoder: encoder_id is empty");
    if (embedding_dim < 1) throw ConfigError("encoder: embedding_dim must be positive");
    if (max_question_tokens < 1 || max_answer_tokens < 1) throw ConfigError("encoder: token limits must be positive");
}

json to_json(const EncoderSpec& spec) {
    return json{{"encoder_id", spec.encoder_id},
                {"embedding_dim", spec.embedding_dim},
                {"max_question_tokens", spec.max_question_tokens},
                {"max_answer_tokens", spec.max_answer_tokens},
                {"frozen", spec.frozen}};
}

EncoderSpec encoder_spec_from_json(const json& j) {
    EncoderSpec s;
    s.encoder_id = j.value("encoder_id", s.encoder_id);
    s.embedding_dim = j.value("embedding_dim", s.embedding_dim);
    s.max_question_tokens = j.value("max_question_tokens", s.max_question_tokens);
    s.max_answer_tokens = j.value("max_answer_tokens", s.max_answer_tokens);
    s.frozen = j.value("frozen", s.frozen);
    s.validate();
    return s;
}

HashEncoder::HashEncoder(int dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension < 1) throw ConfigError("HashEncoder: dimension must be positive");
}

Eigen::VectorXd HashEncoder::token_vector(std::string_view token) const {
    Rng rng(fnv1a64(token) ^ splitmix64(seed_));
    Eigen::VectorXd v(dimension_);
    for (int i = 0; i < dimension_; ++i) v(i) = rng.normal();
    return v / v.norm();
}

Eigen::MatrixXd HashEncoder::encode(std::string_view text, int max_tokens) const {
    auto tokens = text::tokenize(text);
    if (tokens.empty()) tokens.emplace_back("[empty]");
    const auto n = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(std::max(max_tokens, 1)));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dimension_);
    for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = token_vector(tokens[i]).transpose();
    return out;
}

std::unique_ptr<TextEncoder> make_encoder(const EncoderSpec& spec) {
    spec.validate();
    const auto seed = hash_seed(spec.encoder_id);
    if (!seed) {
        throw CapabilityError("encoder '" + spec.encoder_id + "' is not available; only the built-in hash encoder is supported");
    }
    if (!spec.frozen) throw CapabilityError("encoder: fine-tuning the hash encoder is not supported");
    return std::make_unique<HashEncoder>(spec.embedding_dim, *seed);
}

EncodedPair encode_pair(const TextEncoder& encoder, const EncoderSpec& spec, std::string_view question,
                        std::string_view answer) {
    return EncodedPair{encoder.encode(question, spec.max_question_tokens), encoder.encode(answer, spec.max_answer_tokens)};
}

EncodedPair encode_pair(const EncoderSpec& spec, std::string_view question, std::string_view answer) {
    const auto encoder = make_encoder(spec);
    return encode_pair(*encoder, spec, question, answer);
}

}  // namespace lscl
