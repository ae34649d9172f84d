#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace lscl {

struct EncoderSpec {
    /// "hash" (or "hash-<seed>") selects the built-in hash encoder.
    std::string encoder_id = "hash";
    int embedding_dim = 64;
    int max_question_tokens = 32;
    int max_answer_tokens = 16;
    bool frozen = true;

    void validate() const;
    bool operator==(const EncoderSpec&) const = default;
};

nlohmann::json to_json(const EncoderSpec& spec);
EncoderSpec encoder_spec_from_json(const nlohmann::json& j);

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    /// One row per token, truncated to `max_tokens` rows.
    virtual Eigen::MatrixXd encode(std::string_view text, int max_tokens) const = 0;
    virtual int dimension() const = 0;
};

/// Maps each token to a seeded pseudo-random unit vector. Text without any
/// token encodes as the reserved "[empty]" token.
class HashEncoder : public TextEncoder {
public:
    HashEncoder(int dimension, std::uint64_t seed);

    Eigen::MatrixXd encode(std::string_view text, int max_tokens) const override;
    int dimension() const override { return dimension_; }
    Eigen::VectorXd token_vector(std::string_view token) const;

private:
    int dimension_;
    std::uint64_t seed_;
};

/// Throws CapabilityError for encoder ids other than the built-in hash encoder.
std::unique_ptr<TextEncoder> make_encoder(const EncoderSpec& spec);

struct EncodedPair {
    Eigen::MatrixXd question;  // tokens x embedding_dim
    Eigen::MatrixXd answer;
};

EncodedPair encode_pair(const TextEncoder& encoder, const EncoderSpec& spec, std::string_view question,
                        std::string_view answer);
EncodedPair encode_pair(const EncoderSpec& spec, std::string_view question, std::string_view answer);

}  // namespace lscl
