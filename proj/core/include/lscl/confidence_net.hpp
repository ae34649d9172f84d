#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "lscl/encoder.hpp"
#include "lscl/loss.hpp"
#include "lscl/types.hpp"

namespace lscl {

struct NetConfig {
    int conv_kernel_size = 3;
    int conv_stride = 1;
    int conv_padding = 1;  // "same" padding for kernel 3, stride 1
    int attention_heads = 4;
    int hidden_dim = 32;
    double dropout = 0.1;
    double learning_rate = 5e-4;
    double weight_decay = 1e-4;
    double delta = 0.15;
    double alpha = 0.5;
    double beta = 0.1;
    int epochs = 30;
    int batch_size = 64;
    std::uint64_t seed = 0;
    PenaltyVariant penalty_variant = PenaltyVariant::Entropy;

    void validate() const;
    bool operator==(const NetConfig&) const = default;
};

nlohmann::json to_json(const NetConfig& config);
NetConfig net_config_from_json(const nlohmann::json& j);

using ParameterMap = std::map<std::string, Eigen::MatrixXd>;

/// Uniform fan-in initialization, deterministic in config.seed.
ParameterMap init_parameters(const NetConfig& config, const EncoderSpec& encoder);

/// Network inputs for one record.
struct NetInput {
    Eigen::MatrixXd question;  // tokens x embedding_dim
    Eigen::MatrixXd answer;
    double p_hat = 0.5;
};

/// The answer string the network reads: the raw reply, followed by the text
/// of the option it selected when that option exists.
std::string answer_text_for(const ConfidenceRecord& record);

/// Flattened network input used for SMOTE interpolation:
/// [question_tokens, answer_tokens, p_hat, question rows (padded), answer rows (padded)].
std::vector<double> record_features(const TextEncoder& encoder, const EncoderSpec& spec,
                                    const ConfidenceRecord& record);
NetInput input_from_features(std::span<const double> features, const EncoderSpec& spec);

/// Encodes a record, or decodes the feature payload of a synthetic record.
NetInput make_input(const TextEncoder& encoder, const EncoderSpec& spec, const ConfidenceRecord& record);

struct ForwardOutput {
    double c_hat = 0.5;
    double w0 = 0.5;
    /// x_q, x_a, x_related, x_diff, x_p, fused, boundary_intensity.
    std::map<std::string, Eigen::MatrixXd> intermediates;
};

/// Inference-mode forward pass (no dropout). Throws ValidationError naming
/// the stage on a shape mismatch.
ForwardOutput forward(const ParameterMap& params, const NetConfig& config, const Eigen::MatrixXd& e_q,
                      const Eigen::MatrixXd& e_a, double p_hat);

struct LossTerms {
    double huber = 0.0;
    double gated_mse = 0.0;
    double penalty = 0.0;
    double total = 0.0;
    double grad_c_hat = 0.0;  // d total / d c_hat
    double grad_w0 = 0.0;     // d total / d w0
};

/// Three-term loss for one sample with analytic gradients. Throws
/// NumericError naming the offending term when anything is non-finite.
LossTerms compute_loss(double c_hat, double w0, double c, double p_hat, const NetConfig& config);
LossTerms compute_loss(const ForwardOutput& output, double c, double p_hat, const NetConfig& config);

/// Gradient of the total loss for one sample with respect to every
/// parameter, in inference mode (no dropout).
ParameterMap parameter_gradients(const ParameterMap& params, const NetConfig& config, const NetInput& input, double c,
                                 LossTerms* terms = nullptr);

struct EpochStats {
    int epoch = 0;
    double huber = 0.0;
    double gated_mse = 0.0;
    double penalty = 0.0;
    double total = 0.0;
};

struct ModelCheckpoint {
    ParameterMap parameters;
    NetConfig net_config;
    EncoderSpec encoder_spec;
    std::string training_data_fingerprint;
    double final_train_loss = 0.0;
    std::string created_at;
    std::vector<EpochStats> loss_curve;
    /// Set when training stopped on a non-finite loss.
    std::optional<std::string> diagnostic;
};

std::string fingerprint_records(std::span<const ConfidenceRecord> records);

using EpochCallback = std::function<void(const EpochStats&)>;

/// AdamW over shuffled mini-batches of every record (train split or
/// synthetic). Deterministic in config.seed.
ModelCheckpoint train(std::span<const ConfidenceRecord> records, const EncoderSpec& encoder,
                      const NetConfig& config, const EpochCallback& on_epoch = {});

/// Sets predicted_confidence on each record. Reads question, answer text and
/// token probability only. Throws ValidationError when `runtime_encoder`
/// differs from the checkpoint's encoder.
std::vector<ConfidenceRecord> predict(const ModelCheckpoint& checkpoint,
                                      std::span<const ConfidenceRecord> records,
                                      const EncoderSpec& runtime_encoder);
std::vector<ConfidenceRecord> predict(const ModelCheckpoint& checkpoint,
                                      std::span<const ConfidenceRecord> records);

/// Writes `<stem>.tensors` (named-tensor archive) and `<stem>.json` (sidecar).
void save_checkpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& stem);
ModelCheckpoint load_checkpoint(const std::filesystem::path& stem);

std::string loss_curve_csv(std::span<const EpochStats> curve);

}  // namespace lscl
