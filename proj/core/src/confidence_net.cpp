#include "lscl/confidence_net.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <numeric>
#include <tuple>

#include <spdlog/spdlog.h>

#include "lscl/autograd.hpp"
#include "lscl/dataset.hpp"
#include "lscl/error.hpp"
#include "lscl/hashing.hpp"
#include "lscl/random.hpp"
#include "lscl/text.hpp"

namespace lscl {

using nlohmann::json;
using autograd::Tape;
using autograd::Var;
using Eigen::MatrixXd;

void NetConfig::validate() const {
    if (conv_kernel_size < 1 || conv_stride < 1 || conv_padding < 0) throw ConfigError("net: invalid convolution geometry");
    if (attention_heads < 1 || hidden_dim < 1) throw ConfigError("net: heads and hidden_dim must be positive");
    if (hidden_dim % attention_heads != 0) throw ConfigError("net: hidden_dim must be divisible by attention_heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("net: dropout must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("net: learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("net: weight_decay must be >= 0");
    if (!(delta > 0.0)) throw ConfigError("net: delta must be positive");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("net: alpha and beta must be >= 0");
    if (epochs < 0 || batch_size < 1) throw ConfigError("net: epochs must be non-negative and batch_size positive");
}

json to_json(const NetConfig& c) {
    return json{{"conv_kernel_size", c.conv_kernel_size},
                {"conv_stride", c.conv_stride},
                {"conv_padding", c.conv_padding},
                {"attention_heads", c.attention_heads},
                {"hidden_dim", c.hidden_dim},
                {"dropout", c.dropout},
                {"learning_rate", c.learning_rate},
                {"weight_decay", c.weight_decay},
                {"delta", c.delta},
                {"alpha", c.alpha},
                {"beta", c.beta},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"seed", c.seed},
                {"penalty_variant", std::string(to_string(c.penalty_variant))}};
}

NetConfig net_config_from_json(const json& j) {
    NetConfig c;
    c.conv_kernel_size = j.value("conv_kernel_size", c.conv_kernel_size);
    c.conv_stride = j.value("conv_stride", c.conv_stride);
    c.conv_padding = j.value("conv_padding", c.conv_padding);
    c.attention_heads = j.value("attention_heads", c.attention_heads);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.dropout = j.value("dropout", c.dropout);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.delta = j.value("delta", c.delta);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    if (j.contains("penalty_variant")) c.penalty_variant = penalty_variant_from_string(j.at("penalty_variant").get<std::string>());
    c.validate();
    return c;
}

namespace {

constexpr int kFusionTokens = 5;

struct ParamShape {
    std::string name;
    int rows;
    int cols;
    int fan_in;
};

std::vector<ParamShape> parameter_shapes(const NetConfig& c, const EncoderSpec& e) {
    const int d = e.embedding_dim;
    const int h = c.hidden_dim;
    const int k = c.conv_kernel_size;
    const int head_in = kFusionTokens * h + 1;
    std::vector<ParamShape> s;
    auto linear = [&](const std::string& name, int in, int out) {
        s.push_back({name + ".W", in, out, in});
        s.push_back({name + ".b", 1, out, in});
    };
    linear("conv_q", k * d, h);
    linear("conv_a", k * d, h);
    for (const char* m : {"cross", "self"}) {
        for (const char* p : {"q", "k", "v", "o"}) linear(std::string(m) + "." + p, h, h);
    }
    linear("x_p", 1, h);
    linear("tok_q", d, h);
    linear("tok_a", d, h);
    linear("tok_related", h, h);
    linear("tok_diff", 1, h);
    linear("tok_p", h, h);
    linear("gate", head_in, 1);
    linear("pred", head_in, 1);
    return s;
}

using VarMap = std::map<std::string, Var>;

Var linear(Tape& t, const VarMap& p, const std::string& name, Var x) {
    return t.add_row(t.matmul(x, p.at(name + ".W")), p.at(name + ".b"));
}

Var multi_head_attention(Tape& t, const VarMap& p, const std::string& name, Var query, Var context, int heads) {
    const Var q = linear(t, p, name + ".q", query);
    const Var k = linear(t, p, name + ".k", context);
    const Var v = linear(t, p, name + ".v", context);
    const int width = static_cast<int>(t.value(q).cols());
    const int dh = width / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> outs;
    for (int h = 0; h < heads; ++h) {
        const Var qh = t.slice_cols(q, h * dh, dh);
        const Var kh = t.slice_cols(k, h * dh, dh);
        const Var vh = t.slice_cols(v, h * dh, dh);
        const Var attn = t.softmax_rows(t.scale(t.matmul(qh, t.transpose(kh)), scale));
        outs.push_back(t.matmul(attn, vh));
    }
    return linear(t, p, name + ".o", t.concat_cols(outs));
}

struct Graph {
    Var c_hat;
    Var w0;
    std::map<std::string, Var> intermediates;
};

void check_input(const ParameterMap& params, const NetConfig& config, const MatrixXd& e_q, const MatrixXd& e_a) {
    const auto expected = params.at("conv_q.W").rows() / config.conv_kernel_size;
    auto fail = [](const std::string& stage, const std::string& msg) {
        throw ValidationError("forward: stage '" + stage + "': " + msg);
    };
    if (e_q.rows() < 1) fail("question_encoding", "no question tokens");
    if (e_a.rows() < 1) fail("answer_encoding", "no answer tokens");
    if (e_q.cols() != expected) {
        fail("question_encoding", "embedding width " + std::to_string(e_q.cols()) + " != " + std::to_string(expected));
    }
    if (e_a.cols() != expected) {
        fail("answer_encoding", "embedding width " + std::to_string(e_a.cols()) + " != " + std::to_string(expected));
    }
}

Graph build_graph(Tape& t, const VarMap& p, const NetConfig& c, const MatrixXd& e_q, const MatrixXd& e_a, double p_hat,
                  Rng* dropout_rng) {
    const Var eq = t.constant(e_q);
    const Var ea = t.constant(e_a);
    const Var x_q = t.gelu(linear(t, p, "conv_q", t.im2col(eq, c.conv_kernel_size, c.conv_stride, c.conv_padding)));
    const Var x_a = t.gelu(linear(t, p, "conv_a", t.im2col(ea, c.conv_kernel_size, c.conv_stride, c.conv_padding)));
    const Var x_related = multi_head_attention(t, p, "cross", x_q, x_a, c.attention_heads);
    const Var x_diff = t.cosine(t.mean_rows(x_q), t.mean_rows(x_a));
    MatrixXd pm(1, 1);
    pm(0, 0) = p_hat;
    const Var x_p = t.add(t.gelu(t.matmul(t.constant(pm), p.at("x_p.W"))), p.at("x_p.b"));

    const std::vector<Var> tokens{
        linear(t, p, "tok_q", t.mean_rows(eq)),
        linear(t, p, "tok_a", t.mean_rows(ea)),
        linear(t, p, "tok_related", t.mean_rows(x_related)),
        linear(t, p, "tok_diff", x_diff),
        linear(t, p, "tok_p", x_p),
    };
    const Var token_block = t.concat_rows(tokens);
    const Var fused = t.add(token_block, multi_head_attention(t, p, "self", token_block, token_block, c.attention_heads));
    Var flat = t.flatten(fused);
    if (dropout_rng != nullptr && c.dropout > 0.0) {
        const MatrixXd& v = t.value(flat);
        MatrixXd m(v.rows(), v.cols());
        const double keep = 1.0 - c.dropout;
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        flat = t.mask(flat, m);
    }
    MatrixXd pp(1, 1);
    pp(0, 0) = boundary_intensity(p_hat);
    const Var intensity = t.constant(pp);
    const std::vector<Var> head_parts{intensity, flat};
    const Var head_in = t.concat_cols(head_parts);

    Graph g;
    g.w0 = t.sigmoid(linear(t, p, "gate", head_in));
    g.c_hat = t.sigmoid(linear(t, p, "pred", head_in));
    g.intermediates = {{"x_q", x_q},          {"x_a", x_a},     {"x_related", x_related},         {"x_diff", x_diff},
                       {"x_p", x_p},          {"fused", fused}, {"boundary_intensity", intensity}};
    return g;
}

VarMap constant_params(Tape& t, const ParameterMap& params) {
    VarMap m;
    for (const auto& [name, value] : params) m.emplace(name, t.constant(value));
    return m;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void check_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericError(std::string("loss term '") + term + "' is non-finite");
}

}  // namespace

ParameterMap init_parameters(const NetConfig& config, const EncoderSpec& encoder) {
    config.validate();
    encoder.validate();
    Rng rng(splitmix64(config.seed ^ 0x1A17ULL));
    ParameterMap params;
    for (const auto& s : parameter_shapes(config, encoder)) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
        MatrixXd m(s.rows, s.cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-bound, bound);
        params.emplace(s.name, std::move(m));
    }
    return params;
}

std::string answer_text_for(const ConfidenceRecord& record) {
    std::string text = record.response.answer_text;
    const std::string key = text::normalize_answer(record.response.extracted_answer);
    if (key.empty()) return text;
    for (const auto& opt : record.sample.options) {
        if (text::normalize_answer(opt.key) == key && !opt.text.empty()) {
            text += " ";
            text += opt.text;
            break;
        }
    }
    return text;
}

std::vector<double> record_features(const TextEncoder& encoder, const EncoderSpec& spec, const ConfidenceRecord& record) {
    const auto pair = encode_pair(encoder, spec, record.sample.question, answer_text_for(record));
    const int d = spec.embedding_dim;
    std::vector<double> f(3 + static_cast<std::size_t>((spec.max_question_tokens + spec.max_answer_tokens) * d), 0.0);
    f[0] = static_cast<double>(pair.question.rows());
    f[1] = static_cast<double>(pair.answer.rows());
    f[2] = probability_input(record);
    std::size_t at = 3;
    for (Eigen::Index r = 0; r < pair.question.rows(); ++r) {
        for (int c = 0; c < d; ++c) f[at + static_cast<std::size_t>(r * d + c)] = pair.question(r, c);
    }
    at += static_cast<std::size_t>(spec.max_question_tokens * d);
    for (Eigen::Index r = 0; r < pair.answer.rows(); ++r) {
        for (int c = 0; c < d; ++c) f[at + static_cast<std::size_t>(r * d + c)] = pair.answer(r, c);
    }
    return f;
}

NetInput input_from_features(std::span<const double> features, const EncoderSpec& spec) {
    const int d = spec.embedding_dim;
    const auto expected = 3 + static_cast<std::size_t>((spec.max_question_tokens + spec.max_answer_tokens) * d);
    if (features.size() != expected) {
        throw ValidationError("feature vector has " + std::to_string(features.size()) + " entries, expected " +
                              std::to_string(expected));
    }
    const auto rows = [](double v, int max) { return std::clamp(static_cast<int>(std::lround(v)), 1, max); };
    const int nq = rows(features[0], spec.max_question_tokens);
    const int na = rows(features[1], spec.max_answer_tokens);
    NetInput in;
    in.p_hat = std::clamp(features[2], 0.0, 1.0);
    in.question.resize(nq, d);
    in.answer.resize(na, d);
    std::size_t at = 3;
    for (int r = 0; r < nq; ++r) {
        for (int c = 0; c < d; ++c) in.question(r, c) = features[at + static_cast<std::size_t>(r * d + c)];
    }
    at += static_cast<std::size_t>(spec.max_question_tokens * d);
    for (int r = 0; r < na; ++r) {
        for (int c = 0; c < d; ++c) in.answer(r, c) = features[at + static_cast<std::size_t>(r * d + c)];
    }
    return in;
}

NetInput make_input(const TextEncoder& encoder, const EncoderSpec& spec, const ConfidenceRecord& record) {
    if (record.synthetic && !record.features.empty()) return input_from_features(record.features, spec);
    auto pair = encode_pair(encoder, spec, record.sample.question, answer_text_for(record));
    return NetInput{std::move(pair.question), std::move(pair.answer), probability_input(record)};
}

ForwardOutput forward(const ParameterMap& params, const NetConfig& config, const MatrixXd& e_q, const MatrixXd& e_a,
                      double p_hat) {
    check_input(params, config, e_q, e_a);
    Tape t;
    const auto g = build_graph(t, constant_params(t, params), config, e_q, e_a, p_hat, nullptr);
    ForwardOutput out;
    out.c_hat = g.c_hat.scalar();
    out.w0 = g.w0.scalar();
    if (!std::isfinite(out.c_hat) || !std::isfinite(out.w0)) throw NumericError("forward: non-finite network output");
    for (const auto& [name, v] : g.intermediates) out.intermediates.emplace(name, t.value(v));
    return out;
}

LossTerms compute_loss(double c_hat, double w0, double c, double p_hat, const NetConfig& config) {
    LossTerms l;
    const double mu = gated_target(p_hat, w0);
    l.huber = huber(c, c_hat, config.delta);
    check_finite(l.huber, "huber");
    l.gated_mse = (c_hat - mu) * (c_hat - mu);
    check_finite(l.gated_mse, "gated_mse");
    l.penalty = penalty(p_hat, w0, config.penalty_variant);
    check_finite(l.penalty, "penalty");
    l.total = l.huber + config.alpha * l.gated_mse + config.beta * l.penalty;
    check_finite(l.total, "total");
    l.grad_c_hat = huber_grad(c, c_hat, config.delta) + 2.0 * config.alpha * (c_hat - mu);
    l.grad_w0 = -2.0 * config.alpha * (c_hat - mu) * (2.0 * p_hat - 1.0) +
                config.beta * penalty_grad(p_hat, w0, config.penalty_variant);
    check_finite(l.grad_c_hat, "grad_c_hat");
    check_finite(l.grad_w0, "grad_w0");
    return l;
}

LossTerms compute_loss(const ForwardOutput& output, double c, double p_hat, const NetConfig& config) {
    return compute_loss(output.c_hat, output.w0, c, p_hat, config);
}

ParameterMap parameter_gradients(const ParameterMap& params, const NetConfig& config, const NetInput& input, double c,
                                 LossTerms* terms) {
    check_input(params, config, input.question, input.answer);
    ParameterMap grads;
    for (const auto& [name, v] : params) grads.emplace(name, MatrixXd::Zero(v.rows(), v.cols()));
    Tape t;
    VarMap pv;
    for (const auto& [name, value] : params) pv.emplace(name, t.parameter(value, &grads.at(name)));
    const auto g = build_graph(t, pv, config, input.question, input.answer, input.p_hat, nullptr);
    const auto loss = compute_loss(g.c_hat.scalar(), g.w0.scalar(), c, input.p_hat, config);
    const std::pair<Var, MatrixXd> seeds[] = {
        {g.c_hat, MatrixXd::Constant(1, 1, loss.grad_c_hat)},
        {g.w0, MatrixXd::Constant(1, 1, loss.grad_w0)},
    };
    t.backward(seeds);
    if (terms) *terms = loss;
    return grads;
}

std::string fingerprint_records(std::span<const ConfidenceRecord> records) {
    Fingerprint fp;
    for (const auto& r : records) {
        fp.add(r.sample.id).add(r.sample.question).add(r.response.answer_text).add(r.response.extracted_answer);
        fp.add(probability_input(r)).add(r.catp).add(r.synthetic ? 1.0 : 0.0);
        for (double x : r.features) fp.add(x);
    }
    return fp.hex();
}

ModelCheckpoint train(std::span<const ConfidenceRecord> records, const EncoderSpec& encoder_spec, const NetConfig& config,
                      const EpochCallback& on_epoch) {
    config.validate();
    if (records.empty()) throw ValidationError("train: no training records");
    const auto encoder = make_encoder(encoder_spec);

    std::vector<NetInput> inputs;
    inputs.reserve(records.size());
    for (const auto& r : records) inputs.push_back(make_input(*encoder, encoder_spec, r));

    ModelCheckpoint ckpt;
    ckpt.net_config = config;
    ckpt.encoder_spec = encoder_spec;
    ckpt.training_data_fingerprint = fingerprint_records(records);
    ckpt.parameters = init_parameters(config, encoder_spec);
    ckpt.created_at = utc_now();

    ParameterMap& params = ckpt.parameters;
    ParameterMap grads;
    ParameterMap m1;
    ParameterMap m2;
    for (const auto& [name, v] : params) {
        grads.emplace(name, MatrixXd::Zero(v.rows(), v.cols()));
        m1.emplace(name, MatrixXd::Zero(v.rows(), v.cols()));
        m2.emplace(name, MatrixXd::Zero(v.rows(), v.cols()));
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    Rng order_rng(splitmix64(config.seed ^ 0x0D0EULL));
    Rng dropout_rng(splitmix64(config.seed ^ 0xD209ULL));
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    long step = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        EpochStats stats;
        stats.epoch = epoch;
        try {
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
                const double inv_batch = 1.0 / static_cast<double>(end - start);
                for (auto& [name, g] : grads) g.setZero();
                for (std::size_t b = start; b < end; ++b) {
                    const auto i = order[b];
                    const NetInput& in = inputs[i];
                    check_input(params, config, in.question, in.answer);
                    Tape t;
                    VarMap pv;
                    for (const auto& [name, value] : params) pv.emplace(name, t.parameter(value, &grads.at(name)));
                    const auto g = build_graph(t, pv, config, in.question, in.answer, in.p_hat, &dropout_rng);
                    const auto loss = compute_loss(g.c_hat.scalar(), g.w0.scalar(), records[i].catp, in.p_hat, config);
                    stats.huber += loss.huber;
                    stats.gated_mse += loss.gated_mse;
                    stats.penalty += loss.penalty;
                    stats.total += loss.total;
                    const std::pair<Var, MatrixXd> seeds[] = {
                        {g.c_hat, MatrixXd::Constant(1, 1, loss.grad_c_hat * inv_batch)},
                        {g.w0, MatrixXd::Constant(1, 1, loss.grad_w0 * inv_batch)},
                    };
                    t.backward(seeds);
                }
                ++step;
                const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for (auto& [name, p] : params) {
                    const MatrixXd& g = grads.at(name);
                    if (!g.allFinite()) throw NumericError("gradient of '" + name + "' is non-finite");
                    MatrixXd& a = m1.at(name);
                    MatrixXd& v = m2.at(name);
                    a = beta1 * a + (1.0 - beta1) * g;
                    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
                    const MatrixXd update =
                        (a / bc1).array() / ((v / bc2).array().sqrt() + eps);
                    p -= config.learning_rate * (update + config.weight_decay * p);
                }
            }
        } catch (const NumericError& e) {
            ckpt.diagnostic = "epoch " + std::to_string(epoch) + ": " + e.what();
            spdlog::error("training stopped: {}", *ckpt.diagnostic);
            break;
        }
        const double n = static_cast<double>(records.size());
        stats.huber /= n;
        stats.gated_mse /= n;
        stats.penalty /= n;
        stats.total /= n;
        ckpt.loss_curve.push_back(stats);
        ckpt.final_train_loss = stats.total;
        if (on_epoch) on_epoch(stats);
    }
    return ckpt;
}

std::vector<ConfidenceRecord> predict(const ModelCheckpoint& checkpoint, std::span<const ConfidenceRecord> records,
                                      const EncoderSpec& runtime_encoder) {
    if (!(runtime_encoder == checkpoint.encoder_spec)) {
        throw ValidationError("predict: runtime encoder '" + runtime_encoder.encoder_id + "' (dim " +
                              std::to_string(runtime_encoder.embedding_dim) + ") differs from the checkpoint encoder '" +
                              checkpoint.encoder_spec.encoder_id + "' (dim " +
                              std::to_string(checkpoint.encoder_spec.embedding_dim) + ")");
    }
    const auto encoder = make_encoder(runtime_encoder);
    std::vector<ConfidenceRecord> out(records.begin(), records.end());
    for (auto& r : out) {
        auto pair = encode_pair(*encoder, runtime_encoder, r.sample.question, answer_text_for(r));
        const auto f = forward(checkpoint.parameters, checkpoint.net_config, pair.question, pair.answer, probability_input(r));
        r.predicted_confidence = f.c_hat;
    }
    return out;
}

std::vector<ConfidenceRecord> predict(const ModelCheckpoint& checkpoint, std::span<const ConfidenceRecord> records) {
    return predict(checkpoint, records, checkpoint.encoder_spec);
}

namespace {

constexpr char kTensorMagic[8] = {'L', 'S', 'C', 'L', 'T', 'N', 'S', '1'};

void put_u64(std::string& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.append(b, 8);
}

std::uint64_t get_u64(const std::string& in, std::size_t& at) {
    if (at + 8 > in.size()) throw ValidationError("checkpoint tensors: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    at += 8;
    return v;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
    return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& stem) {
    std::string blob(kTensorMagic, sizeof kTensorMagic);
    put_u64(blob, ckpt.parameters.size());
    json shapes = json::object();
    for (const auto& [name, m] : ckpt.parameters) {
        put_u64(blob, name.size());
        blob += name;
        put_u64(blob, static_cast<std::uint64_t>(m.rows()));
        put_u64(blob, static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) put_u64(blob, std::bit_cast<std::uint64_t>(m(r, c)));
        }
        shapes[name] = {m.rows(), m.cols()};
    }
    json curve = json::array();
    for (const auto& e : ckpt.loss_curve) {
        curve.push_back({{"epoch", e.epoch}, {"huber", e.huber}, {"gated_mse", e.gated_mse}, {"penalty", e.penalty}, {"total", e.total}});
    }
    json side{{"format", "lscl-checkpoint"},
              {"version", 1},
              {"tensors_file", with_suffix(stem, ".tensors").filename().string()},
              {"tensor_shapes", shapes},
              {"net_config", to_json(ckpt.net_config)},
              {"encoder_spec", to_json(ckpt.encoder_spec)},
              {"training_data_fingerprint", ckpt.training_data_fingerprint},
              {"final_train_loss", ckpt.final_train_loss},
              {"created_at", ckpt.created_at},
              {"loss_curve", curve}};
    side["diagnostic"] = ckpt.diagnostic ? json(*ckpt.diagnostic) : json(nullptr);
    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    write_file_atomic(with_suffix(stem, ".tensors"), blob);
    write_file_atomic(with_suffix(stem, ".json"), side.dump(2) + "\n");
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& stem) {
    const auto side_path = with_suffix(stem, ".json");
    json side;
    try {
        side = json::parse(read_file(side_path));
    } catch (const json::exception& e) {
        throw ValidationError(side_path.string() + ": " + e.what());
    }
    if (side.value("format", std::string()) != "lscl-checkpoint") throw ValidationError(side_path.string() + ": not a checkpoint sidecar");

    ModelCheckpoint ckpt;
    ckpt.net_config = net_config_from_json(side.at("net_config"));
    ckpt.encoder_spec = encoder_spec_from_json(side.at("encoder_spec"));
    ckpt.training_data_fingerprint = side.value("training_data_fingerprint", std::string());
    ckpt.final_train_loss = side.value("final_train_loss", 0.0);
    ckpt.created_at = side.value("created_at", std::string());
    for (const auto& e : side.value("loss_curve", json::array())) {
        ckpt.loss_curve.push_back(EpochStats{e.at("epoch").get<int>(), e.at("huber").get<double>(), e.at("gated_mse").get<double>(),
                                             e.at("penalty").get<double>(), e.at("total").get<double>()});
    }
    if (side.contains("diagnostic") && side["diagnostic"].is_string()) ckpt.diagnostic = side["diagnostic"].get<std::string>();

    const auto tensor_path = with_suffix(stem, ".tensors");
    const std::string blob = read_file(tensor_path);
    if (blob.size() < sizeof kTensorMagic || std::memcmp(blob.data(), kTensorMagic, sizeof kTensorMagic) != 0) {
        throw ValidationError(tensor_path.string() + ": bad magic");
    }
    std::size_t at = sizeof kTensorMagic;
    const auto count = get_u64(blob, at);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = get_u64(blob, at);
        if (at + len > blob.size()) throw ValidationError(tensor_path.string() + ": truncated tensor name");
        std::string name = blob.substr(at, len);
        at += len;
        const auto rows = static_cast<Eigen::Index>(get_u64(blob, at));
        const auto cols = static_cast<Eigen::Index>(get_u64(blob, at));
        MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = std::bit_cast<double>(get_u64(blob, at));
        }
        ckpt.parameters.emplace(std::move(name), std::move(m));
    }
    const auto expected = init_parameters(ckpt.net_config, ckpt.encoder_spec);
    for (const auto& [name, m] : expected) {
        const auto it = ckpt.parameters.find(name);
        if (it == ckpt.parameters.end()) throw ValidationError(tensor_path.string() + ": missing tensor '" + name + "'");
        if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
            throw ValidationError(tensor_path.string() + ": tensor '" + name + "' has the wrong shape");
        }
    }
    if (ckpt.parameters.size() != expected.size()) throw ValidationError(tensor_path.string() + ": unexpected extra tensors");
    return ckpt;
}

std::string loss_curve_csv(std::span<const EpochStats> curve) {
    std::string out = "epoch,huber,gated_mse,penalty,total\n";
    char buf[160];
    for (const auto& e : curve) {
        std::snprintf(buf, sizeof buf, "%d,%.8f,%.8f,%.8f,%.8f\n", e.epoch, e.huber, e.gated_mse, e.penalty, e.total);
        out += buf;
    }
    return out;
}

}  // namespace lscl
