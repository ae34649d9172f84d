#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "lscl/confidence_net.hpp"
#include "lscl/encoder.hpp"
#include "lscl/error.hpp"
#include "lscl/random.hpp"

using namespace lscl;

namespace {

NetConfig small_config() {
    NetConfig c;
    c.hidden_dim = 8;
    c.attention_heads = 2;
    c.epochs = 2;
    c.batch_size = 8;
    c.seed = 9;
    return c;
}

EncoderSpec small_encoder() {
    EncoderSpec e;
    e.embedding_dim = 8;
    e.max_question_tokens = 6;
    e.max_answer_tokens = 4;
    return e;
}

ConfidenceRecord make_record(int i) {
    ConfidenceRecord r;
    r.sample.id = "r" + std::to_string(i);
    r.sample.question = i % 2 ? "which enzyme breaks down starch" : "what is the capital of the province";
    r.sample.options = {{"A", "amylase"}, {"B", "lipase"}};
    r.sample.gold_answer = "A";
    r.response.sample_id = r.sample.id;
    r.response.answer_text = i % 3 ? "A" : "B";
    r.response.extracted_answer = r.response.answer_text;
    r.response.aggregate_prob = 0.3 + 0.05 * (i % 13);
    r.is_correct = r.response.answer_text == "A";
    r.catp = r.is_correct ? *r.response.aggregate_prob : 1.0 - *r.response.aggregate_prob;
    return r;
}

std::vector<ConfidenceRecord> make_records(int n) {
    std::vector<ConfidenceRecord> out;
    for (int i = 0; i < n; ++i) out.push_back(make_record(i));
    return out;
}

double total_loss(const ParameterMap& params, const NetConfig& config, const NetInput& in, double c) {
    const auto out = forward(params, config, in.question, in.answer, in.p_hat);
    return compute_loss(out, c, in.p_hat, config).total;
}

}  // namespace

TEST(Encoder, UnitNormDeterministicTruncated) {
    EncoderSpec spec;
    spec.embedding_dim = 64;
    spec.max_question_tokens = 5;
    const auto pair = encode_pair(spec, "one two three four five six seven", "B");
    EXPECT_EQ(pair.question.rows(), 5);
    EXPECT_EQ(pair.question.cols(), 64);
    for (Eigen::Index r = 0; r < pair.question.rows(); ++r) EXPECT_NEAR(pair.question.row(r).norm(), 1.0, 1e-12);
    const auto again = encode_pair(spec, "one two three four five six seven", "B");
    EXPECT_EQ(pair.question, again.question);
    EXPECT_EQ(pair.answer, again.answer);
}

TEST(Encoder, UnknownIdIsCapabilityError) {
    EncoderSpec spec;
    spec.encoder_id = "bert-base-uncased";
    EXPECT_THROW(make_encoder(spec), CapabilityError);
}

TEST(Forward, OutputsInUnitIntervalAndDeterministic) {
    const auto config = small_config();
    const auto enc = small_encoder();
    const auto params = init_parameters(config, enc);
    const auto pair = encode_pair(enc, "how many chambers does the heart have", "four");
    for (const double p : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        const auto a = forward(params, config, pair.question, pair.answer, p);
        const auto b = forward(params, config, pair.question, pair.answer, p);
        EXPECT_GT(a.c_hat, 0.0);
        EXPECT_LT(a.c_hat, 1.0);
        EXPECT_GT(a.w0, 0.0);
        EXPECT_LT(a.w0, 1.0);
        EXPECT_EQ(a.c_hat, b.c_hat);
        EXPECT_EQ(a.w0, b.w0);
    }
    const auto mid = forward(params, config, pair.question, pair.answer, 0.5);
    EXPECT_EQ(mid.intermediates.at("boundary_intensity")(0, 0), 0.0);
    for (const char* name : {"x_q", "x_a", "x_related", "x_diff", "x_p", "fused"})
        EXPECT_TRUE(mid.intermediates.count(name)) << name;
}

TEST(Forward, ShapeMismatchNamesStage) {
    const auto config = small_config();
    const auto params = init_parameters(config, small_encoder());
    const Eigen::MatrixXd wrong = Eigen::MatrixXd::Ones(3, 5);
    try {
        forward(params, config, wrong, wrong, 0.5);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_FALSE(std::string(e.what()).empty());
    }
}

TEST(Gradients, MatchFiniteDifferences) {
    const auto config = small_config();
    const auto enc = small_encoder();
    const auto params = init_parameters(config, enc);
    const auto encoder = make_encoder(enc);
    const auto in = make_input(*encoder, enc, make_record(4));
    const double c = 0.83;
    const auto grads = parameter_gradients(params, config, in, c);
    const double h = 1e-5;
    double worst = 0.0;
    for (const auto& [name, value] : params) {
        for (Eigen::Index k = 0; k < value.size(); ++k) {
            auto plus = params;
            auto minus = params;
            plus.at(name).data()[k] += h;
            minus.at(name).data()[k] -= h;
            const double numeric = (total_loss(plus, config, in, c) - total_loss(minus, config, in, c)) / (2 * h);
            const double analytic = grads.at(name).data()[k];
            const double err = std::abs(numeric - analytic) / std::max(1e-3, std::max(std::abs(numeric), std::abs(analytic)));
            worst = std::max(worst, err);
            EXPECT_LT(err, 1e-4) << name << "[" << k << "] analytic " << analytic << " numeric " << numeric;
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Training, DeterministicAndZeroEpochs) {
    const auto records = make_records(40);
    const auto enc = small_encoder();
    auto config = small_config();
    const auto a = train(records, enc, config);
    const auto b = train(records, enc, config);
    EXPECT_EQ(a.parameters, b.parameters);
    EXPECT_EQ(a.loss_curve.size(), 2u);
    EXPECT_EQ(loss_curve_csv(a.loss_curve).rfind("epoch,huber,gated_mse,penalty,total\n", 0), 0u);

    config.epochs = 0;
    const auto z = train(records, enc, config);
    EXPECT_EQ(z.parameters, init_parameters(config, enc));
    EXPECT_TRUE(z.loss_curve.empty());
}

TEST(Training, LossDecreases) {
    const auto records = make_records(64);
    auto config = small_config();
    config.epochs = 15;
    const auto ckpt = train(records, small_encoder(), config);
    ASSERT_EQ(ckpt.loss_curve.size(), 15u);
    EXPECT_LT(ckpt.loss_curve.back().total, ckpt.loss_curve.front().total);
    EXPECT_FALSE(ckpt.diagnostic.has_value());
}

TEST(Predict, NoLeakAndBatchConsistency) {
    auto records = make_records(10);
    const auto ckpt = train(records, small_encoder(), small_config());
    auto blind = records;
    for (auto& r : blind) {
        r.sample.gold_answer.clear();
        r.is_correct = false;
        r.catp = 0.0;
        r.label.reset();
    }
    blind.push_back(blind.front());
    const auto a = predict(ckpt, records);
    const auto b = predict(ckpt, blind);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].predicted_confidence, b[i].predicted_confidence);
    EXPECT_EQ(b.front().predicted_confidence, b.back().predicted_confidence);
    for (const auto& r : a) {
        EXPECT_GT(*r.predicted_confidence, 0.0);
        EXPECT_LT(*r.predicted_confidence, 1.0);
    }
}

TEST(Predict, EncoderMismatchThrows) {
    const auto records = make_records(10);
    const auto ckpt = train(records, small_encoder(), small_config());
    auto other = small_encoder();
    other.encoder_id = "hash-5";
    EXPECT_THROW(predict(ckpt, records, other), ValidationError);
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
    const auto records = make_records(16);
    const auto ckpt = train(records, small_encoder(), small_config());
    const auto dir = std::filesystem::temp_directory_path() / "lscl_ckpt_test";
    std::filesystem::create_directories(dir);
    save_checkpoint(ckpt, dir / "model");
    const auto loaded = load_checkpoint(dir / "model");
    EXPECT_EQ(loaded.parameters, ckpt.parameters);
    EXPECT_EQ(loaded.net_config, ckpt.net_config);
    EXPECT_EQ(loaded.encoder_spec, ckpt.encoder_spec);
    EXPECT_EQ(loaded.training_data_fingerprint, ckpt.training_data_fingerprint);
    const auto a = predict(ckpt, records);
    const auto b = predict(loaded, records);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].predicted_confidence, b[i].predicted_confidence);
    std::filesystem::remove_all(dir);
}

TEST(NetConfigTest, Validation) {
    NetConfig c;
    c.hidden_dim = 30;
    c.attention_heads = 4;
    EXPECT_THROW(c.validate(), ConfigError);
    c = NetConfig{};
    c.delta = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = NetConfig{};
    EXPECT_EQ(net_config_from_json(to_json(c)), c);
}

TEST(Features, SyntheticRoundTrip) {
    const auto enc = small_encoder();
    const auto encoder = make_encoder(enc);
    const auto record = make_record(2);
    const auto direct = make_input(*encoder, enc, record);
    const auto features = record_features(*encoder, enc, record);
    const auto decoded = input_from_features(features, enc);
    EXPECT_EQ(direct.question, decoded.question);
    EXPECT_EQ(direct.answer, decoded.answer);
    EXPECT_EQ(direct.p_hat, decoded.p_hat);
}
