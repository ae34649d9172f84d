#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "lscl/confidence_net.hpp"
#include "lscl/error.hpp"
#include "lscl/loss.hpp"
#include "lscl/random.hpp"

using namespace lscl;

namespace {

double relative_error(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

double central(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST(Huber, SpotValues) {
    EXPECT_DOUBLE_EQ(huber(0.5, 0.4, 0.15), 0.005);
    EXPECT_DOUBLE_EQ(huber(0.9, 0.5, 0.15), 0.04875);
    EXPECT_DOUBLE_EQ(huber(0.1, 0.5, 0.15), 0.04875);
    EXPECT_EQ(huber(0.3, 0.3, 0.15), 0.0);
}

TEST(GatedTarget, EndpointAlgebra) {
    for (int i = 0; i <= 1000; ++i) {
        const double p = i / 1000.0;
        EXPECT_EQ(gated_target(p, 1.0), p);
        EXPECT_EQ(gated_target(p, 0.0), 1.0 - p);
        EXPECT_EQ(gated_target(p, 0.5), 0.5);
    }
}

TEST(BoundaryIntensity, Symmetry) {
    EXPECT_EQ(boundary_intensity(0.5), 0.0);
    EXPECT_EQ(boundary_intensity(0.0), 1.0);
    EXPECT_EQ(boundary_intensity(1.0), 1.0);
    for (int i = 0; i <= 100; ++i) {
        const double p = i / 100.0;
        EXPECT_NEAR(boundary_intensity(p), boundary_intensity(1.0 - p), 1e-12);
    }
}

TEST(Penalty, EntropyValues) {
    EXPECT_NEAR(penalty(1.0, 0.5, PenaltyVariant::Entropy), std::log(2.0), 1e-12);
    for (const double w : {0.01, 0.3, 0.5, 0.9}) EXPECT_EQ(penalty(0.5, w, PenaltyVariant::Entropy), 0.0);
    EXPECT_TRUE(std::isfinite(penalty(1.0, 0.0, PenaltyVariant::Entropy)));
    EXPECT_TRUE(std::isfinite(penalty(1.0, 1.0, PenaltyVariant::Entropy)));
}

TEST(Penalty, EntropyShape) {
    for (const double p : {0.1, 0.3, 0.8, 0.95}) {
        const double peak = penalty(p, 0.5, PenaltyVariant::Entropy);
        for (int i = 1; i < 100; ++i) {
            const double w = i / 100.0;
            EXPECT_LE(penalty(p, w, PenaltyVariant::Entropy), peak + 1e-15);
        }
        EXPECT_LT(penalty(p, 1e-6, PenaltyVariant::Entropy), 1e-4);
        EXPECT_LT(penalty(p, 1.0 - 1e-6, PenaltyVariant::Entropy), 1e-4);
    }
}

TEST(Penalty, LiteralFormula) {
    const double w = 0.3;
    const double p = 0.9;
    const double expected = std::abs(2 * p - 1) * (w * std::log(w) + (1 - w) * (1 - std::log(w)));
    EXPECT_NEAR(penalty(p, w, PenaltyVariant::Literal), expected, 1e-12);
}

TEST(Loss, PerfectFitFixedPoint) {
    const NetConfig config;
    const auto l = compute_loss(0.8, 1.0, 0.8, 0.8, config);
    EXPECT_EQ(l.huber, 0.0);
    EXPECT_NEAR(l.gated_mse, 0.0, 1e-24);
    EXPECT_LT(l.penalty, 1e-5);
    EXPECT_LT(l.total, 1e-5);
}

TEST(Loss, NonFiniteNamesTerm) {
    const NetConfig config;
    try {
        compute_loss(std::nan(""), 0.5, 0.5, 0.5, config);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("huber"), std::string::npos);
    }
}

TEST(Loss, GradientCheckPerTerm) {
    Rng rng(2024);
    for (const auto variant : {PenaltyVariant::Entropy, PenaltyVariant::Literal}) {
        for (int draw = 0; draw < 100; ++draw) {
            const double c = rng.uniform();
            const double c_hat = rng.uniform(0.02, 0.98);
            const double w0 = rng.uniform(0.02, 0.98);
            const double p = rng.uniform();
            const double delta = 0.15;
            if (std::abs(std::abs(c - c_hat) - delta) < 1e-4) continue;

            EXPECT_LT(relative_error(huber_grad(c, c_hat, delta),
                                     central([&](double x) { return huber(c, x, delta); }, c_hat)),
                      1e-4);

            const auto mse = [&](double ch, double w) {
                const double mu = gated_target(p, w);
                return (ch - mu) * (ch - mu);
            };
            const double mu = gated_target(p, w0);
            EXPECT_LT(relative_error(2.0 * (c_hat - mu), central([&](double x) { return mse(x, w0); }, c_hat)), 1e-4);
            EXPECT_LT(relative_error(-2.0 * (c_hat - mu) * (2.0 * p - 1.0),
                                     central([&](double x) { return mse(c_hat, x); }, w0)),
                      1e-4);

            EXPECT_LT(relative_error(penalty_grad(p, w0, variant),
                                     central([&](double x) { return penalty(p, x, variant); }, w0)),
                      1e-4);

            NetConfig config;
            config.penalty_variant = variant;
            const auto l = compute_loss(c_hat, w0, c, p, config);
            EXPECT_LT(relative_error(l.grad_c_hat,
                                     central([&](double x) { return compute_loss(x, w0, c, p, config).total; }, c_hat)),
                      1e-4);
            EXPECT_LT(relative_error(l.grad_w0,
                                     central([&](double x) { return compute_loss(c_hat, x, c, p, config).total; }, w0)),
                      1e-4);
            if (variant == PenaltyVariant::Entropy) EXPECT_GE(l.total, 0.0);
        }
    }
}

TEST(PenaltyVariant, Names) {
    EXPECT_EQ(penalty_variant_from_string("entropy"), PenaltyVariant::Entropy);
    EXPECT_EQ(penalty_variant_from_string("literal"), PenaltyVariant::Literal);
    EXPECT_THROW(penalty_variant_from_string("quadratic"), ConfigError);
    EXPECT_EQ(to_string(PenaltyVariant::Literal), "literal");
}
