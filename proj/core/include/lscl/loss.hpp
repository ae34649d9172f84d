#pragma once

#include <string_view>

namespace lscl {

enum class PenaltyVariant {
    Entropy,      // p' * binary entropy of w0
    Literal,  // p' * (w0 ln w0 + (1 - w0)(1 - ln w0))
};

std::string_view to_string(PenaltyVariant variant);
PenaltyVariant penalty_variant_from_string(std::string_view text);

inline constexpr double kProbClamp = 1e-7;

/// Huber loss on e = c - c_hat.
double huber(double c, double c_hat, double delta);
/// d huber / d c_hat.
double huber_grad(double c, double c_hat, double delta);

/// Gated target: w0 * p + (1 - w0) * (1 - p).
double gated_target(double p_hat, double w0);

/// Boundary intensity |2p - 1|: 0 at p = 0.5, 1 at p in {0, 1}.
double boundary_intensity(double p_hat);

/// Binary entropy in nats with w0 clamped to [kProbClamp, 1 - kProbClamp].
double binary_entropy(double w0);

double penalty(double p_hat, double w0, PenaltyVariant variant);
/// d penalty / d w0.
double penalty_grad(double p_hat, double w0, PenaltyVariant variant);

}  // namespace lscl
