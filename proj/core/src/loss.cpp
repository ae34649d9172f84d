#include "lscl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lscl/error.hpp"

namespace lscl {

std::string_view to_string(PenaltyVariant variant) {
    return variant == PenaltyVariant::Entropy ? "entropy" : "literal";
}

PenaltyVariant penalty_variant_from_string(std::string_view text) {
    if (text == "entropy") return PenaltyVariant::Entropy;
    if (text == "literal") return PenaltyVariant::Literal;
    throw ConfigError("unknown penalty variant '" + std::string(text) + "'");
}

double huber(double c, double c_hat, double delta) {
    const double e = c - c_hat;
    const double a = std::abs(e);
    return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

double huber_grad(double c, double c_hat, double delta) {
    const double e = c - c_hat;
    if (std::abs(e) <= delta) return -e;
    return e > 0 ? -delta : delta;
}

double gated_target(double p_hat, double w0) { return w0 * p_hat + (1.0 - w0) * (1.0 - p_hat); }

double boundary_intensity(double p_hat) { return std::abs(2.0 * p_hat - 1.0); }

namespace {
double clamp_prob(double w) { return std::clamp(w, kProbClamp, 1.0 - kProbClamp); }
}  // namespace

double binary_entropy(double w0) {
    const double w = clamp_prob(w0);
    return -w * std::log(w) - (1.0 - w) * std::log(1.0 - w);
}

double penalty(double p_hat, double w0, PenaltyVariant variant) {
    const double pp = boundary_intensity(p_hat);
    if (variant == PenaltyVariant::Entropy) return pp * binary_entropy(w0);
    const double w = clamp_prob(w0);
    const double lw = std::log(w);
    return pp * (w * lw + (1.0 - w) * (1.0 - lw));
}

double penalty_grad(double p_hat, double w0, PenaltyVariant variant) {
    const double pp = boundary_intensity(p_hat);
    const double w = clamp_prob(w0);
    if (variant == PenaltyVariant::Entropy) return pp * std::log((1.0 - w) / w);
    return pp * (2.0 * std::log(w) - (1.0 - w) / w);
}

}  // namespace lscl
