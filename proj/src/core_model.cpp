// SPDX-License-Identifier: MIT
#include "vhj/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vhj/errors.hpp"

namespace vhj {

Params Params::from_p(double p) {
    if (!(p > 2.0) || !std::isfinite(p)) {
        throw DomainError("exponent p must satisfy p > 2, got " + std::to_string(p));
    }
    Params params;
    params.p = p;
    params.alpha = (p - 2.0) / (p - 1.0);
    params.c_p = std::pow(p - 1.0, (p - 2.0) / (p - 1.0)) / (p - 2.0);
    return params;
}

double singular_steady(const Params& params, double x) {
    if (!(x > 0.0)) throw DomainError("U* is evaluated only for x > 0");
    return params.c_p * std::pow(x, params.alpha);
}

double singular_steady_derivative(const Params& params, double x) {
    if (!(x > 0.0)) throw DomainError("U*' is infinite at x = 0");
    return std::pow((params.p - 1.0) * x, -1.0 / (params.p - 1.0));
}

double regular_steady_shift(const Params& params, double a) {
    if (!(a > 0.0)) throw DomainError("regular steady state needs slope a > 0");
    return std::pow(a, 1.0 - params.p) / (params.p - 1.0);
}

double regular_steady(const Params& params, double a, double x) {
    const double k = regular_steady_shift(params, a);
    return params.c_p * (std::pow(x + k, params.alpha) - std::pow(k, params.alpha));
}

double regular_steady_derivative(const Params& params, double a, double x) {
    const double k = regular_steady_shift(params, a);
    return singular_steady_derivative(params, x + k);
}

double truncated_nonlinearity(const TruncationLevel& level, const Params& params, double s) {
    const double half_p = 0.5 * params.p;
    const double k = level.k;
    if (s <= k) return std::pow(s, half_p);
    const double lin = std::pow(k, half_p - 1.0);
    switch (level.variant) {
        case TruncationVariant::piecewise_min:
            return std::min(std::pow(s, half_p), lin * s);
        case TruncationVariant::smooth:
            return std::pow(k, half_p) + half_p * lin * (s - k);
    }
    return 0.0;
}

double truncated_nonlinearity_derivative(const TruncationLevel& level, const Params& params,
                                         double s) {
    const double half_p = 0.5 * params.p;
    const double k = level.k;
    if (s <= k) return s > 0.0 ? half_p * std::pow(s, half_p - 1.0) : 0.0;
    const double lin = std::pow(k, half_p - 1.0);
    return level.variant == TruncationVariant::smooth ? half_p * lin : lin;
}

GradientSource gradient_source(const TruncationLevel& level, const Params& params, double g) {
    const double s = g * g;
    const double half_p = 0.5 * params.p;
    const double ag = std::abs(g);
    if (s <= level.k) {
        // |g|^p and p |g|^{p-2} g
        const double pw = std::pow(ag, params.p - 1.0);
        return {pw * ag, params.p * pw * (g < 0 ? -1.0 : 1.0)};
    }
    const double lin = std::pow(level.k, half_p - 1.0);
    if (level.variant == TruncationVariant::piecewise_min) {
        return {lin * s, 2.0 * lin * g};
    }
    return {std::pow(level.k, half_p) + half_p * lin * (s - level.k), params.p * lin * g};
}

double control_cost_normalization(double p) {
    // maximizer a = (z/(k q))^{p-1} gives the value z^p / (p (k q)^{p-1})
    const double q = p / (p - 1.0);
    return std::pow(p, -1.0 / (p - 1.0)) / q;
}

AnalyticConstants1D control_constants(const Params& params) {
    AnalyticConstants1D c;
    c.psi_torsion = [](double x) { return 0.5 * x * (1.0 - x); };
    // psi' = (1 - 2x)/2 peaks in modulus at the endpoints
    const double sup_grad = 0.5;
    c.kappa = std::pow(2.0 * sup_grad, -params.p / (params.p - 1.0));
    // psi(x)/min(x,1-x) = (1-x)/2 on (0,1/2], decreasing to 1/4 at x = 1/2
    c.c1_hopf = 0.25;
    c.K3 = 1.0 / c.kappa;
    c.K2 = 2.0 * c.kappa * c.c1_hopf;
    c.k_p = control_cost_normalization(params.p);
    c.L = 2.0 * c.K3;
    return c;
}

double regularization_threshold(const Params& params, double eps, double c2_norm) {
    const auto c = control_constants(params);
    const double lambda = c2_norm + std::pow(c2_norm, params.p);
    const double factor = lambda > 0.0 ? std::min(1.0, 1.0 / (lambda * c.K3)) : 1.0;
    // gamma_bar / 2 with gamma_bar = (1/4) min{1, (lambda K3)^{-1}} K2 eps
    return 0.125 * factor * c.K2 * eps;
}

}  // namespace vhj
