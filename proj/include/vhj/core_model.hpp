// SPDX-License-Identifier: MIT
#pragma once

#include <functional>

namespace vhj {

/// Exponent data of u_t - u_xx = |u_x|^p on (0,1).
///
/// alpha = (p-2)/(p-1) and c_p = (p-2)^{-1} (p-1)^{(p-2)/(p-1)} are the
/// exponent and amplitude of the singular steady state U*(x) = c_p x^alpha.
struct Params {
    double p = 3.0;
    double alpha = 0.5;
    double c_p = 1.4142135623730951;

    /// Throws DomainError unless p > 2.
    static Params from_p(double p);
};

enum class TruncationVariant { piecewise_min, smooth };

/// Truncation threshold k for F_k(s), s = |u_x|^2.
struct TruncationLevel {
    double k = 100.0;
    TruncationVariant variant = TruncationVariant::smooth;
};

/// Constants of the 1D comparison arguments on (0,1), computed from the
/// torsion function psi(x) = x(1-x)/2 (-psi'' = 1, psi(0) = psi(1) = 0).
struct AnalyticConstants1D {
    std::function<double(double)> psi_torsion;
    double kappa = 0.0;    ///< (2 sup|psi'|)^{-p/(p-1)}
    double K2 = 0.0;       ///< 2 kappa c1_hopf
    double K3 = 0.0;       ///< 1 / kappa
    double c1_hopf = 0.0;  ///< inf psi / dist(x, boundary)
    double k_p = 0.0;      ///< control cost normalization
    double L = 0.0;        ///< regularization time factor, 2 K3
};

/// U*(x) = c_p x^alpha. Throws DomainError for x <= 0.
double singular_steady(const Params& params, double x);
/// U*'(x) = ((p-1) x)^{-1/(p-1)}. Throws DomainError for x <= 0.
double singular_steady_derivative(const Params& params, double x);

/// Shift k = a^{1-p}/(p-1) such that U_a(x) = U*(x+k) - U*(k).
double regular_steady_shift(const Params& params, double a);
/// Regular steady state with U_a(0) = 0 and U_a'(0) = a. Throws for a <= 0.
double regular_steady(const Params& params, double a, double x);
double regular_steady_derivative(const Params& params, double a, double x);

/// F_k(s) for s >= 0 (s is the squared gradient).
double truncated_nonlinearity(const TruncationLevel& level, const Params& params, double s);
/// dF_k/ds.
double truncated_nonlinearity_derivative(const TruncationLevel& level, const Params& params,
                                         double s);

/// Source as a function of the gradient g: G(g) = F_k(g^2), and its g-derivative.
struct GradientSource {
    double value;
    double slope;
};
GradientSource gradient_source(const TruncationLevel& level, const Params& params, double g);

AnalyticConstants1D control_constants(const Params& params);

/// Legendre normalization: sup_a (a z - k_p |a|^q) = |z|^p, q = p/(p-1).
/// Valid for any p > 1 (p = 2 gives 1/4).
double control_cost_normalization(double p);

/// Regularization amplitude threshold for data bounded by H (C^2 norm M)
/// away from the boundary: (eps/16) min{1, 1/(M + M^p)}.
double regularization_threshold(const Params& params, double eps, double c2_norm);

}  // namespace vhj
