// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vhj/core_model.hpp"
#include "vhj/grid.hpp"

namespace vhj {

/// Near-boundary profile settings used for the boundary trace estimate.
struct TraceSettings {
    double window_lo = 3e-4;   ///< least-squares window [lo, hi] for u - U* = c0 + c2 x^2
    double window_hi = 3e-3;
    double near_zone = 3e-3;   ///< sup-gradient near x = 0 is taken over x <= near_zone
    double saturation_fraction = 0.9;  ///< indicator (a): max near gradient > this * sqrt(k)
    double profile_K = 200.0;  ///< indicator (b): |u_x - U*'| <= profile_K x + profile_rel U*'
    double profile_rel = 0.25;
    double trace_tol = 1e-6;   ///< regular regime: extrapolated values below this count as 0
    double fit_tol = 1e-2;     ///< residual / c_p above this flags low confidence
    double x_cut = 3e-4;       ///< N(t) ignores nodes below this (truncation layer)
};

struct SolveConfig {
    std::vector<double> k_schedule{25.0, 100.0, 400.0, 1600.0, 6400.0};
    TruncationVariant variant = TruncationVariant::smooth;
    double dt_init = 1e-8;
    double dt_max = 1e-2;
    double dt_min = 1e-14;
    double time_tol = 1e-4;        ///< local error target per step (sup norm)
    double space_tol = 1e-5;       ///< expected spatial discretization error scale
    double richardson_tol = 1e-3;  ///< successive-k stopping criterion on the interior
    double newton_tol = 1e-12;
    int newton_max_iter = 14;
    double t_end = 1.0;
    std::vector<double> snapshot_times;  ///< the integrator lands exactly on these
    double probe_margin = 0.05;          ///< interior region [margin, 1 - margin] for k-convergence
    /// Central differencing of u_x in the source is kept while |G'(g)| h <= this;
    /// above it the node switches to the monotone Godunov form.
    double peclet_limit = 1.8;
    bool record_every_step = true;
    std::size_t max_steps = 5'000'000;
    TraceSettings trace;

    void validate() const;
};

struct SolveStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t newton_iterations = 0;
};

struct ConvergenceReport {
    bool converged = false;
    std::size_t level_used = 0;      ///< index into k_schedule of the returned trajectory
    std::vector<double> pair_diffs;  ///< interior sup-difference of successive levels
    double max_k_violation = 0.0;    ///< max over steps of (u_k - u_k') with k < k'
};

struct Trajectory {
    double k = 0.0;
    std::vector<double> times;
    std::vector<double> boundary_trace;
    std::vector<double> trace_residual;
    std::vector<unsigned char> trace_low_confidence;
    std::vector<int> N_series;
    std::vector<double> supgrad_series;
    std::vector<double> near_grad_series;
    std::vector<double> saturation_series;
    std::vector<unsigned char> indicator_series;  ///< raw gradient-singularity indicator
    std::vector<unsigned char> singular_regime;   ///< indicator with one-step hysteresis
    std::vector<double> sup_norm_series;
    std::vector<Field> snapshots;
    double initial_sup = 0.0;
    bool converged = false;
    ConvergenceReport convergence;
    SolveStats stats;

    std::size_t index_at(double t) const;  ///< last sample with time <= t
    const Field* snapshot_at(double t) const;
    double max_trace_on(double t0, double t1) const;
    double min_trace_on(double t0, double t1) const;
};

struct TraceEstimate {
    double value = 0.0;
    double residual = 0.0;
    bool low_confidence = false;
};

/// u(0,t) from the near-boundary profile. In the singular regime fits
/// u - U* = c0 + c2 x^2 on the trace window and returns max(c0, 0);
/// otherwise extrapolates linearly through the first interior nodes.
TraceEstimate boundary_trace(const Field& field, const Params& params, const TraceSettings& ts,
                             bool singular_regime);
/// Convenience overload that uses the profile test alone to pick the regime.
TraceEstimate boundary_trace(const Field& field, const Params& params, const TraceSettings& ts = {});

/// Indicator evaluated on one snapshot for truncation level k.
bool gradient_singular_now(const Field& field, const Params& params, double k, const TraceSettings& ts,
                           double* near_grad = nullptr);
/// Stored indicator of the trajectory at the last sample <= t.
bool gradient_singularity_indicator(const Trajectory& traj, double t);

/// Advance the truncated problem for a single level k.
Trajectory evolve_truncated(const Field& phi, const Params& params, const TruncationLevel& level,
                            const SolveConfig& config);

/// Run every level of the k schedule in lockstep (common time steps), check
/// monotonicity in k and return the top level. It is flagged converged when it
/// agrees with the level below to richardson_tol on the interior snapshots.
Trajectory viscosity_solve(const Field& phi, const Params& params, const SolveConfig& config);

/// CSV with header `t,trace,N,supgrad,saturation`.
std::string trajectory_csv(const Trajectory& traj);
/// CSV with header `x,u`.
std::string snapshot_csv(const Field& field);

}  // namespace vhj
