// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vhj/core_model.hpp"
#include "vhj/grid.hpp"

namespace vhj {

struct Trajectory;
struct SolveConfig;

struct SignChangeCount {
    int count = 0;
    std::vector<double> locations;  ///< abscissa midway between the alternating samples
    double band = 0.0;
};

/// Default dead band: 1e-6 max|v| with floor 1e-12.
double default_band(std::span<const double> v);

/// Strict sign alternations of the samples, ignoring those with |v| <= band.
SignChangeCount sign_changes(std::span<const double> x, std::span<const double> v, double band);
SignChangeCount sign_changes(const Field& v, double band);

/// z(u - U*) on [x_cut, min(b, 1 - x_cut)]. Nodes within x_cut of either
/// end are skipped: the truncated approximations carry an O(k^{-(p-1)/2})
/// boundary layer there that the viscosity solution does not have.
int intersection_number(const Field& field, const Params& params, double b = 1.0, double x_cut = 0.0);
SignChangeCount intersection_detail(const Field& field, const Params& params, double b = 1.0,
                                    double x_cut = 0.0);

enum class Behavior { C, L };
enum class EventType { GBU_with_LBC, GBU_no_LBC, recovery, bouncing, reloss };

std::string to_string(Behavior b);
std::string to_string(EventType e);

struct Transition {
    double time = 0.0;
    EventType type = EventType::GBU_with_LBC;
    int N_before = 0;
    int N_after = 0;
};

struct Interval {
    double t_lo = 0.0;
    double t_hi = 0.0;
    Behavior label = Behavior::C;
};

struct ClassificationReport {
    std::vector<Transition> transitions;
    std::vector<Interval> intervals;
    std::vector<int> N_drops;
    double first_gbu = -1.0;           ///< T(phi) estimate, -1 when no singular time was seen
    double final_regularization = -1.0;
    double lbc_threshold = 0.0;

    int count_intervals(Behavior b) const;
    int count_events(EventType e) const;
    /// Label sequence, e.g. "CLC".
    std::string pattern() const;
};

struct ClassifyOptions {
    /// Absolute LBC threshold; the per-sample threshold is max(this, 3 * fit residual).
    double lbc_threshold = 0.0;
    /// A C gap between two L intervals shorter than this is one bouncing time.
    double bounce_gap = 0.0;
    /// Inside an L run, a trace dip below bounce_depth times the smaller of the
    /// peaks on either side is a bouncing time (the trace touches zero to
    /// within the resolution of the run).
    double bounce_depth = 0.02;
};

/// max(1e-4 c_p eps_ref^alpha, 0): the absolute part of the LBC threshold.
double default_lbc_threshold(const Params& params, double eps_ref);
/// Per-sample threshold max(lbc_threshold, 3 * fit residual in the singular regime).
std::vector<double> lbc_thresholds(const Trajectory& traj, double lbc_threshold);

/// Label intervals C/L and type the transitions of a converged trajectory.
/// Crossing times are interpolated inside the recorded step, so the
/// trajectory must be recorded at every accepted step.
/// Throws PreconditionError for an unconverged trajectory.
ClassificationReport classify(const Trajectory& traj, const Params& params, const ClassifyOptions& opts);

/// `t,type,N_before,N_after` per line.
std::string transitions_csv(const ClassificationReport& report);
/// `t_lo,t_hi,label` per line.
std::string intervals_csv(const ClassificationReport& report);

struct ZeroNumberAudit {
    bool monotonicity_checked = false;
    bool monotone = true;
    std::vector<double> violation_times;
    bool drops_ok = true;
    bool count_bound_ok = true;  ///< #transitions <= N(0)
    int N0 = 0;
    int N_final = 0;
    /// Only filled when monotonicity was skipped (sup phi > c_p).
    bool nonmonotone_witness = false;
    double witness_t1 = -1.0;
    double witness_t2 = -1.0;
    bool passed() const {
        return (monotonicity_checked ? (monotone && drops_ok && count_bound_ok) : nonmonotone_witness);
    }
};

/// Check N(t) nonincreasing (sup phi <= c_p) with a hysteresis window of
/// `window` samples around each transition, and a drop of at least one per
/// transition. For sup phi > c_p, look for t1 < t2 with N(t1) = 0, N(t2) = 1.
ZeroNumberAudit zero_number_audit(const Trajectory& traj, const ClassificationReport& report,
                                  const Params& params, int window = 1);

}  // namespace vhj
