// SPDX-License-Identifier: MIT
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vhj/analysis.hpp"
#include "vhj/core_model.hpp"
#include "vhj/grid.hpp"
#include "vhj/initial_data.hpp"
#include "vhj/solver.hpp"

namespace vhj {

enum class ObjectiveMode {
    max_positive,  ///< largest excess of the trace over the LBC threshold on J
    min_positive   ///< smallest excess on J (positive: no trace zero inside J)
};

struct ObjectiveWindow {
    double t_lo = 0.0;
    double t_hi = 0.0;
    ObjectiveMode mode = ObjectiveMode::max_positive;
};

/// Signed window objective: trace - threshold reduced by max or min over the
/// recorded samples in [t_lo, t_hi]. Throws PreconditionError when the
/// trajectory ends before t_hi or the window is empty.
double window_objective(const Trajectory& traj, const ObjectiveWindow& window, double lbc_threshold);

struct SearchOptions {
    double tol = 1e-3;            ///< target bracket width in mu
    double lbc_threshold = 0.0;   ///< absolute part of the per-sample threshold
    int max_solves = 400;         ///< PDE solve budget (endpoint checks included)
};

struct Evaluation {
    double mu = 0.0;
    double objective = 0.0;
};

struct CriticalResult {
    double mu_star = 1.0;  ///< inf of the positive set: the hi end of the bracket
    double lo = 0.0;
    double hi = 1.0;
    double objective_lo = 0.0;
    double objective_hi = 0.0;
    int evaluations = 0;
    std::vector<Evaluation> audit;   ///< every objective value, in evaluation order
    std::vector<std::string> anomalies;  ///< positive below a nonpositive value, etc.
    double midpoint() const { return 0.5 * (lo + hi); }
};

using Family = std::function<Field(double)>;

/// Bisection on mu in [0, 1] of the sign of the window objective.
/// Refuses (SearchRefused) unless objective(1) > 0 and objective(0) <= 0.
/// The objective is not assumed monotone; sign patterns that contradict
/// monotonicity are recorded in the audit.
CriticalResult bisect_critical(const Family& family, const ObjectiveWindow& window, const Params& params,
                               const SolveConfig& config, const SearchOptions& options);

/// Same search on an arbitrary scalar objective (used by the nested search and tests).
CriticalResult bisect_objective(const std::function<double(double)>& objective, const SearchOptions& options);

/// Window objectives for a list of parameter values, solved independently.
/// The parallel version distributes the solves over OpenMP threads; results
/// match the serial reference exactly (each solve is deterministic).
std::vector<double> sweep_objective(const Family& family, const ObjectiveWindow& window,
                                    const std::vector<double>& mus, const Params& params,
                                    const SolveConfig& config, double lbc_threshold, int threads);
std::vector<double> sweep_objective_serial(const Family& family, const ObjectiveWindow& window,
                                           const std::vector<double>& mus, const Params& params,
                                           const SolveConfig& config, double lbc_threshold);

/// Objective window of a deformed plan coordinate: [hat_s_i, hat_s_{i+1}] for
/// xi = 0 and [s_i, s_{i+1}] for xi = 2 (0-based bump index i).
ObjectiveWindow coordinate_window(const MultibumpPlan& plan, int bump_index);

struct NestedResult {
    /// Representative value per coordinate: the lo side of the bracket for a
    /// xi = 0 coordinate (no LBC) and the hi side for xi = 2 (trace kept positive).
    std::vector<double> Lambda;
    std::vector<CriticalResult> levels;  ///< outermost search plus the inner ones at Lambda
    Field phi;                           ///< Phi_Lambda on the grid
    int solves = 0;
    bool partial = false;   ///< budget exhausted; Lambda holds the deepest completed level
    std::string note;
};

/// Nested critical parameters of a plan with q <= 3 deformed coordinates.
/// The outermost coordinate (latest bump) is searched first; each trial value
/// solves the inner problem by recursion. Solves are memoized on parameters
/// rounded to tol / 4.
NestedResult nested_critical(const MultibumpPlan& plan, const GridPtr& grid, const SolveConfig& config,
                             const SearchOptions& options);

struct CalibrationOptions {
    double eps_ref = 0.1;
    double K = 1.5;
    double a1 = 0.075;
    double a2 = 0.225;
    double margin = 0.2;
    double horizon = 1.5;  ///< first run to horizon * eps_ref^2, doubled up to three times
};

/// Pilot single-bump run at eps_ref: measures the LBC onset and recovery and
/// widens them by the margin, c1 = (1 + margin) T_on / eps^2 and
/// c2 = (1 - margin) T_off / eps^2. Throws PlanError when the bump shows no
/// LBC or does not recover.
CalibrationConstants calibrate(const Params& params, const GridPtr& grid, const SolveConfig& config,
                               const CalibrationOptions& options);

struct ScenarioOptions {
    CalibrationConstants calib;
    PlanOptions plan;
    SearchOptions search;
    double horizon_factor = 10.0;  ///< final run to this multiple of the last time mark
    int budget = -1;               ///< PDE solves for search plus final run; -1 is unlimited
};

struct IntervalCheck {
    int index = 0;  ///< 1-based planned interval
    int sigma = 0;
    double t_lo = 0.0, t_hi = 0.0;
    int L_intervals = 0;
    int gbu_no_lbc = 0;
    int bouncing = 0;
    bool ok = false;
};

struct ScenarioResult {
    MultibumpPlan plan;
    NestedResult nested;   ///< empty unless q >= 1
    Trajectory trajectory;
    ClassificationReport report;
    ZeroNumberAudit audit;
    std::vector<IntervalCheck> checks;
    bool completed = false;  ///< false when the budget stopped the scenario early
    bool matches = false;
    std::string note;
    double seconds = 0.0;
    std::string manifest;
};

/// plan -> nested search (q >= 1) -> solve -> classify -> per-interval check.
/// A budget too small for the search or the final solve leaves the result
/// incomplete (completed = false, matches = false) with the plan in the manifest.
ScenarioResult run_scenario(const std::vector<int>& sigma_bar, const Params& params, const GridPtr& grid,
                            const SolveConfig& config, const ScenarioOptions& options);

/// Per planned interval i: sigma_i = 0 needs one GBU_no_LBC and no L
/// interval, sigma_i = 1 one L interval without bouncing, sigma_i = k >= 2
/// k L intervals joined by k - 1 bouncing times.
std::vector<IntervalCheck> check_behavior(const MultibumpPlan& plan, const ClassificationReport& report,
                                          double t_end);

}  // namespace vhj
