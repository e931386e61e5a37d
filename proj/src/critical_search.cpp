// SPDX-License-Identifier: MIT
#include "vhj/critical_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <sstream>

#include "vhj/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vhj {

double window_objective(const Trajectory& traj, const ObjectiveWindow& window, double lbc_threshold) {
    if (!(window.t_hi >= window.t_lo)) throw PreconditionError("objective window is empty");
    if (traj.times.empty() || traj.times.back() < window.t_hi * (1.0 - 1e-12)) {
        throw PreconditionError("trajectory ends before the objective window");
    }
    const std::vector<double> thr = lbc_thresholds(traj, lbc_threshold);
    const bool take_max = window.mode == ObjectiveMode::max_positive;
    double best = take_max ? -INFINITY : INFINITY;
    bool any = false;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        if (t < window.t_lo || t > window.t_hi) continue;
        const double e = traj.boundary_trace[i] - thr[i];
        best = take_max ? std::max(best, e) : std::min(best, e);
        any = true;
    }
    if (!any) {
        // window between two samples: use the one at its start
        const std::size_t i = traj.index_at(window.t_lo);
        best = traj.boundary_trace[i] - thr[i];
    }
    return best;
}

namespace {

// full solve of one family member, objective on the window
double solve_objective(const Family& family, double mu, const ObjectiveWindow& window, const Params& params,
                       SolveConfig config, double lbc_threshold) {
    config.t_end = window.t_hi;
    const Trajectory traj = viscosity_solve(family(mu), params, config);
    return window_objective(traj, window, lbc_threshold);
}

void record_anomalies(CriticalResult& r) {
    for (const auto& a : r.audit) {
        for (const auto& b : r.audit) {
            if (a.mu < b.mu && a.objective > 0.0 && b.objective <= 0.0) {
                std::ostringstream os;
                os << "objective positive at mu = " << a.mu << " but not at mu = " << b.mu;
                r.anomalies.push_back(os.str());
            }
        }
    }
}

struct BudgetExceeded {};

}  // namespace

CriticalResult bisect_objective(const std::function<double(double)>& objective, const SearchOptions& options) {
    if (!(options.tol > 0.0)) throw PreconditionError("bisection tolerance must be positive");
    CriticalResult r;
    const auto eval = [&](double mu) {
        const double f = objective(mu);
        r.audit.push_back({mu, f});
        ++r.evaluations;
        return f;
    };
    const double f1 = eval(1.0);
    if (!(f1 > 0.0)) throw SearchRefused("objective at mu = 1 is not positive", f1);
    const double f0 = eval(0.0);
    if (f0 > 0.0) throw SearchRefused("objective at mu = 0 is positive", f0);
    r.objective_lo = f0;
    r.objective_hi = f1;
    while (r.hi - r.lo > options.tol) {
        const double mid = 0.5 * (r.lo + r.hi);
        const double f = eval(mid);
        if (f > 0.0) {
            r.hi = mid;
            r.objective_hi = f;
        } else {
            r.lo = mid;
            r.objective_lo = f;
        }
    }
    r.mu_star = r.hi;
    record_anomalies(r);
    return r;
}

CriticalResult bisect_critical(const Family& family, const ObjectiveWindow& window, const Params& params,
                               const SolveConfig& config, const SearchOptions& options) {
    int solves = 0;
    return bisect_objective(
        [&](double mu) {
            if (++solves > options.max_solves) throw NumericalError("bisection exceeded its solve budget");
            return solve_objective(family, mu, window, params, config, options.lbc_threshold);
        },
        options);
}

std::vector<double> sweep_objective_serial(const Family& family, const ObjectiveWindow& window,
                                           const std::vector<double>& mus, const Params& params,
                                           const SolveConfig& config, double lbc_threshold) {
    std::vector<double> out;
    out.reserve(mus.size());
    for (double mu : mus) out.push_back(solve_objective(family, mu, window, params, config, lbc_threshold));
    return out;
}

std::vector<double> sweep_objective(const Family& family, const ObjectiveWindow& window,
                                    const std::vector<double>& mus, const Params& params,
                                    const SolveConfig& config, double lbc_threshold, int threads) {
    std::vector<double> out(mus.size());
    std::exception_ptr error;
    const long n = static_cast<long>(mus.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(threads, 1))
    for (long i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] =
                solve_objective(family, mus[static_cast<std::size_t>(i)], window, params, config, lbc_threshold);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

ObjectiveWindow coordinate_window(const MultibumpPlan& plan, int bump_index) {
    const auto i = static_cast<std::size_t>(bump_index);
    if (bump_index < 0 || bump_index >= plan.m) throw PreconditionError("bump index outside the plan");
    const int xi = plan.xi[i];
    if (xi == 0) return {plan.marks[i].hat, plan.marks[i + 1].hat, ObjectiveMode::max_positive};
    if (xi == 2) {
        if (bump_index + 1 >= plan.m) throw PreconditionError("a link coordinate needs a following bump");
        return {plan.marks[i].s, plan.marks[i + 1].s, ObjectiveMode::min_positive};
    }
    throw PreconditionError("coordinate is not deformed (xi = 1)");
}

namespace {

class NestedSearch {
public:
    NestedSearch(const MultibumpPlan& plan, const GridPtr& grid, const SolveConfig& config,
                 const SearchOptions& options)
        : plan_(plan), grid_(grid), config_(config), options_(options), coords_(plan.deformed_indices()) {
        for (int c : coords_) windows_.push_back(coordinate_window(plan, c));
        config_.t_end = 0.0;
        for (const auto& w : windows_) config_.t_end = std::max(config_.t_end, w.t_hi);
    }

    int q() const { return static_cast<int>(coords_.size()); }
    int solves() const { return solves_; }
    const std::vector<double>& deepest() const { return deepest_; }

    // representative value of a finished search on coordinate j
    double representative(const CriticalResult& r, int j) const {
        return windows_[static_cast<std::size_t>(j)].mode == ObjectiveMode::max_positive ? r.lo : r.hi;
    }

    // Coordinates above j are fixed in mu; returns mu with 0..j at their critical values.
    std::vector<double> solve_level(int j, std::vector<double> mu, std::vector<CriticalResult>* levels) {
        const auto objective = [&](double x) {
            std::vector<double> v = mu;
            v[static_cast<std::size_t>(j)] = x;
            if (j > 0) v = solve_level(j - 1, v, nullptr);
            return objectives(v)[static_cast<std::size_t>(j)];
        };
        const CriticalResult r = bisect_objective(objective, options_);
        mu[static_cast<std::size_t>(j)] = representative(r, j);
        if (j > 0) mu = solve_level(j - 1, mu, levels);
        if (levels) levels->push_back(r);
        deepest_ = mu;
        return mu;
    }

private:
    const std::vector<double>& objectives(const std::vector<double>& mu) {
        const double unit = options_.tol / 4.0;
        std::vector<long long> key;
        for (double x : mu) key.push_back(std::llround(x / unit));
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        if (solves_ >= options_.max_solves) throw BudgetExceeded{};
        ++solves_;
        const Field phi = deform(plan_, DeformationPoint{mu}, grid_);
        const Trajectory traj = viscosity_solve(phi, plan_.params, config_);
        std::vector<double> vals;
        for (const auto& w : windows_) vals.push_back(window_objective(traj, w, options_.lbc_threshold));
        return memo_.emplace(std::move(key), std::move(vals)).first->second;
    }

    const MultibumpPlan& plan_;
    GridPtr grid_;
    SolveConfig config_;
    SearchOptions options_;
    std::vector<int> coords_;
    std::vector<ObjectiveWindow> windows_;
    std::map<std::vector<long long>, std::vector<double>> memo_;
    std::vector<double> deepest_;
    int solves_ = 0;
};

}  // namespace

NestedResult nested_critical(const MultibumpPlan& plan, const GridPtr& grid, const SolveConfig& config,
                             const SearchOptions& options) {
    const int q = plan.q();
    if (q < 1) throw PreconditionError("nested search needs at least one deformed coordinate");
    if (q > 3) throw PreconditionError("nested search is limited to q <= 3 coordinates");
    NestedSearch search(plan, grid, config, options);
    NestedResult out;
    try {
        out.Lambda = search.solve_level(q - 1, std::vector<double>(static_cast<std::size_t>(q), 1.0), &out.levels);
    } catch (const BudgetExceeded&) {
        out.partial = true;
        out.Lambda = search.deepest();
        out.note = "solve budget of " + std::to_string(options.max_solves) + " exhausted";
    }
    out.solves = search.solves();
    if (!out.Lambda.empty()) out.phi = deform(plan, DeformationPoint{out.Lambda}, grid);
    return out;
}

CalibrationConstants calibrate(const Params& params, const GridPtr& grid, const SolveConfig& config,
                               const CalibrationOptions& options) {
    BumpSpec spec;
    spec.epsilon = options.eps_ref;
    spec.K = options.K;
    spec.a1 = options.a1;
    spec.a2 = options.a2;
    const Bump bump = Bump::make(spec, params);
    const Field phi = Field::sample(grid, [&](double x) { return bump(x); });
    const double e2 = options.eps_ref * options.eps_ref;
    ClassifyOptions copts;
    copts.lbc_threshold = default_lbc_threshold(params, options.eps_ref);
    SolveConfig cfg = config;
    cfg.t_end = options.horizon * e2;
    for (int attempt = 0; attempt < 4; ++attempt, cfg.t_end *= 2.0) {
        const Trajectory traj = viscosity_solve(phi, params, cfg);
        const ClassificationReport rep = classify(traj, params, copts);
        double on = -1.0, off = -1.0;
        for (const auto& t : rep.transitions) {
            if (t.type == EventType::GBU_with_LBC && on < 0.0) on = t.time;
            if (t.type == EventType::recovery) off = t.time;
        }
        if (on < 0.0) throw PlanError("calibration bump shows no loss of boundary condition; raise K");
        if (off < 0.0 || rep.intervals.back().label == Behavior::L) continue;
        CalibrationConstants c;
        c.K = options.K;
        c.a1 = options.a1;
        c.a2 = options.a2;
        c.eps_ref = options.eps_ref;
        c.margin = options.margin;
        c.T_on = on;
        c.T_off = off;
        c.c1 = (1.0 + options.margin) * on / e2;
        c.c2 = (1.0 - options.margin) * off / e2;
        if (!(c.c2 > c.c1)) throw PlanError("calibration margin leaves no LBC window");
        return c;
    }
    throw PlanError("calibration bump did not recover within the pilot horizon");
}

std::vector<IntervalCheck> check_behavior(const MultibumpPlan& plan, const ClassificationReport& report,
                                          double t_end) {
    std::vector<IntervalCheck> out;
    const std::size_t d = plan.sigma_bar.size();
    for (std::size_t i = 0; i < d; ++i) {
        IntervalCheck c;
        c.index = static_cast<int>(i) + 1;
        c.sigma = plan.sigma_bar[i];
        c.t_lo = i == 0 ? 0.0 : plan.marks[static_cast<std::size_t>(plan.kappa[i] - 1)].hat_minus;
        c.t_hi = i + 1 == d ? t_end : plan.marks[static_cast<std::size_t>(plan.kappa[i + 1] - 1)].hat_minus;
        const auto inside = [&](double t) { return t >= c.t_lo && (t < c.t_hi || (i + 1 == d && t <= c.t_hi)); };
        for (const auto& iv : report.intervals) {
            if (iv.label == Behavior::L && inside(iv.t_lo)) ++c.L_intervals;
        }
        for (const auto& tr : report.transitions) {
            if (!inside(tr.time)) continue;
            if (tr.type == EventType::GBU_no_LBC) ++c.gbu_no_lbc;
            if (tr.type == EventType::bouncing) ++c.bouncing;
        }
        if (c.sigma == 0) c.ok = c.gbu_no_lbc == 1 && c.L_intervals == 0;
        else if (c.sigma == 1) c.ok = c.L_intervals == 1 && c.bouncing == 0;
        else c.ok = c.L_intervals == c.sigma && c.bouncing == c.sigma - 1;
        out.push_back(c);
    }
    return out;
}

ScenarioResult run_scenario(const std::vector<int>& sigma_bar, const Params& params, const GridPtr& grid,
                            const SolveConfig& config, const ScenarioOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    ScenarioResult out;
    out.plan = plan_multibump(sigma_bar, params, options.calib, options.plan);
    const MultibumpPlan& plan = out.plan;
    SearchOptions search = options.search;
    if (search.lbc_threshold <= 0.0) search.lbc_threshold = default_lbc_threshold(params, options.calib.eps_ref);
    if (options.budget >= 0) search.max_solves = std::min(search.max_solves, options.budget - 1);

    const auto stop = [&](const std::string& why) {
        out.note = why;
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.manifest = plan_to_text(plan) + "completed = false\nnote = " + why + "\n";
        return out;
    };
    Field phi;
    if (plan.q() >= 1) {
        if (search.max_solves < 1) return stop("solve budget leaves no room for the critical search");
        out.nested = nested_critical(plan, grid, config, search);
        if (out.nested.partial) return stop("critical search: " + out.nested.note);
        phi = out.nested.phi;
    } else {
        phi = deform(plan, DeformationPoint{}, grid);
    }
    if (options.budget >= 0 && out.nested.solves + 1 > options.budget) {
        return stop("solve budget leaves no room for the final run");
    }
    SolveConfig cfg = config;
    cfg.t_end = options.horizon_factor * plan.marks.back().hat_plus;
    out.trajectory = viscosity_solve(phi, params, cfg);
    ClassifyOptions copts;
    copts.lbc_threshold = search.lbc_threshold;
    out.report = classify(out.trajectory, params, copts);
    out.audit = zero_number_audit(out.trajectory, out.report, params);
    out.checks = check_behavior(plan, out.report, cfg.t_end);
    out.completed = true;
    out.matches = std::all_of(out.checks.begin(), out.checks.end(), [](const IntervalCheck& c) { return c.ok; });
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ostringstream os;
    os.precision(12);
    os << plan_to_text(plan);
    os << "lbc_threshold = " << search.lbc_threshold << "\n";
    os << "bisect_tol = " << search.tol << "\n";
    os << "max_solves = " << search.max_solves << "\n";
    os << "time_tol = " << cfg.time_tol << "\nrichardson_tol = " << cfg.richardson_tol << "\n";
    os << "t_end = " << cfg.t_end << "\n";
    os << "Lambda = [";
    for (std::size_t i = 0; i < out.nested.Lambda.size(); ++i) os << (i ? ", " : "") << out.nested.Lambda[i];
    os << "]\n";
    if (out.nested.partial) os << "nested_partial = " << out.nested.note << "\n";
    os << "nested_solves = " << out.nested.solves << "\n";
    for (std::size_t l = 0; l < out.nested.levels.size(); ++l) {
        const auto& r = out.nested.levels[l];
        os << "level " << l << " bracket = [" << r.lo << ", " << r.hi << "] evaluations = " << r.evaluations << "\n";
        for (const auto& e : r.audit) os << "  eval mu = " << e.mu << " objective = " << e.objective << "\n";
        for (const auto& a : r.anomalies) os << "  anomaly: " << a << "\n";
    }
    os << "pattern = " << out.report.pattern() << "\n";
    for (const auto& c : out.checks) {
        os << "interval " << c.index << " sigma = " << c.sigma << " window = [" << c.t_lo << ", " << c.t_hi
           << "] L = " << c.L_intervals << " gbu_no_lbc = " << c.gbu_no_lbc << " bouncing = " << c.bouncing
           << (c.ok ? " ok" : " MISMATCH") << "\n";
    }
    os << "zero_number_audit = " << (out.audit.passed() ? "pass" : "fail") << "\n";
    os << "matches = " << (out.matches ? "true" : "false") << "\n";
    os << "seconds = " << out.seconds << "\n";
    out.manifest = os.str();
    return out;
}

}  // namespace vhj
