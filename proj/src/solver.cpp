// SPDX-License-Identifier: MIT
#include "vhj/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "vhj/analysis.hpp"
#include "vhj/errors.hpp"

namespace vhj {

void SolveConfig::validate() const {
    if (k_schedule.empty()) throw PreconditionError("k_schedule must not be empty");
    for (std::size_t i = 1; i < k_schedule.size(); ++i) {
        if (!(k_schedule[i] > k_schedule[i - 1])) throw PreconditionError("k_schedule must be strictly increasing");
    }
    if (k_schedule.front() <= 0.0) throw PreconditionError("truncation levels must be positive");
    if (!(dt_init > 0.0 && dt_max >= dt_init)) throw PreconditionError("need 0 < dt_init <= dt_max");
    if (!(time_tol > 0.0 && richardson_tol > 0.0)) throw PreconditionError("tolerances must be positive");
    if (!(t_end > 0.0)) throw PreconditionError("t_end must be positive");
    if (!(trace.window_lo > 0.0 && trace.window_hi > trace.window_lo)) {
        throw PreconditionError("trace window must satisfy 0 < lo < hi");
    }
}

std::size_t Trajectory::index_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return static_cast<std::size_t>(it - times.begin()) - 1;
}

const Field* Trajectory::snapshot_at(double t) const {
    const Field* best = nullptr;
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& s : snapshots) {
        const double d = std::abs(s.time - t);
        if (d < dist) {
            dist = d;
            best = &s;
        }
    }
    return best;
}

double Trajectory::max_trace_on(double t0, double t1) const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= t0 && times[i] <= t1) m = std::max(m, boundary_trace[i]);
    }
    return m;
}

double Trajectory::min_trace_on(double t0, double t1) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= t0 && times[i] <= t1) m = std::min(m, boundary_trace[i]);
    }
    return m;
}

namespace {

struct SourceEval {
    double value = 0.0;
    double d_left = 0.0;
    double d_center = 0.0;
    double d_right = 0.0;
    double gradient = 0.0;
};

// Precomputed stencil data for the interior nodes 1..n-2.
struct Stencil {
    std::vector<double> hl, hr, xx_l, xx_r;  // u_xx = xx_l (u_{i-1} - u_i) + xx_r (u_{i+1} - u_i)
    std::vector<double> wl, wr;              // central u_x = wr D+ + wl D-

    explicit Stencil(const Grid& g) {
        const std::size_t n = g.size();
        hl.resize(n);
        hr.resize(n);
        xx_l.resize(n);
        xx_r.resize(n);
        wl.resize(n);
        wr.resize(n);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            hl[i] = g[i] - g[i - 1];
            hr[i] = g[i + 1] - g[i];
            const double s = hl[i] + hr[i];
            xx_l[i] = 2.0 / (hl[i] * s);
            xx_r[i] = 2.0 / (hr[i] * s);
            wl[i] = hr[i] / s;
            wr[i] = hl[i] / s;
        }
    }
};

class SourceModel {
public:
    SourceModel(const Params& params, const TruncationLevel& level, double peclet_limit)
        : params_(params), level_(level), peclet_(peclet_limit) {}

    // Central u_x where the cell Peclet number is small, monotone Godunov
    // where it is large, and a smoothstep blend in between so the discrete
    // operator stays continuous in u. The Peclet number uses the untruncated
    // p |g|^{p-1}, which bounds every truncated G_k'. The blend weight is then
    // the same function of the slopes for every k, so the discrete sources are
    // ordered in k like the G_k and the levels keep the comparison principle.
    SourceEval eval(const Stencil& st, const std::vector<double>& u, std::size_t i) const {
        const double dm = (u[i] - u[i - 1]) / st.hl[i];
        const double dp = (u[i + 1] - u[i]) / st.hr[i];
        const double gc = st.wr[i] * dp + st.wl[i] * dm;
        const auto c = gradient_source(level_, params_, gc);
        const double pe = params_.p * std::pow(std::abs(gc), params_.p - 1.0) * std::max(st.hl[i], st.hr[i]);
        const double lo = 0.5 * peclet_;
        double theta = 0.0;
        if (pe >= peclet_) {
            theta = 1.0;
        } else if (pe > lo) {
            const double z = (pe - lo) / (peclet_ - lo);
            theta = z * z * (3.0 - 2.0 * z);
        }
        SourceEval e;
        if (theta < 1.0) {
            const double w = 1.0 - theta;
            e.value = w * c.value;
            e.gradient = gc;
            e.d_right = w * c.slope * st.wr[i] / st.hr[i];
            e.d_left = -w * c.slope * st.wl[i] / st.hl[i];
            e.d_center = -(e.d_right + e.d_left);
        }
        if (theta > 0.0) {
            const auto fr = gradient_source(level_, params_, std::max(dp, 0.0));
            const auto fl = gradient_source(level_, params_, std::min(dm, 0.0));
            if (fr.value >= fl.value) {
                e.value += theta * fr.value;
                e.d_right += theta * fr.slope / st.hr[i];
                e.d_center -= theta * fr.slope / st.hr[i];
                if (theta == 1.0) e.gradient = std::max(dp, 0.0);
            } else {
                e.value += theta * fl.value;
                e.d_left -= theta * fl.slope / st.hl[i];
                e.d_center += theta * fl.slope / st.hl[i];
                if (theta == 1.0) e.gradient = std::min(dm, 0.0);
            }
        }
        return e;
    }

    const TruncationLevel& level() const { return level_; }

private:
    Params params_;
    TruncationLevel level_;
    double peclet_;
};

void thomas(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c, std::vector<double>& d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

// One backward-Euler step by Newton's method. Returns false on breakdown.
bool implicit_step(const Stencil& st, const SourceModel& src, const std::vector<double>& u_old, double dt,
                   std::vector<double>& u, const SolveConfig& cfg, std::size_t& iterations) {
    const std::size_t n = u_old.size();
    const std::size_t m = n - 2;
    std::vector<double> a(m), b(m), c(m), r(m);
    u = u_old;
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
        ++iterations;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const auto s = src.eval(st, u, i);
            const double diff = st.xx_l[i] * (u[i - 1] - u[i]) + st.xx_r[i] * (u[i + 1] - u[i]);
            const std::size_t j = i - 1;
            r[j] = -(u[i] - u_old[i] - dt * (diff + s.value));
            a[j] = -dt * (st.xx_l[i] + s.d_left);
            c[j] = -dt * (st.xx_r[i] + s.d_right);
            b[j] = 1.0 + dt * (st.xx_l[i] + st.xx_r[i] - s.d_center);
        }
        thomas(a, b, c, r);
        double step = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::isfinite(r[j])) return false;
            u[j + 1] += r[j];
            step = std::max(step, std::abs(r[j]));
        }
        if (step <= cfg.newton_tol) return true;
    }
    return false;
}

double sqr(double v) { return v * v; }

struct StepDiagnostics {
    double supgrad = 0.0;
    double near_grad = 0.0;
    double saturation = 0.0;
};

StepDiagnostics diagnose(const Stencil& st, const SourceModel& src, const Grid& g, const std::vector<double>& u,
                         double near_zone) {
    StepDiagnostics d;
    std::size_t saturated = 0;
    const std::size_t n = u.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto s = src.eval(st, u, i);
        d.supgrad = std::max(d.supgrad, std::abs(s.gradient));
        if (sqr(s.gradient) > src.level().k) ++saturated;
    }
    for (std::size_t i = 0; i + 1 < n && g[i] <= near_zone; ++i) {
        d.near_grad = std::max(d.near_grad, std::abs((u[i + 1] - u[i]) / g.spacing(i)));
    }
    d.saturation = static_cast<double>(saturated) / static_cast<double>(n - 2);
    return d;
}

bool profile_matches(const Field& f, const Params& params, const TraceSettings& ts) {
    const Grid& g = *f.grid;
    std::size_t checked = 0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double x = g[i];
        if (x < ts.window_lo) continue;
        if (x > ts.window_hi) break;
        const double hl = x - g[i - 1], hr = g[i + 1] - x;
        const double ux = (hl * hl * (f.values[i + 1] - f.values[i]) + hr * hr * (f.values[i] - f.values[i - 1])) /
                          (hl * hr * (hl + hr));
        const double us = singular_steady_derivative(params, x);
        if (std::abs(ux - us) > ts.profile_K * x + ts.profile_rel * us) return false;
        ++checked;
    }
    return checked > 0;
}

struct LevelRun {
    SourceModel src;
    std::vector<double> u, u_prev, u_new;
    Trajectory traj;
    bool last_indicator = false;
    bool regime = false;
};

void record(LevelRun& run, const Stencil& st, const GridPtr& grid, const Params& params, const SolveConfig& cfg,
            double t, bool snapshot) {
    Field f{grid, run.u, t};
    const auto diag = diagnose(st, run.src, *grid, run.u, cfg.trace.near_zone);
    const bool saturated = diag.near_grad > cfg.trace.saturation_fraction * std::sqrt(run.src.level().k);
    const bool raw = saturated && profile_matches(f, params, cfg.trace);
    // one-step hysteresis: a regime switch needs two consecutive agreeing samples
    if (run.traj.times.empty()) {
        run.regime = raw;
    } else if (raw == run.last_indicator) {
        run.regime = raw;
    }
    run.last_indicator = raw;
    const auto tr = boundary_trace(f, params, cfg.trace, run.regime);
    auto& tj = run.traj;
    tj.times.push_back(t);
    tj.boundary_trace.push_back(tr.value);
    tj.trace_residual.push_back(tr.residual);
    tj.trace_low_confidence.push_back(tr.low_confidence ? 1 : 0);
    tj.N_series.push_back(intersection_number(f, params, 1.0, cfg.trace.x_cut));
    tj.supgrad_series.push_back(diag.supgrad);
    tj.near_grad_series.push_back(diag.near_grad);
    tj.saturation_series.push_back(diag.saturation);
    tj.indicator_series.push_back(raw ? 1 : 0);
    tj.singular_regime.push_back(run.regime ? 1 : 0);
    tj.sup_norm_series.push_back(f.sup_norm());
    if (snapshot) tj.snapshots.push_back(std::move(f));
}

struct KViolation {
    double value = 0.0;
    double t = 0.0;
    double x = 0.0;
    double k_lo = 0.0;
};

std::vector<Trajectory> run_lockstep(const Field& phi, const Params& params, const std::vector<TruncationLevel>& levels,
                                     const SolveConfig& cfg, KViolation& max_k_violation) {
    cfg.validate();
    const GridPtr grid = phi.grid;
    const std::size_t n = grid->size();
    if (phi.values.size() != n) throw PreconditionError("initial data does not match its grid");
    for (double v : phi.values) {
        if (!std::isfinite(v)) throw PreconditionError("initial data must be finite");
        if (v < 0.0) throw PreconditionError("initial data must be nonnegative");
    }
    // u(0) = 0 is the boundary condition under study; the value at x = 1 is
    // held fixed, which admits the shifted steady states U_a
    if (phi.values.front() != 0.0) throw PreconditionError("initial data must vanish at x = 0");
    const Stencil st(*grid);

    std::vector<LevelRun> runs;
    runs.reserve(levels.size());
    for (const auto& lv : levels) {
        LevelRun r{SourceModel(params, lv, cfg.peclet_limit), phi.values, phi.values, phi.values, {}, false, false};
        r.traj.k = lv.k;
        r.traj.initial_sup = phi.sup_norm();
        runs.push_back(std::move(r));
    }

    std::vector<double> marks = cfg.snapshot_times;
    marks.push_back(cfg.t_end);
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    std::erase_if(marks, [&](double m) { return m <= 0.0 || m > cfg.t_end; });

    for (auto& r : runs) record(r, st, grid, params, cfg, 0.0, true);

    double t = 0.0;
    double dt = cfg.dt_init;
    double dt_prev = 0.0;
    std::size_t mark = 0;
    SolveStats stats;
    max_k_violation = {};
    std::size_t steps = 0;

    while (mark < marks.size()) {
        if (++steps > cfg.max_steps) throw NumericalError("step budget exhausted before t_end");
        const double target = marks[mark];
        bool hits_mark = false;
        double h = std::min(dt, cfg.dt_max);
        if (t + h >= target * (1.0 - 1e-14) || target - (t + h) < 1e-3 * h) {
            h = target - t;
            hits_mark = true;
        }
        if (h < cfg.dt_min) {
            if (hits_mark && h > 0.0) {
                // tiny remainder before a mark: take it
            } else {
                throw NumericalError("time step underflow below dt_min at t = " + std::to_string(t) +
                                     " (stiff truncated problem: use a smaller k jump or a finer grid)");
            }
        }

        bool ok = true;
        for (auto& r : runs) {
            if (!implicit_step(st, r.src, r.u, h, r.u_new, cfg, stats.newton_iterations)) {
                ok = false;
                break;
            }
        }
        double err = 0.0;
        if (ok && dt_prev > 0.0) {
            const double ratio = h / dt_prev;
            for (auto& r : runs) {
                for (std::size_t i = 1; i + 1 < n; ++i) {
                    const double d2 = (r.u_new[i] - r.u[i]) - ratio * (r.u[i] - r.u_prev[i]);
                    err = std::max(err, std::abs(d2));
                }
            }
            err *= h / (h + dt_prev);
        }
        if (!ok || err > cfg.time_tol) {
            ++stats.rejected;
            if (!ok) {
                dt = 0.25 * h;
            } else {
                dt = h * std::max(0.2, 0.9 * std::sqrt(cfg.time_tol / err));
            }
            if (dt < cfg.dt_min) {
                throw NumericalError("time step underflow below dt_min at t = " + std::to_string(t) +
                                     (ok ? std::string(" (error control)") : std::string(" (Newton failure)")));
            }
            continue;
        }
        ++stats.accepted;
        for (auto& r : runs) {
            std::swap(r.u_prev, r.u);
            std::swap(r.u, r.u_new);
            for (double v : r.u) {
                if (!std::isfinite(v)) throw NumericalError("divergence: non-finite solution value");
            }
        }
        t = hits_mark ? target : t + h;
        for (std::size_t l = 0; l + 1 < runs.size(); ++l) {
            for (std::size_t i = 1; i + 1 < n; ++i) {
                const double v = runs[l].u[i] - runs[l + 1].u[i];
                if (v > max_k_violation.value) max_k_violation = {v, t, (*grid)[i], levels[l].k};
            }
        }
        const bool snap = hits_mark;
        if (cfg.record_every_step || snap) {
            for (auto& r : runs) record(r, st, grid, params, cfg, t, snap);
        }
        if (hits_mark) ++mark;
        const double grow = err > 0.0 ? std::min(2.0, 0.9 * std::sqrt(cfg.time_tol / err)) : 2.0;
        if (!hits_mark || h >= 0.5 * dt) {
            dt_prev = h;
            dt = std::max(h * std::max(grow, 0.5), cfg.dt_min);
        } else {
            dt_prev = h;
        }
    }
    std::vector<Trajectory> out;
    for (auto& r : runs) {
        r.traj.stats = stats;
        out.push_back(std::move(r.traj));
    }
    return out;
}

}  // namespace

TraceEstimate boundary_trace(const Field& field, const Params& params, const TraceSettings& ts, bool singular_regime) {
    const Grid& g = *field.grid;
    TraceEstimate est;
    if (singular_regime) {
        // least squares for c0 + c2 x^2 against u - U*
        double s0 = 0, s2 = 0, s4 = 0, r0 = 0, r2 = 0;
        std::size_t count = 0;
        for (std::size_t i = 1; i < g.size(); ++i) {
            const double x = g[i];
            if (x < ts.window_lo) continue;
            if (x > ts.window_hi) break;
            const double v = field.values[i] - singular_steady(params, x);
            const double x2 = x * x;
            s0 += 1.0;
            s2 += x2;
            s4 += x2 * x2;
            r0 += v;
            r2 += v * x2;
            ++count;
        }
        if (count < 3) {
            est.low_confidence = true;
            return est;
        }
        const double det = s0 * s4 - s2 * s2;
        const double c0 = (r0 * s4 - r2 * s2) / det;
        const double c2 = (s0 * r2 - s2 * r0) / det;
        double ss = 0.0;
        for (std::size_t i = 1; i < g.size(); ++i) {
            const double x = g[i];
            if (x < ts.window_lo) continue;
            if (x > ts.window_hi) break;
            const double v = field.values[i] - singular_steady(params, x);
            ss += sqr(v - c0 - c2 * x * x);
        }
        est.residual = std::sqrt(ss / static_cast<double>(count));
        est.value = std::max(c0, 0.0);
        est.low_confidence = est.residual > ts.fit_tol * params.c_p;
        return est;
    }
    const double x1 = g[1], x2 = g[2];
    const double u1 = field.values[1], u2 = field.values[2];
    const double extrap = u1 - x1 * (u2 - u1) / (x2 - x1);
    est.value = extrap <= ts.trace_tol ? 0.0 : extrap;
    return est;
}

TraceEstimate boundary_trace(const Field& field, const Params& params, const TraceSettings& ts) {
    return boundary_trace(field, params, ts, profile_matches(field, params, ts));
}

bool gradient_singular_now(const Field& field, const Params& params, double k, const TraceSettings& ts,
                           double* near_grad) {
    const Grid& g = *field.grid;
    double ng = 0.0;
    for (std::size_t i = 0; i + 1 < g.size() && g[i] <= ts.near_zone; ++i) {
        ng = std::max(ng, std::abs((field.values[i + 1] - field.values[i]) / g.spacing(i)));
    }
    if (near_grad) *near_grad = ng;
    return ng > ts.saturation_fraction * std::sqrt(k) && profile_matches(field, params, ts);
}

bool gradient_singularity_indicator(const Trajectory& traj, double t) {
    if (traj.times.empty()) return false;
    return traj.indicator_series[traj.index_at(t)] != 0;
}

Trajectory evolve_truncated(const Field& phi, const Params& params, const TruncationLevel& level,
                            const SolveConfig& config) {
    KViolation viol;
    auto out = run_lockstep(phi, params, {level}, config, viol);
    out.front().converged = true;
    return std::move(out.front());
}

Trajectory viscosity_solve(const Field& phi, const Params& params, const SolveConfig& config) {
    std::vector<TruncationLevel> levels;
    for (double k : config.k_schedule) levels.push_back({k, config.variant});
    KViolation viol;
    auto runs = run_lockstep(phi, params, levels, config, viol);
    if (viol.value > config.time_tol) {
        std::ostringstream os;
        os << "truncated solutions are not nondecreasing in k: violation " << viol.value << " between k = " << viol.k_lo
           << " and the next level at t = " << viol.t << ", x = " << viol.x;
        throw ConsistencyError(os.str());
    }
    ConvergenceReport rep;
    rep.max_k_violation = viol.value;
    const GridPtr grid = phi.grid;
    for (std::size_t l = 0; l + 1 < runs.size(); ++l) {
        double d = 0.0;
        const auto& a = runs[l].snapshots;
        const auto& b = runs[l + 1].snapshots;
        for (std::size_t s = 0; s < a.size() && s < b.size(); ++s) {
            for (std::size_t i = 0; i < grid->size(); ++i) {
                const double x = (*grid)[i];
                if (x < config.probe_margin || x > 1.0 - config.probe_margin) continue;
                d = std::max(d, std::abs(a[s].values[i] - b[s].values[i]));
            }
        }
        rep.pair_diffs.push_back(d);
    }
    rep.level_used = runs.size() - 1;
    rep.converged = runs.size() == 1 || rep.pair_diffs.back() < config.richardson_tol;
    Trajectory top = std::move(runs.back());
    top.converged = rep.converged;
    top.convergence = rep;
    return top;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    os.precision(12);
    os << "t,trace,N,supgrad,saturation\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << traj.times[i] << ',' << traj.boundary_trace[i] << ',' << traj.N_series[i] << ','
           << traj.supgrad_series[i] << ',' << traj.saturation_series[i] << '\n';
    }
    return os.str();
}

std::string snapshot_csv(const Field& field) {
    std::ostringstream os;
    os.precision(15);
    os << "x,u\n";
    for (std::size_t i = 0; i < field.values.size(); ++i) os << (*field.grid)[i] << ',' << field.values[i] << '\n';
    return os.str();
}

}  // namespace vhj
