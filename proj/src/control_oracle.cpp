// SPDX-License-Identifier: MIT
#include "vhj/control_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>

#include "vhj/errors.hpp"

namespace vhj {

std::string to_string(Policy p) { return p == Policy::zero_control ? "zero_control" : "pde_feedback"; }

ValueTable::ValueTable(const Field& reward, const Trajectory& value, const Params& params, double slope_clip)
    : grid_(reward.grid) {
    (void)params;
    if (!(slope_clip > 0.0)) throw PreconditionError("slope clip must be positive");
    const auto add = [&](const Field& f) {
        if (f.grid->size() != grid_->size()) throw PreconditionError("value snapshots live on another grid");
        std::vector<double> s(grid_->size() - 1);
        for (std::size_t j = 0; j + 1 < grid_->size(); ++j) {
            s[j] = std::clamp((f.values[j + 1] - f.values[j]) / grid_->spacing(j), -slope_clip, slope_clip);
        }
        times_.push_back(f.time);
        values_.push_back(f.values);
        slopes_.push_back(std::move(s));
    };
    add(reward);
    for (const auto& f : value.snapshots) {
        if (f.time > times_.back()) add(f);
    }
    if (times_.size() < 2) throw PreconditionError("value trajectory stores no snapshots");
}

std::size_t ValueTable::bracket(double r, double& w) const {
    if (r <= 0.0) {
        w = 0.0;
        return 0;
    }
    if (r >= times_.back()) {
        w = 1.0;
        return times_.size() - 2;
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    w = (r - times_[i]) / (times_[i + 1] - times_[i]);
    return i;
}

double ValueTable::value(double x, double r) const {
    double w = 0.0;
    const std::size_t i = bracket(r, w);
    const std::size_t j = std::min(grid_->locate(x), grid_->size() - 2);
    const double s = (x - (*grid_)[j]) / grid_->spacing(j);
    const auto at = [&](const std::vector<double>& v) { return v[j] + s * (v[j + 1] - v[j]); };
    return (1.0 - w) * at(values_[i]) + w * at(values_[i + 1]);
}

double ValueTable::slope(double x, double r) const {
    double w = 0.0;
    const std::size_t i = bracket(r, w);
    const std::size_t j = std::min(grid_->locate(x), grid_->size() - 2);
    return (1.0 - w) * slopes_[i][j] + w * slopes_[i + 1][j];
}

namespace {

struct ShardSums {
    double gain = 0.0, gain2 = 0.0, cost = 0.0, missed = 0.0;
    std::size_t alive = 0, paths = 0;
};

ShardSums run_shard(const ControlRun& run, int shard, std::size_t paths, double dt, std::size_t steps,
                    const Field& reward, const ValueTable& table, const Params& params) {
    std::seed_seq seq{static_cast<std::uint32_t>(run.seed), static_cast<std::uint32_t>(run.seed >> 32),
                      static_cast<std::uint32_t>(shard)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double p = params.p;
    const double q = p / (p - 1.0);
    const double kp = control_cost_normalization(p);
    const double sq = std::sqrt(2.0 * dt);
    ShardSums out;
    for (std::size_t n = 0; n < paths; ++n) {
        double x = run.x0, cost = 0.0, log_keep = 0.0;
        bool alive = true;
        for (std::size_t k = 0; k < steps; ++k) {
            double a = 0.0;
            if (run.policy == Policy::pde_feedback) {
                const double g = table.slope(x, run.horizon - static_cast<double>(k) * dt);
                a = p * std::pow(std::abs(g), p - 2.0) * g;
                cost += kp * std::pow(std::abs(a), q) * dt;
            }
            const double xn = x + a * dt + sq * normal(rng);
            if (xn <= 0.0 || xn >= 1.0) {
                alive = false;
                break;
            }
            // bridge probability of an exit between the two samples
            const double e = std::min(x * xn, (1.0 - x) * (1.0 - xn)) / dt;
            if (e < 40.0) {
                const double pm = std::exp(-x * xn / dt) + std::exp(-(1.0 - x) * (1.0 - xn) / dt);
                log_keep += std::log1p(-std::min(pm, 1.0 - 1e-15));
            }
            x = xn;
        }
        const double g = (alive ? reward.at(x) : 0.0) - cost;
        out.gain += g;
        out.gain2 += g * g;
        out.cost += cost;
        out.alive += alive ? 1 : 0;
        if (alive) out.missed += 1.0 - std::exp(log_keep);
        ++out.paths;
    }
    return out;
}

ControlRun simulate(ControlRun run, const Field& reward, const ValueTable& table, const Params& params,
                    int threads, bool parallel) {
    if (run.n_paths < 1000) throw PreconditionError("control runs need at least 1000 paths");
    if (!(run.x0 > 0.0 && run.x0 < 1.0)) throw PreconditionError("x0 must lie in (0,1)");
    if (!(run.horizon > 0.0)) throw PreconditionError("horizon must be positive");
    if (run.policy == Policy::pde_feedback && run.horizon > table.max_time() * (1.0 + 1e-12)) {
        throw PreconditionError("horizon beyond the stored value snapshots");
    }
    if (run.shards < 1) throw PreconditionError("shard count must be positive");
    if (run.dt_mc <= 0.0) run.dt_mc = run.horizon / 4000.0;
    const auto steps = static_cast<std::size_t>(std::ceil(run.horizon / run.dt_mc - 1e-9));
    const double dt = run.horizon / static_cast<double>(steps);
    run.dt_mc = dt;

    const int S = run.shards;
    std::vector<ShardSums> sums(static_cast<std::size_t>(S));
    const auto shard_paths = [&](int s) {
        const auto n = run.n_paths / static_cast<std::size_t>(S);
        return n + (static_cast<std::size_t>(s) < run.n_paths % static_cast<std::size_t>(S) ? 1 : 0);
    };
    if (parallel) {
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(threads, 1))
        for (int s = 0; s < S; ++s) {
            try {
                sums[static_cast<std::size_t>(s)] = run_shard(run, s, shard_paths(s), dt, steps, reward, table, params);
            } catch (...) {
#pragma omp critical
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (int s = 0; s < S; ++s) {
            sums[static_cast<std::size_t>(s)] = run_shard(run, s, shard_paths(s), dt, steps, reward, table, params);
        }
    }

    ShardSums total;
    for (const auto& s : sums) {
        total.gain += s.gain;
        total.gain2 += s.gain2;
        total.cost += s.cost;
        total.missed += s.missed;
        total.alive += s.alive;
        total.paths += s.paths;
    }
    const double n = static_cast<double>(total.paths);
    run.mean_gain = total.gain / n;
    const double var = std::max(0.0, (total.gain2 - n * run.mean_gain * run.mean_gain) / (n - 1.0));
    run.ci_halfwidth = 1.96 * std::sqrt(var / n);
    run.survival = static_cast<double>(total.alive) / n;
    run.mean_cost = total.cost / n;
    run.missed_exit = total.missed / n;
    run.overshoot_warning = run.missed_exit > 0.05;
    return run;
}

}  // namespace

ControlRun simulate_gain(ControlRun run, const Field& reward, const ValueTable& table, const Params& params,
                         int threads) {
    return simulate(std::move(run), reward, table, params, threads, true);
}

ControlRun simulate_gain_serial(ControlRun run, const Field& reward, const ValueTable& table,
                                const Params& params) {
    return simulate(std::move(run), reward, table, params, 1, false);
}

HorizonWitness horizon_witness(const ValueTable& table, double x0, double ratio) {
    HorizonWitness best;
    std::vector<double> ts, vs;
    // geometric horizons from 1e-6 max_time up to max_time
    for (double r = 0.0;;) {
        ts.push_back(r);
        vs.push_back(table.value(x0, r));
        if (r >= table.max_time()) break;
        r = std::min(table.max_time(), r == 0.0 ? table.max_time() * 1e-6 : r * 1.05);
    }
    const std::size_t n = ts.size();
    std::vector<std::size_t> left(n), right(n);
    for (std::size_t i = 1, m = 1; i < n; ++i) {
        if (vs[i] > vs[m]) m = i;
        left[i] = m;
    }
    for (std::size_t i = n, m = n - 1; i-- > 1;) {
        if (vs[i] > vs[m]) m = i;
        right[i] = m;
    }
    double score = 0.0;
    for (std::size_t j = 2; j + 1 < n; ++j) {
        const double lo = std::min(vs[left[j - 1]], vs[right[j + 1]]);
        if (!(lo > 0.0)) continue;
        const double sc = vs[j] > 0.0 ? lo / vs[j] : INFINITY;
        if (sc > score) {
            score = sc;
            best.h1 = ts[left[j - 1]];
            best.h2 = ts[j];
            best.h3 = ts[right[j + 1]];
            best.v1 = vs[left[j - 1]];
            best.v2 = vs[j];
            best.v3 = vs[right[j + 1]];
        }
    }
    best.found = score > ratio;
    return best;
}

std::string control_csv(const std::vector<ControlRun>& runs) {
    std::ostringstream os;
    os.precision(10);
    os << "x0,horizon,policy,n_paths,dt_mc,seed,mean,ci,survival,cost,missed_exit\n";
    for (const auto& r : runs) {
        os << r.x0 << ',' << r.horizon << ',' << to_string(r.policy) << ',' << r.n_paths << ',' << r.dt_mc << ','
           << r.seed << ',' << r.mean_gain << ',' << r.ci_halfwidth << ',' << r.survival << ',' << r.mean_cost << ','
           << r.missed_exit << '\n';
    }
    return os.str();
}

}  // namespace vhj
