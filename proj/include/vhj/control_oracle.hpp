// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vhj/core_model.hpp"
#include "vhj/grid.hpp"
#include "vhj/solver.hpp"

namespace vhj {

enum class Policy { zero_control, pde_feedback };

std::string to_string(Policy p);

/// Controlled diffusion dX = a ds + sqrt(2) dW on (0,1), absorbed at the
/// ends, with gain G = [tau > t] u0(X_t) - k_p int_0^{tau ^ t} |a|^q ds.
struct ControlRun {
    double x0 = 0.5;
    double horizon = 1e-3;
    std::size_t n_paths = 10000;
    double dt_mc = 0.0;  ///< 0: horizon / 4000
    Policy policy = Policy::zero_control;
    std::uint64_t seed = 12345;
    int shards = 64;     ///< fixed shard count keeps results independent of the thread count

    // results
    double mean_gain = 0.0;
    double ci_halfwidth = 0.0;  ///< 95% normal interval
    double survival = 0.0;      ///< fraction of paths alive at the horizon
    double mean_cost = 0.0;
    double missed_exit = 0.0;   ///< survivors whose Brownian bridge would have exited, as a fraction of paths
    bool overshoot_warning = false;
};

/// Value field snapshots w(., r) over remaining time r with precomputed
/// cell slopes clipped at the top truncation slope.
class ValueTable {
public:
    /// Snapshots of `value` (and the reward at r = 0) must cover [0, horizon].
    ValueTable(const Field& reward, const Trajectory& value, const Params& params, double slope_clip);
    double value(double x, double r) const;
    double slope(double x, double r) const;
    double max_time() const { return times_.back(); }
    const GridPtr& grid() const { return grid_; }

private:
    std::size_t bracket(double r, double& w) const;
    GridPtr grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<double>> slopes_;
};

/// Simulate the run with `threads` OpenMP threads over its shards.
/// Throws PreconditionError for n_paths < 1000, x0 outside (0,1) or a
/// horizon beyond the value table.
ControlRun simulate_gain(ControlRun run, const Field& reward, const ValueTable& table, const Params& params,
                         int threads = 1);
/// Serial reference over the same shards (identical result).
ControlRun simulate_gain_serial(ControlRun run, const Field& reward, const ValueTable& table,
                                const Params& params);

/// Horizons h1 < h2 < h3 with value(h1) and value(h3) above ratio * value(h2).
struct HorizonWitness {
    bool found = false;
    double h1 = 0.0, h2 = 0.0, h3 = 0.0;
    double v1 = 0.0, v2 = 0.0, v3 = 0.0;
};

/// Scans geometric horizons (ratio 1.05) of the table at x0 for the deepest dip.
HorizonWitness horizon_witness(const ValueTable& table, double x0, double ratio = 2.0);

/// `x0,horizon,policy,n_paths,dt_mc,seed,mean,ci,survival,cost,missed_exit` rows.
std::string control_csv(const std::vector<ControlRun>& runs);

}  // namespace vhj
