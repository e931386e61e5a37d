// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vhj/errors.hpp"
#include "vhj/initial_data.hpp"
#include "vhj/solver.hpp"

namespace vhj {
namespace {

GridPtr coarse_grid(std::size_t nodes = 1025) {
    GridSpec s;
    s.nodes = nodes;
    return Grid::make(s);
}

double sup_diff(const Field& a, const Field& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
    return d;
}

Field bump_field(const GridPtr& g, double eps, double scale) {
    BumpSpec bs;
    bs.epsilon = eps;
    bs.K = 1.5;
    const Bump b = Bump::make(bs, Params::from_p(3.0));
    return Field::sample(g, [&](double x) { return scale * b(x); });
}

// smooth nonnegative data vanishing at both ends
Field random_smooth(const GridPtr& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(0.0, 0.3);
    const double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng);
    return Field::sample(g, [&](double x) {
        const double s = std::sin(std::numbers::pi * x);
        return s * (a1 + a2 * s * s + a3 * std::sin(3.0 * std::numbers::pi * x) * std::sin(3.0 * std::numbers::pi * x));
    });
}

TEST(SolverTest, ZeroDataStaysZero) {
    const auto g = coarse_grid();
    const Params P = Params::from_p(3.0);
    SolveConfig c;
    c.t_end = 0.01;
    const Trajectory tr = viscosity_solve(Field::sample(g, [](double) { return 0.0; }), P, c);
    ASSERT_TRUE(tr.converged);
    for (const auto& s : tr.snapshots) EXPECT_EQ(s.sup_norm(), 0.0);
    for (double v : tr.boundary_trace) EXPECT_EQ(v, 0.0);
}

TEST(SolverTest, RegularSteadyStatePreserved) {
    const auto g = coarse_grid();
    const Params P = Params::from_p(3.0);
    const Field phi = Field::sample(g, [&](double x) { return regular_steady(P, 1.0, x); });
    SolveConfig c;
    c.t_end = 0.2;
    c.snapshot_times = {0.05, 0.1};
    const Trajectory tr = viscosity_solve(phi, P, c);
    for (const auto& s : tr.snapshots) EXPECT_LE(sup_diff(s, phi), 10.0 * c.space_tol);
}

// Small data: the source is O(delta^3) and the solution follows the heat semigroup.
TEST(SolverTest, SmallDataFollowsHeatEquation) {
    const auto g = coarse_grid();
    const Params P = Params::from_p(3.0);
    const double delta = 1e-3;
    const Field phi = Field::sample(g, [&](double x) { return delta * std::sin(std::numbers::pi * x); });
    SolveConfig c;
    c.t_end = 0.1;
    c.time_tol = 1e-7;
    const Trajectory tr = viscosity_solve(phi, P, c);
    const Field& last = tr.snapshots.back();
    const double decay = std::exp(-std::numbers::pi * std::numbers::pi * last.time);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        err = std::max(err, std::abs(last.values[i] - delta * decay * std::sin(std::numbers::pi * (*g)[i])));
    }
    EXPECT_LT(err, 1e-2 * delta * decay);
    for (double s : tr.saturation_series) EXPECT_EQ(s, 0.0);
    for (double d : tr.convergence.pair_diffs) EXPECT_LT(d, 1e-14);
}

TEST(SolverTest, MaximumPrincipleOnRandomData) {
    const auto g = coarse_grid();
    const Params P = Params::from_p(3.0);
    std::mt19937_64 rng(2024);
    SolveConfig c;
    c.t_end = 0.02;
    c.snapshot_times = {0.005, 0.01};
    for (int n = 0; n < 4; ++n) {
        const Field phi = random_smooth(g, rng);
        const Trajectory tr = viscosity_solve(phi, P, c);
        for (double s : tr.sup_norm_series) EXPECT_LE(s, phi.sup_norm() + c.time_tol);
    }
}

TEST(SolverTest, OrderPreservedAndContinuousDependence) {
    // k-order needs the default resolution; coarse grids break it by O(h)
    const auto g = Grid::make({});
    const Params P = Params::from_p(3.0);
    const Field hi = bump_field(g, 0.1, 1.0);
    Field lo = hi;
    for (double& v : lo.values) v *= 0.9;
    SolveConfig c;
    c.t_end = 0.01;
    c.snapshot_times = {1e-4, 1e-3, 5e-3};
    const Trajectory a = viscosity_solve(lo, P, c);
    const Trajectory b = viscosity_solve(hi, P, c);
    const double delta = sup_diff(lo, hi);
    ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
    for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
        for (std::size_t i = 0; i < g->size(); ++i) {
            EXPECT_LE(a.snapshots[s].values[i], b.snapshots[s].values[i] + c.time_tol);
        }
        EXPECT_LE(sup_diff(a.snapshots[s], b.snapshots[s]), delta + 2.0 * c.richardson_tol);
    }
}

TEST(SolverTest, TruncatedLevelsNondecreasingInK) {
    // k-order needs the default resolution; coarse grids break it by O(h)
    const auto g = Grid::make({});
    const Params P = Params::from_p(3.0);
    const Field phi = bump_field(g, 0.1, 2.0);
    SolveConfig c;
    c.t_end = 2e-3;
    c.snapshot_times = {1e-4, 5e-4, 1e-3};
    const Trajectory lo = evolve_truncated(phi, P, {25.0, c.variant}, c);
    const Trajectory hi = evolve_truncated(phi, P, {400.0, c.variant}, c);
    ASSERT_EQ(lo.snapshots.size(), hi.snapshots.size());
    for (std::size_t s = 0; s < lo.snapshots.size(); ++s) {
        for (std::size_t i = 1; i + 1 < g->size(); ++i) {
            EXPECT_LE(lo.snapshots[s].values[i], hi.snapshots[s].values[i] + c.time_tol);
        }
    }
    // the lockstep run checks the same order at every common step
    const Trajectory all = viscosity_solve(phi, P, c);
    EXPECT_LE(all.convergence.max_k_violation, c.time_tol);
}

TEST(SolverTest, SupercriticalBumpSaturatesBeforeSingularTime) {
    const auto g = Grid::make({});
    const Params P = Params::from_p(3.0);
    const Field phi = bump_field(g, 0.1, 2.0);
    SolveConfig c;
    c.t_end = 2e-4;
    const Trajectory tr = viscosity_solve(phi, P, c);
    std::size_t first_sing = tr.times.size(), first_sat = tr.times.size();
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (first_sing == tr.times.size() && tr.indicator_series[i]) first_sing = i;
        if (first_sat == tr.times.size() && tr.saturation_series[i] > 0.0) first_sat = i;
    }
    ASSERT_LT(first_sing, tr.times.size());
    EXPECT_LT(first_sat, first_sing);
    EXPECT_TRUE(gradient_singularity_indicator(tr, tr.times[first_sing]));
    EXPECT_FALSE(gradient_singularity_indicator(tr, 0.0));
}

TEST(SolverTest, SmallDataNeverSingular) {
    const auto g = coarse_grid();
    const Params P = Params::from_p(3.0);
    const Field phi = bump_field(g, 0.1, 0.1);
    SolveConfig c;
    c.t_end = 0.01;
    const Trajectory tr = viscosity_solve(phi, P, c);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        EXPECT_FALSE(tr.indicator_series[i]);
        EXPECT_LT(tr.supgrad_series[i], 0.1 * std::sqrt(c.k_schedule.back()));
    }
}

// |u(t) - u(s)| <= M (t - s) away from t = 0, with M stable under refinement
TEST(SolverTest, TimeLipschitzConstantStableUnderRefinement) {
    const Params P = Params::from_p(3.0);
    SolveConfig c;
    c.t_end = 0.02;
    for (int i = 1; i <= 10; ++i) c.snapshot_times.push_back(0.01 + 0.001 * i);
    std::vector<double> M;
    for (std::size_t nodes : {1025u, 2049u}) {
        const auto g = coarse_grid(nodes);
        const Trajectory tr = viscosity_solve(bump_field(g, 0.2, 0.5), P, c);
        double m = 0.0;
        for (std::size_t s = 1; s + 1 < tr.snapshots.size(); ++s) {
            if (tr.snapshots[s].time < 0.01) continue;
            m = std::max(m, sup_diff(tr.snapshots[s + 1], tr.snapshots[s]) /
                                (tr.snapshots[s + 1].time - tr.snapshots[s].time));
        }
        M.push_back(m);
    }
    ASSERT_GT(M[0], 0.0);
    EXPECT_NEAR(M[1] / M[0], 1.0, 0.1);
}

TEST(BoundaryTraceTest, SingularProfileAndShift) {
    const auto g = Grid::make({});
    const Params P = Params::from_p(3.0);
    const Field ustar = Field::sample(g, [&](double x) { return x > 0.0 ? singular_steady(P, x) : 0.0; });
    const TraceEstimate t0 = boundary_trace(ustar, P, TraceSettings{}, true);
    EXPECT_NEAR(t0.value, 0.0, 1e-8);
    const Field shifted = Field::sample(g, [&](double x) { return x > 0.0 ? singular_steady(P, x) + 0.05 : 0.0; });
    const TraceEstimate t1 = boundary_trace(shifted, P, TraceSettings{}, true);
    EXPECT_NEAR(t1.value, 0.05, 1e-8);
    EXPECT_FALSE(t1.low_confidence);
}

TEST(BoundaryTraceTest, RegularProfileHasZeroTrace) {
    const auto g = Grid::make({});
    const Params P = Params::from_p(3.0);
    const Field u1 = Field::sample(g, [&](double x) { return regular_steady(P, 1.0, x); });
    EXPECT_EQ(boundary_trace(u1, P, TraceSettings{}, false).value, 0.0);
    EXPECT_EQ(boundary_trace(u1, P).value, 0.0);
    EXPECT_FALSE(gradient_singular_now(u1, P, 6400.0, TraceSettings{}));
}

TEST(SolverTest, RejectsInvalidInput) {
    const auto g = coarse_grid();
    const Params P = Params::from_p(3.0);
    SolveConfig c;
    c.t_end = 1e-3;
    EXPECT_THROW(viscosity_solve(Field::sample(g, [](double) { return 0.1; }), P, c), PreconditionError);
    EXPECT_THROW(viscosity_solve(Field::sample(g, [](double x) { return -x * (1 - x); }), P, c), PreconditionError);
    SolveConfig bad = c;
    bad.k_schedule = {100.0, 25.0};
    EXPECT_THROW(bad.validate(), PreconditionError);
    bad = c;
    bad.t_end = 0.0;
    EXPECT_THROW(bad.validate(), PreconditionError);
}

TEST(SolverTest, CsvSchemas) {
    const auto g = coarse_grid();
    SolveConfig c;
    c.t_end = 1e-3;
    const Trajectory tr = viscosity_solve(bump_field(g, 0.1, 0.5), Params::from_p(3.0), c);
    const std::string csv = trajectory_csv(tr);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,trace,N,supgrad,saturation");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), tr.times.size() + 1);
    const std::string snap = snapshot_csv(tr.snapshots.back());
    EXPECT_EQ(snap.substr(0, snap.find('\n')), "x,u");
}

}  // namespace
}  // namespace vhj
