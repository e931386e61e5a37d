// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <cmath>

#include "vhj/critical_search.hpp"
#include "vhj/errors.hpp"

namespace vhj {
namespace {

const Params P3 = Params::from_p(3.0);

TEST(BisectObjectiveTest, LocatesSignChange) {
    SearchOptions o;
    o.tol = 1e-3;
    const auto r = bisect_objective([](double mu) { return mu - 0.3; }, o);
    EXPECT_LE(r.hi - r.lo, o.tol);
    EXPECT_LE(r.lo, 0.3);
    EXPECT_GT(r.hi, 0.3);
    EXPECT_EQ(r.mu_star, r.hi);
    EXPECT_LE(r.objective_lo, 0.0);
    EXPECT_GT(r.objective_hi, 0.0);
    EXPECT_EQ(r.evaluations, static_cast<int>(r.audit.size()));
    EXPECT_EQ(r.evaluations, 2 + 10);  // ceil(log2(1 / 1e-3)) halvings
    EXPECT_TRUE(r.anomalies.empty());
}

// a non-monotone objective still returns a bracket with opposite end signs
TEST(BisectObjectiveTest, BracketValidForNonMonotoneObjective) {
    SearchOptions o;
    o.tol = 1e-4;
    const auto f = [](double mu) { return mu - 0.5 + 0.3 * std::sin(30.0 * mu); };
    const auto r = bisect_objective(f, o);
    EXPECT_LE(f(r.lo), 0.0);
    EXPECT_GT(f(r.hi), 0.0);
}

TEST(BisectObjectiveTest, RefusesInvalidEndpoints) {
    SearchOptions o;
    EXPECT_THROW(bisect_objective([](double) { return 1.0; }, o), SearchRefused);
    EXPECT_THROW(bisect_objective([](double) { return -1.0; }, o), SearchRefused);
    try {
        bisect_objective([](double mu) { return 0.5 - mu; }, o);
    } catch (const SearchRefused& e) {
        EXPECT_EQ(e.objective, -0.5);
    }
    o.tol = 0.0;
    EXPECT_THROW(bisect_objective([](double mu) { return mu - 0.5; }, o), PreconditionError);
}

Trajectory window_trajectory() {
    Trajectory t;
    t.converged = true;
    for (int i = 0; i <= 10; ++i) {
        t.times.push_back(0.1 * i);
        t.boundary_trace.push_back(i == 5 ? 0.02 : 0.001 * i);
        t.trace_residual.push_back(0.0);
        t.singular_regime.push_back(0);
    }
    return t;
}

TEST(WindowObjectiveTest, MaxAndMinModes) {
    const Trajectory t = window_trajectory();
    EXPECT_NEAR(window_objective(t, {0.0, 1.0, ObjectiveMode::max_positive}, 0.005), 0.015, 1e-15);
    EXPECT_NEAR(window_objective(t, {0.6, 1.0, ObjectiveMode::min_positive}, 0.005), 0.001, 1e-15);
    EXPECT_NEAR(window_objective(t, {0.0, 0.4, ObjectiveMode::max_positive}, 0.005), -0.001, 1e-15);
    EXPECT_THROW(window_objective(t, {0.5, 1.5, ObjectiveMode::max_positive}, 0.0), PreconditionError);
}

TEST(CoordinateWindowTest, LinkAndAmplitudeCoordinates) {
    const auto a = plan_multibump({0, 1}, P3, CalibrationConstants{});
    const auto w0 = coordinate_window(a, 0);
    EXPECT_EQ(w0.mode, ObjectiveMode::max_positive);
    EXPECT_EQ(w0.t_lo, a.marks[0].hat);
    EXPECT_EQ(w0.t_hi, a.marks[1].hat);
    EXPECT_THROW(coordinate_window(a, 1), PreconditionError);

    const auto b = plan_multibump({2}, P3, CalibrationConstants{});
    const auto w2 = coordinate_window(b, 0);
    EXPECT_EQ(w2.mode, ObjectiveMode::min_positive);
    EXPECT_EQ(w2.t_lo, b.marks[0].s);
    EXPECT_EQ(w2.t_hi, b.marks[1].s);
}

ClassificationReport report_with(std::vector<Interval> iv, std::vector<Transition> tr) {
    ClassificationReport r;
    r.intervals = std::move(iv);
    r.transitions = std::move(tr);
    return r;
}

TEST(CheckBehaviorTest, SingleLossAndBounce) {
    const auto plan = plan_multibump({1}, P3, CalibrationConstants{});
    const double t_end = 0.2;
    auto rep = report_with({{0, 1e-3, Behavior::C}, {1e-3, 5e-3, Behavior::L}, {5e-3, t_end, Behavior::C}},
                           {{1e-3, EventType::GBU_with_LBC, 2, 1}, {5e-3, EventType::recovery, 1, 0}});
    auto checks = check_behavior(plan, rep, t_end);
    ASSERT_EQ(checks.size(), 1u);
    EXPECT_TRUE(checks[0].ok);
    EXPECT_EQ(checks[0].L_intervals, 1);

    rep = report_with({{0, 1e-3, Behavior::C}, {1e-3, 3e-3, Behavior::L}, {3e-3, 5e-3, Behavior::L},
                       {5e-3, t_end, Behavior::C}},
                      {{1e-3, EventType::GBU_with_LBC, 2, 1}, {3e-3, EventType::bouncing, 1, 1},
                       {5e-3, EventType::recovery, 1, 0}});
    EXPECT_FALSE(check_behavior(plan, rep, t_end)[0].ok);
    const auto two = plan_multibump({2}, P3, CalibrationConstants{});
    const auto c2 = check_behavior(two, rep, t_end);
    ASSERT_EQ(c2.size(), 1u);
    EXPECT_TRUE(c2[0].ok);
    EXPECT_EQ(c2[0].bouncing, 1);
}

TEST(CheckBehaviorTest, GbuWithoutLossInterval) {
    const auto plan = plan_multibump({0, 1}, P3, CalibrationConstants{});
    const double t_end = 1.0;
    const double t0 = plan.marks[0].hat, t1 = plan.marks[1].s;
    const auto rep = report_with(
        {{0, t0, Behavior::C}, {t0, t1, Behavior::C}, {t1, 2 * t1, Behavior::L}, {2 * t1, t_end, Behavior::C}},
        {{t0, EventType::GBU_no_LBC, 4, 2}, {t1, EventType::GBU_with_LBC, 2, 1}, {2 * t1, EventType::recovery, 1, 0}});
    const auto checks = check_behavior(plan, rep, t_end);
    ASSERT_EQ(checks.size(), 2u);
    EXPECT_TRUE(checks[0].ok);
    EXPECT_EQ(checks[0].gbu_no_lbc, 1);
    EXPECT_TRUE(checks[1].ok);
}

// cheap solves: single truncation level on a coarse grid
struct Cheap {
    GridPtr grid;
    SolveConfig config;
    Cheap() {
        GridSpec s;
        s.nodes = 1025;
        grid = Grid::make(s);
        config.k_schedule = {400.0};
    }
};

TEST(SweepTest, ParallelMatchesSerialExactly) {
    const Cheap c;
    BumpSpec bs;
    bs.epsilon = 0.1;
    bs.K = 1.5;
    const Bump b = Bump::make(bs, P3);
    const Family fam = [&](double mu) { return Field::sample(c.grid, [&](double x) { return mu * b(x); }); };
    const ObjectiveWindow w{0.0, 3e-3, ObjectiveMode::max_positive};
    const std::vector<double> mus{0.4, 0.8, 1.0, 1.3};
    const double thr = default_lbc_threshold(P3, 0.1);
    const auto serial = sweep_objective_serial(fam, w, mus, P3, c.config, thr);
    for (int threads : {1, 2, 4}) {
        const auto par = sweep_objective(fam, w, mus, P3, c.config, thr, threads);
        ASSERT_EQ(par.size(), serial.size());
        for (std::size_t i = 0; i < par.size(); ++i) EXPECT_EQ(par[i], serial[i]);
    }
    EXPECT_LE(serial.front(), 0.0);
    EXPECT_GT(serial.back(), 0.0);
}

// q = 1 with an amplitude coordinate is a plain bisection on that amplitude
TEST(NestedCriticalTest, SingleAmplitudeCoordinateReducesToBisection) {
    Cheap c;
    c.grid = Grid::make({});  // the inner bump needs the full resolution
    c.config.k_schedule = {6400.0};
    const auto plan = plan_multibump({0, 1}, P3, CalibrationConstants{});
    SearchOptions o;
    o.tol = 0.05;
    o.lbc_threshold = default_lbc_threshold(P3, 0.1);
    const auto nested = nested_critical(plan, c.grid, c.config, o);
    const Family fam = [&](double mu) { return deform(plan, DeformationPoint{{mu}}, c.grid); };
    const auto direct = bisect_critical(fam, coordinate_window(plan, 0), P3, c.config, o);
    ASSERT_EQ(nested.Lambda.size(), 1u);
    EXPECT_FALSE(nested.partial);
    EXPECT_EQ(nested.Lambda[0], direct.lo);
    EXPECT_EQ(nested.levels.front().lo, direct.lo);
    EXPECT_EQ(nested.levels.front().hi, direct.hi);
    EXPECT_EQ(nested.solves, direct.evaluations);
}

TEST(BisectCriticalTest, BudgetGuard) {
    const Cheap c;
    BumpSpec bs;
    bs.epsilon = 0.1;
    bs.K = 1.5;
    const Bump b = Bump::make(bs, P3);
    const Family fam = [&](double mu) { return Field::sample(c.grid, [&](double x) { return mu * b(x); }); };
    SearchOptions o;
    o.max_solves = 1;
    o.lbc_threshold = default_lbc_threshold(P3, 0.1);
    EXPECT_THROW(bisect_critical(fam, {0.0, 3e-3, ObjectiveMode::max_positive}, P3, c.config, o), NumericalError);
}

TEST(ScenarioTest, BudgetTooSmallLeavesPartialResult) {
    const Cheap c;
    ScenarioOptions o;
    o.budget = 0;
    const auto r = run_scenario({1}, P3, c.grid, c.config, o);
    EXPECT_FALSE(r.completed);
    EXPECT_FALSE(r.matches);
    EXPECT_NE(r.manifest.find("sigma_bar"), std::string::npos);
}

}  // namespace
}  // namespace vhj
