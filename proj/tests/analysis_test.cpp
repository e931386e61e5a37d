// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vhj/analysis.hpp"
#include "vhj/errors.hpp"
#include "vhj/initial_data.hpp"
#include "vhj/solver.hpp"

namespace vhj {
namespace {

const Params P3 = Params::from_p(3.0);

// Hand-built trajectory: trace(t), singular flag and N per sample.
struct Synthetic {
    Trajectory tr;
    explicit Synthetic(std::size_t n) {
        tr.converged = true;
        tr.times.resize(n);
        for (std::size_t i = 0; i < n; ++i) tr.times[i] = static_cast<double>(i) * 1e-3;
        tr.boundary_trace.assign(n, 0.0);
        tr.trace_residual.assign(n, 0.0);
        tr.trace_low_confidence.assign(n, 0);
        tr.N_series.assign(n, 2);
        tr.supgrad_series.assign(n, 1.0);
        tr.near_grad_series.assign(n, 1.0);
        tr.saturation_series.assign(n, 0.0);
        tr.indicator_series.assign(n, 0);
        tr.singular_regime.assign(n, 0);
        tr.sup_norm_series.assign(n, 1.0);
        tr.initial_sup = 1.0;
    }
    // trace bump of height h on samples [a, b), singular on [a-1, b+1)
    void loss(std::size_t a, std::size_t b, double h) {
        for (std::size_t i = a; i < b; ++i) {
            const double s = std::sin(std::numbers::pi * (static_cast<double>(i - a) + 0.5) / static_cast<double>(b - a));
            tr.boundary_trace[i] = h * s;
        }
        for (std::size_t i = a - 1; i < b + 1 && i < tr.times.size(); ++i) tr.singular_regime[i] = 1;
    }
    void N_from(std::size_t i, int v) {
        for (; i < tr.N_series.size(); ++i) tr.N_series[i] = v;
    }
};

ClassifyOptions opts(double thr = 1e-3) {
    ClassifyOptions o;
    o.lbc_threshold = thr;
    return o;
}

TEST(SignChangesTest, Examples) {
    std::vector<double> x, v;
    for (int i = 1; i < 200; ++i) {
        x.push_back(i / 200.0);
        v.push_back(std::sin(3.0 * std::numbers::pi * x.back()));
    }
    EXPECT_EQ(sign_changes(x, v, 0.0).count, 2);
    std::vector<double> c(x.size(), 0.3);
    EXPECT_EQ(sign_changes(x, c, 0.0).count, 0);
    const std::vector<double> xs{0.25, 0.5, 0.75}, vs{1.0, -1.0, 1.0};
    EXPECT_EQ(sign_changes(xs, vs, 0.5).count, 2);
    EXPECT_EQ(sign_changes(xs, vs, 1.5).count, 0);
    EXPECT_THROW(sign_changes(xs, vs, -1.0), PreconditionError);
}

// perturbations below the band never create sign changes beyond the banded count
TEST(SignChangesTest, BandedCountStableUnderSmallPerturbation) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 200; ++n) {
        std::vector<double> x, v;
        for (int i = 0; i < 50; ++i) {
            x.push_back(i / 50.0);
            v.push_back(std::sin(5.0 * x.back() + u(rng)) + 0.1 * u(rng));
        }
        const double band = 0.2;
        const int base = sign_changes(x, v, band).count;
        std::vector<double> w = v;
        for (auto& y : w) y += 0.49 * band * u(rng);
        EXPECT_LE(sign_changes(x, w, 2.0 * band).count, base);
    }
}

TEST(IntersectionTest, BelowSingularProfileAndBump) {
    const auto g = Grid::make({});
    const Field half = Field::sample(g, [](double x) { return x > 0.0 ? 0.5 * singular_steady(P3, x) : 0.0; });
    EXPECT_EQ(intersection_number(half, P3), 0);
    BumpSpec bs;
    bs.epsilon = 0.1;
    bs.K = 1.5;
    const Bump b = Bump::make(bs, P3);
    const Field psi = Field::sample(g, [&](double x) { return b(x); });
    EXPECT_EQ(intersection_number(psi, P3), 2);
    const Field low = Field::sample(g, [&](double x) { return 0.3 * b(x); });
    EXPECT_LE(intersection_number(low, P3), 2);
    EXPECT_THROW(intersection_number(psi, P3, 0.0), PreconditionError);
}

TEST(ClassifyTest, ZeroDataSingleClassicalInterval) {
    Synthetic s(50);
    s.N_from(0, 0);
    const auto rep = classify(s.tr, P3, opts());
    EXPECT_EQ(rep.pattern(), "C");
    EXPECT_TRUE(rep.transitions.empty());
    EXPECT_EQ(rep.first_gbu, -1.0);
}

TEST(ClassifyTest, SingleLossAndRecovery) {
    Synthetic s(100);
    s.loss(20, 60, 0.05);
    s.N_from(30, 1);
    s.N_from(70, 0);
    const auto rep = classify(s.tr, P3, opts());
    EXPECT_EQ(rep.pattern(), "CLC");
    ASSERT_EQ(rep.transitions.size(), 2u);
    EXPECT_EQ(rep.transitions[0].type, EventType::GBU_with_LBC);
    EXPECT_EQ(rep.transitions[1].type, EventType::recovery);
    EXPECT_NEAR(rep.first_gbu, 0.0195, 1e-3);
    for (int d : rep.N_drops) EXPECT_GE(d, 1);
    const auto audit = zero_number_audit(s.tr, rep, P3);
    EXPECT_TRUE(audit.passed());
}

TEST(ClassifyTest, SingularInstantWithoutLossIsGbuNoLbc) {
    Synthetic s(100);
    for (std::size_t i = 40; i < 44; ++i) s.tr.singular_regime[i] = 1;
    s.tr.near_grad_series[42] = 50.0;
    s.tr.boundary_trace[42] = 5e-4;  // below the threshold
    s.N_from(42, 0);
    const auto rep = classify(s.tr, P3, opts());
    EXPECT_EQ(rep.pattern(), "CC");
    ASSERT_EQ(rep.transitions.size(), 1u);
    EXPECT_EQ(rep.transitions[0].type, EventType::GBU_no_LBC);
    EXPECT_DOUBLE_EQ(rep.transitions[0].time, s.tr.times[42]);
    EXPECT_EQ(rep.count_intervals(Behavior::L), 0);
}

TEST(ClassifyTest, DeepDipInsideLossIsBouncing) {
    Synthetic s(120);
    s.loss(20, 50, 0.05);
    s.loss(50, 80, 0.04);
    s.tr.boundary_trace[49] = s.tr.boundary_trace[50] = 5e-4;  // above the threshold, far below the peaks
    s.N_from(25, 2);
    s.N_from(60, 1);
    s.N_from(90, 0);
    auto rep = classify(s.tr, P3, opts(1e-4));
    EXPECT_EQ(rep.pattern(), "CLLC");
    EXPECT_EQ(rep.count_events(EventType::bouncing), 1);
    // a shallow dip is not a bounce
    ClassifyOptions o = opts(1e-4);
    o.bounce_depth = 1e-3;
    rep = classify(s.tr, P3, o);
    EXPECT_EQ(rep.pattern(), "CLC");
}

TEST(ClassifyTest, TwoLossesAndShortGapBounce) {
    Synthetic s(160);
    s.loss(20, 50, 0.05);
    s.loss(60, 100, 0.05);
    s.N_from(40, 1);
    s.N_from(110, 0);
    auto rep = classify(s.tr, P3, opts());
    EXPECT_EQ(rep.pattern(), "CLCLC");
    EXPECT_EQ(rep.count_events(EventType::reloss), 1);
    ClassifyOptions o = opts();
    o.bounce_gap = 0.02;
    rep = classify(s.tr, P3, o);
    EXPECT_EQ(rep.pattern(), "CLLC");
    EXPECT_EQ(rep.count_events(EventType::bouncing), 1);
}

TEST(ClassifyTest, ResidualRaisesThreshold) {
    Synthetic s(100);
    s.loss(20, 60, 0.01);
    for (std::size_t i = 0; i < 100; ++i) s.tr.trace_residual[i] = 0.01;
    const auto rep = classify(s.tr, P3, opts());
    EXPECT_EQ(rep.count_intervals(Behavior::L), 0);
    EXPECT_NEAR(lbc_thresholds(s.tr, 1e-3)[30], 0.03, 1e-15);
}

TEST(ClassifyTest, RefusesUnconverged) {
    Synthetic s(10);
    s.tr.converged = false;
    EXPECT_THROW(classify(s.tr, P3, opts()), PreconditionError);
}

// every interval is C or L and every GBU is followed by one of them
TEST(ClassifyTest, NoThirdState) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pos(5, 150);
    for (int n = 0; n < 50; ++n) {
        Synthetic s(200);
        const std::size_t a = static_cast<std::size_t>(pos(rng));
        s.loss(a, a + 20, 0.02);
        const auto rep = classify(s.tr, P3, opts());
        EXPECT_EQ(rep.intervals.size(), rep.transitions.size() + 1);
        for (const auto& iv : rep.intervals) EXPECT_TRUE(iv.label == Behavior::C || iv.label == Behavior::L);
        for (std::size_t i = 0; i + 1 < rep.intervals.size(); ++i) {
            EXPECT_DOUBLE_EQ(rep.intervals[i].t_hi, rep.intervals[i + 1].t_lo);
        }
    }
}

TEST(ZeroNumberAuditTest, DetectsIncreaseAndLargeDataWitness) {
    Synthetic s(100);
    s.N_from(50, 3);
    const auto rep = classify(s.tr, P3, opts());
    auto a = zero_number_audit(s.tr, rep, P3);
    EXPECT_FALSE(a.monotone);
    EXPECT_FALSE(a.passed());

    Synthetic big(100);
    big.tr.initial_sup = 2.0;  // above c_p
    big.N_from(10, 0);
    big.N_from(60, 1);
    a = zero_number_audit(big.tr, classify(big.tr, P3, opts()), P3);
    EXPECT_FALSE(a.monotonicity_checked);
    EXPECT_TRUE(a.nonmonotone_witness);
    EXPECT_DOUBLE_EQ(a.witness_t1, big.tr.times[10]);
    EXPECT_DOUBLE_EQ(a.witness_t2, big.tr.times[60]);
}

TEST(ClassifyTest, CsvSchemas) {
    Synthetic s(100);
    s.loss(20, 60, 0.05);
    const auto rep = classify(s.tr, P3, opts());
    const std::string t = transitions_csv(rep), i = intervals_csv(rep);
    EXPECT_EQ(t.substr(0, t.find('\n')), "t,type,N_before,N_after");
    EXPECT_EQ(i.substr(0, i.find('\n')), "t_lo,t_hi,label");
    EXPECT_EQ(static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n')), rep.transitions.size() + 1);
}

TEST(ThresholdTest, DefaultValue) {
    EXPECT_NEAR(default_lbc_threshold(P3, 0.1), 1e-4 * std::sqrt(2.0) * std::sqrt(0.1), 1e-18);
}

// Simulated single bump: one loss, one recovery, N drops at each transition.
TEST(ClassifySimulationTest, SupercriticalBumpLosesAndRecovers) {
    const auto g = Grid::make({});
    BumpSpec bs;
    bs.epsilon = 0.1;
    bs.K = 1.5;
    const Bump b = Bump::make(bs, P3);
    SolveConfig c;
    c.t_end = 0.012;
    const Trajectory tr = viscosity_solve(Field::sample(g, [&](double x) { return b(x); }), P3, c);
    ASSERT_TRUE(tr.converged);
    const auto rep = classify(tr, P3, opts(default_lbc_threshold(P3, 0.1)));
    EXPECT_EQ(rep.pattern(), "CLC");
    EXPECT_EQ(rep.count_events(EventType::recovery), 1);
    const auto audit = zero_number_audit(tr, rep, P3);
    EXPECT_EQ(audit.N0, 2);
    EXPECT_TRUE(audit.passed());
}

}  // namespace
}  // namespace vhj
