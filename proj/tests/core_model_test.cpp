// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vhj/core_model.hpp"
#include "vhj/errors.hpp"

namespace vhj {
namespace {

TEST(ParamsTest, ExponentAndAmplitudeForCubic) {
    const Params P = Params::from_p(3.0);
    EXPECT_DOUBLE_EQ(P.alpha, 0.5);
    EXPECT_NEAR(P.c_p, std::sqrt(2.0), 1e-15);
}

TEST(ParamsTest, RejectsSubquadraticExponent) {
    EXPECT_THROW(Params::from_p(2.0), DomainError);
    EXPECT_THROW(Params::from_p(1.5), DomainError);
}

TEST(SingularSteadyTest, KnownValues) {
    const Params P = Params::from_p(3.0);
    EXPECT_NEAR(singular_steady(P, 0.25), 0.707107, 1e-6);
    EXPECT_NEAR(singular_steady(P, 1.0), 1.414214, 1e-6);
    for (double p : {2.5, 3.0, 4.0, 7.0}) {
        const Params Q = Params::from_p(p);
        EXPECT_EQ(singular_steady(Q, 1.0) - Q.c_p, 0.0);
    }
    EXPECT_THROW(singular_steady(P, 0.0), DomainError);
    EXPECT_THROW(singular_steady_derivative(P, -1.0), DomainError);
}

// c_p a (a-1) x^{a-2} + |c_p a x^{a-1}|^p = 0 at sampled x
TEST(SingularSteadyTest, SolvesSteadyEquation) {
    for (double p : {2.2, 3.0, 4.5, 10.0}) {
        const Params P = Params::from_p(p);
        const double a = P.alpha;
        for (double x : {1e-4, 0.01, 0.3, 1.0}) {
            const double upp = P.c_p * a * (a - 1.0) * std::pow(x, a - 2.0);
            const double up = P.c_p * a * std::pow(x, a - 1.0);
            EXPECT_NEAR(upp + std::pow(std::abs(up), p), 0.0, 1e-12 * std::abs(upp)) << "p=" << p << " x=" << x;
            EXPECT_NEAR(singular_steady_derivative(P, x), up, 1e-12 * up);
        }
    }
}

TEST(RegularSteadyTest, KnownValues) {
    const Params P = Params::from_p(3.0);
    // sqrt(2) (sqrt(x + 1/2) - sqrt(1/2))
    EXPECT_NEAR(regular_steady(P, 1.0, 0.04), std::sqrt(2.0) * (std::sqrt(0.54) - std::sqrt(0.5)), 1e-14);
    EXPECT_NEAR(regular_steady(P, 1.0, 0.04), 0.039230, 1e-6);
    EXPECT_NEAR(regular_steady_shift(P, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(regular_steady_derivative(P, 1.0, 0.0), 1.0, 1e-14);
    for (double a : {0.5, 3.0, 100.0}) EXPECT_EQ(regular_steady(P, a, 0.0), 0.0);
    EXPECT_THROW(regular_steady(P, 0.0, 0.5), DomainError);
}

TEST(RegularSteadyTest, IncreasesInSlopeTowardSingularProfile) {
    for (double p : {2.5, 3.0, 5.0}) {
        const Params P = Params::from_p(p);
        for (double x : {1e-3, 0.1, 0.5, 1.0}) {
            double prev = 0.0;
            for (double a : {1.0, 10.0, 100.0, 1000.0}) {
                const double v = regular_steady(P, a, x);
                EXPECT_GT(v, prev);
                EXPECT_LT(v, singular_steady(P, x));
                prev = v;
            }
            EXPECT_NEAR(regular_steady(P, 1e8, x), singular_steady(P, x), 1e-2 * singular_steady(P, x));
        }
    }
}

// -U'' = |U'|^p by central differences
TEST(RegularSteadyTest, SolvesSteadyEquation) {
    const Params P = Params::from_p(3.0);
    const double h = 1e-4;
    for (double a : {1.0, 5.0}) {
        for (double x : {0.1, 0.4, 0.8}) {
            const double upp =
                (regular_steady(P, a, x + h) - 2.0 * regular_steady(P, a, x) + regular_steady(P, a, x - h)) / (h * h);
            const double up = regular_steady_derivative(P, a, x);
            EXPECT_NEAR(-upp, std::pow(up, 3.0), 1e-5 * std::max(1.0, std::abs(upp)));
        }
    }
}

TEST(TruncationTest, PiecewiseMinValues) {
    const Params P = Params::from_p(3.0);
    const TruncationLevel L{4.0, TruncationVariant::piecewise_min};
    EXPECT_NEAR(truncated_nonlinearity(L, P, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(truncated_nonlinearity(L, P, 9.0), 18.0, 1e-14);
    EXPECT_NEAR(truncated_nonlinearity(L, P, 4.0), 8.0, 1e-14);
    EXPECT_NEAR(std::pow(4.0, 1.5), 2.0 * 4.0, 1e-14);  // both branches meet at s = k
}

TEST(TruncationTest, BoundedByPowerWithEqualityBelowThreshold) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> us(0.0, 50.0), uk(0.5, 30.0), up(2.1, 6.0);
    for (int n = 0; n < 500; ++n) {
        const Params P = Params::from_p(up(rng));
        const double s = us(rng), k = uk(rng);
        for (auto variant : {TruncationVariant::piecewise_min, TruncationVariant::smooth}) {
            const TruncationLevel L{k, variant};
            const double F = truncated_nonlinearity(L, P, s);
            const double full = std::pow(s, P.p / 2.0);
            EXPECT_LE(F, full * (1.0 + 1e-12));
            if (variant == TruncationVariant::piecewise_min) {
                if (s <= k) EXPECT_NEAR(F, full, 1e-12 * full);
                else EXPECT_LT(F, full);
            }
        }
    }
}

TEST(TruncationTest, DerivativeMatchesDifferenceQuotient) {
    const Params P = Params::from_p(3.0);
    for (auto variant : {TruncationVariant::piecewise_min, TruncationVariant::smooth}) {
        const TruncationLevel L{16.0, variant};
        for (double s : {0.5, 3.0, 15.0, 17.0, 40.0}) {
            const double h = 1e-6 * s;
            const double fd = (truncated_nonlinearity(L, P, s + h) - truncated_nonlinearity(L, P, s - h)) / (2.0 * h);
            EXPECT_NEAR(truncated_nonlinearity_derivative(L, P, s), fd, 1e-5 * std::max(1.0, fd));
        }
    }
}

TEST(TruncationTest, NondecreasingInLevel) {
    const Params P = Params::from_p(3.0);
    for (auto variant : {TruncationVariant::piecewise_min, TruncationVariant::smooth}) {
        for (double s : {0.1, 10.0, 200.0, 1e4}) {
            double prev = 0.0;
            for (double k : {25.0, 100.0, 400.0, 1600.0, 6400.0}) {
                const double F = truncated_nonlinearity({k, variant}, P, s);
                EXPECT_GE(F, prev);
                prev = F;
            }
        }
    }
}

TEST(ControlConstantsTest, TorsionDerivedValues) {
    for (double p : {2.5, 3.0, 4.0}) {
        const AnalyticConstants1D c = control_constants(Params::from_p(p));
        // 2 sup |psi'| = 1 on (0,1)
        EXPECT_NEAR(c.kappa, 1.0, 1e-12);
        EXPECT_NEAR(c.c1_hopf, 0.25, 1e-6);
        EXPECT_NEAR(c.K2, 2.0 * c.kappa * c.c1_hopf, 1e-12);
        EXPECT_NEAR(c.K3, 1.0 / c.kappa, 1e-12);
        EXPECT_NEAR(c.L, 2.0 * c.K3, 1e-12);
        EXPECT_NEAR(c.psi_torsion(0.5), 0.125, 1e-15);
    }
}

TEST(ControlConstantsTest, QuadraticCaseNormalization) { EXPECT_NEAR(control_cost_normalization(2.0), 0.25, 1e-15); }

// sup_a (a z - k_p |a|^q) = |z|^p by a dense-then-golden maximization
TEST(ControlConstantsTest, LegendreIdentity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uz(-5.0, 5.0), up(2.1, 5.0);
    for (int n = 0; n < 100; ++n) {
        const double p = up(rng), z = uz(rng);
        const double q = p / (p - 1.0);
        const double kp = control_cost_normalization(p);
        const auto f = [&](double a) { return a * z - kp * std::pow(std::abs(a), q); };
        // the maximizer has the sign of z and modulus below (|z|/(kp q))^{1/(q-1)} * 2
        const double amax = 2.0 * std::pow(std::abs(z) / (kp * q), 1.0 / (q - 1.0)) + 1.0;
        double lo = z >= 0.0 ? 0.0 : -amax, hi = z >= 0.0 ? amax : 0.0;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 200; ++it) {
            const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
            if (f(a) < f(b)) lo = a;
            else hi = b;
        }
        const double best = f(0.5 * (lo + hi));
        EXPECT_NEAR(best, std::pow(std::abs(z), p), 1e-8 * std::max(1.0, std::pow(std::abs(z), p)))
            << "p=" << p << " z=" << z;
    }
}

TEST(RegularizationThresholdTest, Formula) {
    const Params P = Params::from_p(3.0);
    EXPECT_NEAR(regularization_threshold(P, 0.1, 0.5), 0.1 / 16.0 * 1.0, 1e-15);
    EXPECT_NEAR(regularization_threshold(P, 0.1, 2.0), 0.1 / 16.0 / (2.0 + 8.0), 1e-15);
}

}  // namespace
}  // namespace vhj
