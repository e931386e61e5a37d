// SPDX-License-Identifier: MIT
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vhj/core_model.hpp"
#include "vhj/grid.hpp"

namespace vhj {

/// Closed-form profile x -> value on [0,1].
using Profile = std::function<double(double)>;

/// Bump centred at epsilon with support [(1-a2) eps, (1+a2) eps].
///
/// The unit profile f(y), y = |x/eps - 1|, solves f'' = c (y - a1)(a2 - y),
/// so it is concave on the cap and convex on the flanks; a2 = 3 a1 makes
/// f'(a2) = 0 and the bump C^2 at the support edges. c is scaled so that
/// the bump exceeds K x^alpha on the inner band with a 5% margin.
struct BumpSpec {
    double epsilon = 0.1;
    double a1 = 0.075;
    double a2 = 0.225;
    double K = 1.05;
    double K1 = 0.0;  ///< 0: take max(sup of the unit profile, K / (1 - 2^-alpha))
};

class Bump {
public:
    /// Builds and verifies every listed bump property; throws
    /// ConstructionError naming the first one that fails.
    static Bump make(const BumpSpec& spec, const Params& params);
    /// Same unit profile at another scale (verified again).
    Bump rescaled(double epsilon) const;

    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    const BumpSpec& spec() const { return spec_; }
    double epsilon() const { return spec_.epsilon; }
    double support_lo() const { return (1.0 - spec_.a2) * spec_.epsilon; }
    double support_hi() const { return (1.0 + spec_.a2) * spec_.epsilon; }
    double peak() const;
    /// Unit-profile value f(y) (scale free).
    double unit(double y) const;

private:
    Bump(const BumpSpec& spec, const Params& params, double c);
    void verify() const;

    BumpSpec spec_;
    Params params_;
    double c_ = 0.0;
};

/// C^2 convex modification of g on [X, Y] that keeps g outside and lies above it.
class Convexified {
public:
    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    double X = 0.0, Y = 0.0, L = 0.0;  ///< interval and secant slope
    double eta = 0.0;                   ///< collar bound: g' < L on [X, X+eta], g' > L on [Y-eta, Y]
    double eps1 = 0.0, eps2 = 0.0;      ///< collar widths
    double root_residual = 0.0;         ///< |integral of zeta (g' - L)|
    double collar_mass = 0.0;           ///< integral of zeta |g' - L|

private:
    friend Convexified convexify(Profile g, Profile gp, Profile gpp, double X, double Y);
    double zeta(double x) const;
    double zeta_prime(double x) const;
    double partial(double x) const;  ///< integral of zeta (g' - L) from X to x
    Profile g_, gp_, gpp_;
    double gX_ = 0.0;
    double collar1_ = 0.0;
};

/// Needs g(X) > 0, g(Y) > 0 and g'' > 0 on [X, Y] (PreconditionError otherwise).
/// Throws ConstructionError if the collar equation cannot be bracketed.
Convexified convexify(Profile g, Profile gp, Profile gpp, double X, double Y);

/// Link h between two bumps (eps_lo <= eps_hi / 2): equals the lower bump
/// near 0, the upper bump beyond (1 - a1) eps_hi, lies above their sum, and
/// h - K x^alpha is convex in between.
class Link {
public:
    static Link make(const Bump& lo, const Bump& hi, const Params& params);
    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;
    const Bump& lo() const { return lo_; }
    const Bump& hi() const { return hi_; }
    const Convexified& convex_part() const { return conv_; }

private:
    Link(Bump lo, Bump hi, Params params, Convexified conv);
    void verify() const;
    Bump lo_, hi_;
    Params params_;
    Convexified conv_;
};

/// Constants fitted from pilot single-bump runs at eps_ref: LBC holds on
/// [c1 eps^2, c2 eps^2] and the bump height coefficient K produces it.
struct CalibrationConstants {
    double c1 = 0.035;
    double c2 = 0.58;
    double K = 1.5;
    double a1 = 0.075;
    double a2 = 0.225;
    double eps_ref = 0.1;
    double T_on = 0.0;   ///< measured onset and recovery at eps_ref (0 if not measured)
    double T_off = 0.0;
    double margin = 0.2;
};

enum class PlanMode { analytic, calibrated };

struct PlanOptions {
    PlanMode mode = PlanMode::calibrated;
    /// Calibrated mode: scale of the outermost bump eps_m.
    /// Analytic mode: the recursion seed eps_{m+1}.
    double eps_top = 0.12;
    int max_bumps = 6;
    double min_eps = 2e-3;  ///< smallest bump scale the grid resolves
};

/// Time marks of one bump: s = c0 eps^2 between s- = c1 eps^2 and s+ = c2 eps^2,
/// and the regularization marks hat_s = 1.5 L gamma in [L gamma, 2 L gamma].
struct TimeMarks {
    double hat_minus = 0.0, hat = 0.0, hat_plus = 0.0;
    double s_minus = 0.0, s = 0.0, s_plus = 0.0;
};

/// Kappa and xi indices for a behavior sequence sigma_bar (all entries >= 0).
/// kappa has d+1 entries starting at 1; xi has m = kappa[d] - 1 entries.
void behavior_indices(const std::vector<int>& sigma_bar, std::vector<int>& kappa, std::vector<int>& xi);

struct MultibumpPlan {
    std::vector<int> sigma_bar;
    std::vector<int> kappa;
    std::vector<int> xi;
    int m = 0;
    PlanMode mode = PlanMode::calibrated;
    std::vector<double> epsilons;  ///< eps_1 < ... < eps_{m+1}
    std::vector<double> gammas;    ///< gamma_1 ... gamma_{m+1}
    std::vector<Bump> bumps;       ///< phi_1 ... phi_m
    std::vector<Link> links;       ///< h_1 ... h_{m-1}; h_m is phi_m
    std::vector<TimeMarks> marks;  ///< per bump, plus the closing hat marks at index m
    std::vector<double> envelope_sup;  ///< sup H_i for i = 1..m
    CalibrationConstants calib;
    Params params;
    std::vector<std::string> verification;

    /// Bumps with xi != 1, in increasing order (0-based).
    std::vector<int> deformed_indices() const;
    int q() const { return static_cast<int>(deformed_indices().size()); }
    /// h_i for 0-based i (phi_m for the last bump).
    double link(int i, double x) const;
    /// H_i = max(h_i, ..., h_m) for 0-based i.
    double envelope(int i, double x) const;
    double hat_phi(double x) const;
};

/// Recursive plan. Throws PlanError on recursion underflow below
/// options.min_eps, on more than options.max_bumps bumps, or when the
/// envelope bound sup H_1 < 2^-alpha c_p fails.
MultibumpPlan plan_multibump(const std::vector<int>& sigma_bar, const Params& params,
                             const CalibrationConstants& calib, const PlanOptions& options = {});

/// Key-value text with arrays: sigma_bar, kappa, xi, epsilons, gammas,
/// calibration constants and the verification report.
std::string plan_to_text(const MultibumpPlan& plan);

struct DeformationPoint {
    std::vector<double> mu;  ///< one coordinate per deformed index, each in [0,1]
};

/// Phi_mu = hat_phi + sum_{xi=0} (mu - 1) phi_i + sum_{xi=2} mu (h_i - phi_i - phi_{i+1}).
Profile deformation_profile(const MultibumpPlan& plan, const DeformationPoint& point);
/// Samples Phi_mu and verifies sup < c_p, support in (0, 1/2) and
/// z(Phi_mu - U*) <= 2m; throws ConstructionError otherwise.
Field deform(const MultibumpPlan& plan, const DeformationPoint& point, const GridPtr& grid);

/// Initial data from a constructor string:
///   bump:eps=E[,scale=S][,K=K]                 S psi_eps
///   multibump:sigma=1/1[,mu=M/M][,eps_top=E]   Phi_mu of the calibrated plan
///   scaled_steady:a=A[,scale=S]                S U_a(min(x, 1 - x)), symmetric
///   csv:path                                   `x,u` table, linear interpolation
/// Throws PreconditionError naming the offending field.
Field make_initial_data(const std::string& spec, const Params& params, const GridPtr& grid,
                        const CalibrationConstants& calib = {}, const PlanOptions& plan_options = {});

/// "1/1" or "1,1" -> {1, 1}; throws PreconditionError on anything else.
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_real_list(const std::string& text);

}  // namespace vhj
