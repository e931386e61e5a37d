// SPDX-License-Identifier: MIT
#include "vhj/initial_data.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "vhj/analysis.hpp"
#include "vhj/errors.hpp"

namespace vhj {

namespace {

constexpr int kScan = 2001;

// antiderivative pieces of f'' = (y - a1)(a2 - y), up to the scale c
double unit_P(double y, double a1, double a2) {
    return -y * y * y * y / 12.0 + (a1 + a2) * y * y * y / 6.0 - a1 * a2 * y * y / 2.0;
}
double unit_dP(double y, double a1, double a2) { return -y * y * y / 3.0 + (a1 + a2) * y * y / 2.0 - a1 * a2 * y; }
double unit_ddP(double y, double a1, double a2) { return (y - a1) * (a2 - y); }

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return v;
}

int zeros_on(const std::vector<double>& xs, const std::function<double(double)>& f) {
    std::vector<double> v(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) v[i] = f(xs[i]);
    return sign_changes(xs, v, 0.0).count;
}

template <class F>
double integrate(F f, double a, double b) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-14);
}

template <class F>
double root(F f, double a, double b) {
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, b, tol, it);
    return 0.5 * (r.first + r.second);
}

// cubic smoothstep with theta(0) = 1, theta(1) = 0, theta'(0) = theta'(1) = 0
double theta(double y) { return 1.0 - y * y * (3.0 - 2.0 * y); }
double theta_prime(double y) { return -6.0 * y * (1.0 - y); }

}  // namespace

// ---------------------------------------------------------------- Bump

Bump::Bump(const BumpSpec& spec, const Params& params, double c) : spec_(spec), params_(params), c_(c) {}

Bump Bump::make(const BumpSpec& spec, const Params& params) {
    if (!(spec.epsilon > 0.0 && spec.epsilon < 0.5)) throw PreconditionError("bump: epsilon must lie in (0, 1/2)");
    if (!(spec.a1 > 0.0 && spec.a1 < spec.a2 && spec.a2 < 0.25)) {
        throw PreconditionError("bump: need 0 < a1 < a2 < 1/4");
    }
    if (std::abs(spec.a2 - 3.0 * spec.a1) > 1e-12 * spec.a2) {
        throw PreconditionError("bump: the polynomial profile needs a2 = 3 a1");
    }
    if (!(spec.K > singular_steady(params, 0.5))) throw PreconditionError("bump: need K > U*(1/2)");
    const double f_a1 = unit_P(spec.a1, spec.a1, spec.a2) - unit_P(spec.a2, spec.a1, spec.a2);
    const double target = 1.05 * spec.K * std::pow(1.0 + spec.a1, params.alpha);
    const double c = target / f_a1;
    BumpSpec resolved = spec;
    const double f0 = -c * unit_P(spec.a2, spec.a1, spec.a2);
    const double link_bound = spec.K / (1.0 - std::pow(2.0, -params.alpha));
    if (resolved.K1 == 0.0) resolved.K1 = std::max(f0, link_bound);
    Bump b(resolved, params, c);
    b.verify();
    return b;
}

Bump Bump::rescaled(double epsilon) const {
    BumpSpec s = spec_;
    s.epsilon = epsilon;
    return make(s, params_);
}

double Bump::unit(double y) const {
    y = std::abs(y);
    if (y >= spec_.a2) return 0.0;
    return c_ * (unit_P(y, spec_.a1, spec_.a2) - unit_P(spec_.a2, spec_.a1, spec_.a2));
}

double Bump::operator()(double x) const {
    const double e = spec_.epsilon;
    return std::pow(e, params_.alpha) * unit(x / e - 1.0);
}

double Bump::derivative(double x) const {
    const double e = spec_.epsilon;
    const double z = x / e - 1.0;
    const double y = std::abs(z);
    if (y >= spec_.a2) return 0.0;
    const double s = z < 0.0 ? -1.0 : 1.0;
    return std::pow(e, params_.alpha - 1.0) * s * c_ * unit_dP(y, spec_.a1, spec_.a2);
}

double Bump::second_derivative(double x) const {
    const double e = spec_.epsilon;
    const double y = std::abs(x / e - 1.0);
    if (y >= spec_.a2) return 0.0;
    return std::pow(e, params_.alpha - 2.0) * c_ * unit_ddP(y, spec_.a1, spec_.a2);
}

double Bump::peak() const { return (*this)(spec_.epsilon); }

void Bump::verify() const {
    const double e = spec_.epsilon;
    const double a1 = spec_.a1;
    const double lo = support_lo(), hi = support_hi();
    const auto fail = [](const std::string& what) { throw ConstructionError("bump property violated: " + what); };

    if ((*this)(lo) != 0.0 || (*this)(hi) != 0.0) fail("support edges");
    for (double x : linspace(lo, hi, kScan)) {
        if (x > lo && x < hi && !((*this)(x) > 0.0)) fail("positive on the open support");
    }
    for (double x : linspace((1.0 - a1) * e, (1.0 + a1) * e, kScan)) {
        if (!((*this)(x) > spec_.K * std::pow(x, params_.alpha))) fail("psi > K x^alpha on the inner band");
    }
    if (peak() > spec_.K1 * std::pow(e, params_.alpha) * (1.0 + 1e-12)) fail("sup psi <= K1 eps^alpha");
    for (double x : linspace(lo, e, kScan)) {
        if (x > lo && x < e && !(derivative(x) > 0.0)) fail("psi' > 0 on the left flank");
    }
    for (double x : linspace(lo, hi, kScan)) {
        const bool inner = x > (1.0 - a1) * e && x < (1.0 + a1) * e;
        if (!inner && second_derivative(x) < -1e-12 * std::pow(e, params_.alpha - 2.0)) {
            fail("psi'' >= 0 outside the inner band");
        }
    }
    const auto diff = [&](double lambda) {
        return [this, lambda](double x) { return lambda * (*this)(x) - singular_steady(params_, x); };
    };
    if (zeros_on(linspace(lo, e * (1.0 - 1e-12), kScan), diff(1.0)) != 1 ||
        zeros_on(linspace(e * (1.0 + 1e-12), hi, kScan), diff(1.0)) != 1) {
        fail("psi - U* has exactly one zero on each flank");
    }
    for (int j = 1; j <= 20; ++j) {
        if (zeros_on(linspace(lo, hi, kScan), diff(0.05 * j)) > 2) fail("lambda psi - U* has at most 2 zeros");
    }
}

// ---------------------------------------------------------------- convexify

double Convexified::zeta(double x) const {
    if (x <= X || x >= Y) return 1.0;
    if (x < X + eps1) return theta((x - X) / eps1);
    if (x > Y - eps2) return theta((Y - x) / eps2);
    return 0.0;
}

double Convexified::zeta_prime(double x) const {
    if (x <= X || x >= Y) return 0.0;
    if (x < X + eps1) return theta_prime((x - X) / eps1) / eps1;
    if (x > Y - eps2) return -theta_prime((Y - x) / eps2) / eps2;
    return 0.0;
}

double Convexified::partial(double x) const {
    const auto f = [this](double s) { return zeta(s) * (gp_(s) - L); };
    if (x <= X + eps1) return integrate(f, X, x);
    if (x <= Y - eps2) return collar1_;
    return collar1_ + integrate(f, Y - eps2, x);
}

double Convexified::operator()(double x) const {
    if (x <= X || x >= Y) return g_(x);
    return gX_ + L * (x - X) + partial(x);
}

double Convexified::derivative(double x) const {
    if (x <= X || x >= Y) return gp_(x);
    return L + zeta(x) * (gp_(x) - L);
}

double Convexified::second_derivative(double x) const {
    if (x <= X || x >= Y) return gpp_(x);
    return zeta_prime(x) * (gp_(x) - L) + zeta(x) * gpp_(x);
}

Convexified convexify(Profile g, Profile gp, Profile gpp, double X, double Y) {
    if (!(X < Y)) throw PreconditionError("convexify: need X < Y");
    if (!(g(X) > 0.0 && g(Y) > 0.0)) throw PreconditionError("convexify: need g(X) > 0 and g(Y) > 0");
    for (double x : linspace(X, Y, kScan)) {
        if (!(gpp(x) > 0.0)) throw PreconditionError("convexify: need g'' > 0 on [X, Y]");
    }
    Convexified c;
    c.g_ = g;
    c.gp_ = gp;
    c.gpp_ = gpp;
    c.X = X;
    c.Y = Y;
    c.gX_ = g(X);
    c.L = (g(Y) - g(X)) / (Y - X);
    const double L = c.L;
    // g' is increasing, so it crosses L exactly once
    const double xL = root([&](double x) { return gp(x) - L; }, X, Y);
    c.eta = 0.999 * std::min(xL - X, Y - xL);

    const auto collar_left = [&](double e1) {
        return integrate([&](double s) { return theta((s - X) / e1) * (gp(s) - L); }, X, X + e1);
    };
    const auto collar_right = [&](double e2) {
        return integrate([&](double s) { return theta((Y - s) / e2) * (gp(s) - L); }, Y - e2, Y);
    };
    const double bound = std::min(g(X), g(Y));
    double e1 = 0.5 * c.eta;
    for (int attempt = 0; attempt < 60; ++attempt, e1 *= 0.5) {
        const double I1 = collar_left(e1);
        if (collar_right(c.eta) < -I1) continue;
        const double e2 = root([&](double e) { return I1 + collar_right(e); }, 1e-3 * e1 * 1e-6, c.eta);
        const double mass = -I1 + collar_right(e2);
        if (!(mass < bound)) continue;
        c.eps1 = e1;
        c.eps2 = e2;
        c.collar1_ = I1;
        c.root_residual = std::abs(I1 + collar_right(e2));
        c.collar_mass = mass;
        return c;
    }
    throw ConstructionError("convexify: could not bracket the collar equation");
}

// ---------------------------------------------------------------- Link

Link::Link(Bump lo, Bump hi, Params params, Convexified conv)
    : lo_(std::move(lo)), hi_(std::move(hi)), params_(params), conv_(std::move(conv)) {}

Link Link::make(const Bump& lo, const Bump& hi, const Params& params) {
    if (!(lo.epsilon() <= 0.5 * hi.epsilon())) throw PreconditionError("link: need eps_lo <= eps_hi / 2");
    const double K = hi.spec().K;
    const double a = params.alpha;
    const double a1 = hi.spec().a1;
    auto g = [lo, hi, K, a](double x) { return lo(x) + hi(x) - K * std::pow(x, a); };
    auto gp = [lo, hi, K, a](double x) { return lo.derivative(x) + hi.derivative(x) - K * a * std::pow(x, a - 1.0); };
    auto gpp = [lo, hi, K, a](double x) {
        return lo.second_derivative(x) + hi.second_derivative(x) - K * a * (a - 1.0) * std::pow(x, a - 2.0);
    };
    auto conv = convexify(g, gp, gpp, (1.0 + a1) * lo.epsilon(), (1.0 - a1) * hi.epsilon());
    Link l(lo, hi, params, std::move(conv));
    l.verify();
    return l;
}

double Link::operator()(double x) const {
    if (x <= conv_.X || x >= conv_.Y) return lo_(x) + hi_(x);
    return conv_(x) + hi_.spec().K * std::pow(x, params_.alpha);
}

double Link::derivative(double x) const {
    if (x <= conv_.X || x >= conv_.Y) return lo_.derivative(x) + hi_.derivative(x);
    return conv_.derivative(x) + hi_.spec().K * params_.alpha * std::pow(x, params_.alpha - 1.0);
}

double Link::second_derivative(double x) const {
    if (x <= conv_.X || x >= conv_.Y) return lo_.second_derivative(x) + hi_.second_derivative(x);
    const double a = params_.alpha;
    return conv_.second_derivative(x) + hi_.spec().K * a * (a - 1.0) * std::pow(x, a - 2.0);
}

void Link::verify() const {
    const auto fail = [](const std::string& what) { throw ConstructionError("link property violated: " + what); };
    const double K = hi_.spec().K;
    const double scale = hi_.peak();
    for (double x : linspace(conv_.X, conv_.Y, kScan)) {
        const double h = (*this)(x);
        if (h < lo_(x) + hi_(x) - 1e-12 * scale) fail("h >= psi_lo + psi_hi");
        if (!(h > K * std::pow(x, params_.alpha))) fail("h > K x^alpha between the bumps");
        if (conv_.second_derivative(x) < -1e-9 * std::abs(conv_.L) / (conv_.Y - conv_.X)) {
            fail("(h - K x^alpha)'' >= 0 between the bumps");
        }
    }
    const double K1 = hi_.spec().K1;
    double sup = 0.0;
    for (double x : linspace(lo_.support_lo(), hi_.support_hi(), 4 * kScan)) sup = std::max(sup, (*this)(x));
    if (sup > K1 * std::pow(hi_.epsilon(), params_.alpha) * (1.0 + 1e-12)) fail("sup h <= K1 eps^alpha");
    const auto xs = linspace(lo_.epsilon(), hi_.epsilon(), 4 * kScan);
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const int z = zeros_on(xs, [&](double x) {
            return lambda * (*this)(x) + (1.0 - lambda) * (lo_(x) + hi_(x)) - singular_steady(params_, x);
        });
        if (z > 2) fail("lambda h + (1 - lambda) psi_hat - U* has at most 2 zeros");
    }
}

// ---------------------------------------------------------------- plan

void behavior_indices(const std::vector<int>& sigma_bar, std::vector<int>& kappa, std::vector<int>& xi) {
    if (sigma_bar.empty()) throw PreconditionError("sigma_bar must not be empty");
    kappa.assign(1, 1);
    xi.clear();
    for (int s : sigma_bar) {
        if (s < 0) throw PreconditionError("sigma_bar entries must be nonnegative");
        kappa.push_back(kappa.back() + std::max(1, s));
        if (s <= 1) {
            xi.push_back(s);
        } else {
            for (int j = 0; j < s - 1; ++j) xi.push_back(2);
            xi.push_back(1);
        }
    }
}

std::vector<int> MultibumpPlan::deformed_indices() const {
    std::vector<int> out;
    for (int i = 0; i < m; ++i) {
        if (xi[static_cast<std::size_t>(i)] != 1) out.push_back(i);
    }
    return out;
}

double MultibumpPlan::link(int i, double x) const {
    if (i == m - 1) return bumps.back()(x);
    return links[static_cast<std::size_t>(i)](x);
}

double MultibumpPlan::envelope(int i, double x) const {
    double v = 0.0;
    for (int j = i; j < m; ++j) v = std::max(v, link(j, x));
    return v;
}

double MultibumpPlan::hat_phi(double x) const {
    double v = 0.0;
    for (const auto& b : bumps) v += b(x);
    return v;
}

namespace {

// sample abscissae that resolve every bump and link of the plan
std::vector<double> plan_samples(const MultibumpPlan& plan) {
    std::vector<double> xs;
    for (const auto& b : plan.bumps) {
        const auto v = linspace(b.support_lo(), b.support_hi(), kScan);
        xs.insert(xs.end(), v.begin(), v.end());
    }
    for (std::size_t i = 0; i + 1 < plan.bumps.size(); ++i) {
        const auto v = linspace(plan.bumps[i].support_hi(), plan.bumps[i + 1].support_lo(), kScan);
        xs.insert(xs.end(), v.begin(), v.end());
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

double c2_norm(const std::function<double(double)>& f, const std::function<double(double)>& fp,
               const std::function<double(double)>& fpp, const std::vector<double>& xs) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (double x : xs) {
        a = std::max(a, std::abs(f(x)));
        b = std::max(b, std::abs(fp(x)));
        c = std::max(c, std::abs(fpp(x)));
    }
    return a + b + c;
}

}  // namespace

MultibumpPlan plan_multibump(const std::vector<int>& sigma_bar, const Params& params,
                             const CalibrationConstants& calib, const PlanOptions& options) {
    MultibumpPlan plan;
    plan.sigma_bar = sigma_bar;
    plan.params = params;
    plan.calib = calib;
    plan.mode = options.mode;
    behavior_indices(sigma_bar, plan.kappa, plan.xi);
    plan.m = plan.kappa.back() - 1;
    const int m = plan.m;
    if (m > options.max_bumps) {
        throw PlanError("plan needs " + std::to_string(m) + " bumps, above the guard of " +
                        std::to_string(options.max_bumps));
    }
    if (!(calib.c2 > calib.c1 && calib.c1 > 0.0)) throw PlanError("calibration needs c2 > c1 > 0");
    const auto consts = control_constants(params);
    const double L = consts.L;
    BumpSpec spec;
    spec.a1 = calib.a1;
    spec.a2 = calib.a2;
    spec.K = calib.K;

    const auto mu = static_cast<std::size_t>(m);
    plan.epsilons.assign(mu + 1, 0.0);
    plan.gammas.assign(mu + 1, 0.0);
    const auto underflow = [&](int i, double e) {
        std::ostringstream os;
        os << "recursion underflow: eps_" << i << " = " << e << " is below the resolved scale " << options.min_eps
           << "; refine the grid or request fewer bumps";
        return PlanError(os.str());
    };

    if (options.mode == PlanMode::calibrated) {
        const double r = std::max(8.0, 2.0 * std::sqrt(calib.c2 / calib.c1));
        plan.epsilons[mu - 1] = options.eps_top;
        for (std::size_t i = mu - 1; i-- > 0;) plan.epsilons[i] = plan.epsilons[i + 1] / r;
        plan.epsilons[mu] = r * options.eps_top;
        if (plan.epsilons[0] < options.min_eps) throw underflow(1, plan.epsilons[0]);
        const double g = (2.0 / (3.0 * L)) * std::sqrt(calib.c1 * calib.c2);
        plan.gammas[0] = calib.c1 * plan.epsilons[0] * plan.epsilons[0] / (3.0 * L);
        for (std::size_t i = 1; i <= mu; ++i) plan.gammas[i] = g * plan.epsilons[i - 1] * plan.epsilons[i];
        for (std::size_t i = 0; i < mu; ++i) {
            spec.epsilon = plan.epsilons[i];
            plan.bumps.push_back(Bump::make(spec, params));
        }
    } else {
        plan.epsilons[mu] = options.eps_top;
        const double K1 = Bump::make([&] {
                              BumpSpec s = spec;
                              s.epsilon = 0.25;
                              return s;
                          }(),
                                     params)
                              .spec()
                              .K1;
        std::vector<Bump> built;  // bumps at eps_i .. eps_m, outermost last
        for (std::size_t i = mu + 1; i-- > 0;) {
            const double e = plan.epsilons[i];
            double M = 0.0;
            if (i < mu) {
                // C^2 norm of H_{i+1} = max(h_{i+1}, ..., h_m) bounded by the largest piece
                std::vector<double> xs;
                for (const auto& b : built) {
                    const auto v = linspace(b.support_lo(), b.support_hi(), 401);
                    xs.insert(xs.end(), v.begin(), v.end());
                }
                for (const auto& b : built) {
                    M = std::max(M, c2_norm([&](double x) { return b(x); }, [&](double x) { return b.derivative(x); },
                                            [&](double x) { return b.second_derivative(x); }, xs));
                }
            }
            const double gamma = std::min(0.25 * regularization_threshold(params, 0.5 * e, M),
                                          calib.c1 / (2.0 * L) * e * e);
            plan.gammas[i] = gamma;
            if (i == 0) break;
            const double next = std::min({e / 8.0, std::pow(gamma / K1, 1.0 / params.alpha),
                                          0.5 * std::sqrt(L * gamma / calib.c2)});
            if (next < options.min_eps) throw underflow(static_cast<int>(i), next);
            plan.epsilons[i - 1] = next;
            spec.epsilon = next;
            built.insert(built.begin(), Bump::make(spec, params));
        }
        plan.bumps = built;
    }

    for (int i = 0; i + 1 < m; ++i) {
        plan.links.push_back(Link::make(plan.bumps[static_cast<std::size_t>(i)],
                                        plan.bumps[static_cast<std::size_t>(i) + 1], params));
    }

    const double c0 = 0.5 * (calib.c1 + calib.c2);
    for (std::size_t i = 0; i <= mu; ++i) {
        TimeMarks tm;
        tm.hat_minus = L * plan.gammas[i];
        tm.hat = 1.5 * L * plan.gammas[i];
        tm.hat_plus = 2.0 * L * plan.gammas[i];
        if (i < mu) {
            const double e2 = plan.epsilons[i] * plan.epsilons[i];
            tm.s_minus = calib.c1 * e2;
            tm.s = c0 * e2;
            tm.s_plus = calib.c2 * e2;
        }
        plan.marks.push_back(tm);
    }

    // verification report
    auto& rep = plan.verification;
    const auto check = [&](bool ok, const std::string& what) {
        rep.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
        return ok;
    };
    bool ordered = true;
    for (std::size_t i = 0; i < mu; ++i) {
        const auto& a = plan.marks[i];
        const auto& b = plan.marks[i + 1];
        ordered = ordered && a.hat_minus < a.hat && a.hat < a.hat_plus && a.hat_plus < a.s_minus &&
                  a.s_minus < a.s && a.s < a.s_plus && a.s_plus < b.hat_minus;
    }
    check(ordered, "time marks ordered");
    bool disjoint = true;
    for (std::size_t i = 0; i + 1 < mu; ++i) {
        disjoint = disjoint && plan.bumps[i].support_hi() < plan.bumps[i + 1].support_lo();
        disjoint = disjoint && plan.epsilons[i] <= plan.epsilons[i + 1] / 8.0;
    }
    check(disjoint, "bump supports disjoint, eps_{i-1} <= eps_i / 8");
    const auto xs = plan_samples(plan);
    plan.envelope_sup.assign(mu, 0.0);
    for (int i = 0; i < m; ++i) {
        for (double x : xs) {
            plan.envelope_sup[static_cast<std::size_t>(i)] =
                std::max(plan.envelope_sup[static_cast<std::size_t>(i)], plan.envelope(i, x));
        }
    }
    bool h_eq = true;
    for (int i = 0; i < m; ++i) {
        const auto& b = plan.bumps[static_cast<std::size_t>(i)];
        for (double x : linspace(b.support_lo(), (1.0 + calib.a1) * b.epsilon(), 201)) {
            h_eq = h_eq && std::abs(plan.envelope(i, x) - b(x)) <= 1e-12 * b.peak();
        }
    }
    check(h_eq, "H_i = phi_i on [0, (1 + a1) eps_i]");
    const double bound = std::pow(2.0, -params.alpha) * params.c_p;
    const bool sup_ok = check(plan.envelope_sup.front() < bound, "sup H_1 < 2^-alpha c_p");
    const bool supp_ok = check(plan.bumps.back().support_hi() < 0.5, "supp H_1 in (0, 1/2)");
    if (!ordered) throw PlanError("plan time marks are not ordered; calibration constants are inconsistent");
    if (!sup_ok) {
        std::ostringstream os;
        os << "envelope bound violated: sup H_1 = " << plan.envelope_sup.front() << " >= 2^-alpha c_p = " << bound
           << "; lower eps_top or K";
        throw PlanError(os.str());
    }
    if (!supp_ok) throw PlanError("envelope support reaches x = 1/2; lower eps_top");
    return plan;
}

std::string plan_to_text(const MultibumpPlan& plan) {
    std::ostringstream os;
    os.precision(15);
    const auto arr = [&](const char* key, const auto& v) {
        os << key << " = [";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
        os << "]\n";
    };
    arr("sigma_bar", plan.sigma_bar);
    arr("kappa", plan.kappa);
    arr("xi", plan.xi);
    os << "m = " << plan.m << "\n";
    os << "mode = " << (plan.mode == PlanMode::calibrated ? "calibrated" : "analytic") << "\n";
    arr("epsilons", plan.epsilons);
    arr("gammas", plan.gammas);
    std::vector<double> sm, sp, hm, hp;
    for (const auto& t : plan.marks) {
        sm.push_back(t.s_minus);
        sp.push_back(t.s_plus);
        hm.push_back(t.hat_minus);
        hp.push_back(t.hat_plus);
    }
    arr("s_minus", sm);
    arr("s_plus", sp);
    arr("hat_s_minus", hm);
    arr("hat_s_plus", hp);
    arr("envelope_sup", plan.envelope_sup);
    const auto& c = plan.calib;
    os << "calib.c1 = " << c.c1 << "\ncalib.c2 = " << c.c2 << "\ncalib.K = " << c.K << "\ncalib.a1 = " << c.a1
       << "\ncalib.a2 = " << c.a2 << "\ncalib.eps_ref = " << c.eps_ref << "\ncalib.T_on = " << c.T_on
       << "\ncalib.T_off = " << c.T_off << "\ncalib.margin = " << c.margin << "\n";
    if (!plan.bumps.empty()) os << "K1 = " << plan.bumps.front().spec().K1 << "\n";
    arr("verification", [&] {
        std::vector<std::string> q;
        for (const auto& v : plan.verification) q.push_back("\"" + v + "\"");
        return q;
    }());
    return os.str();
}

Profile deformation_profile(const MultibumpPlan& plan, const DeformationPoint& point) {
    const auto idx = plan.deformed_indices();
    if (point.mu.size() != idx.size()) {
        throw PreconditionError("deformation point has " + std::to_string(point.mu.size()) +
                                " coordinates, plan needs " + std::to_string(idx.size()));
    }
    for (double v : point.mu) {
        if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError("deformation coordinates must lie in [0,1]");
    }
    auto shared = std::make_shared<const MultibumpPlan>(plan);
    const std::vector<double> mu = point.mu;
    return [shared, idx, mu](double x) {
        const auto& p = *shared;
        double v = p.hat_phi(x);
        for (std::size_t l = 0; l < idx.size(); ++l) {
            const auto i = static_cast<std::size_t>(idx[l]);
            if (p.xi[i] == 0) {
                v += (mu[l] - 1.0) * p.bumps[i](x);
            } else {
                v += mu[l] * (p.links[i](x) - p.bumps[i](x) - p.bumps[i + 1](x));
            }
        }
        return v;
    };
}

Field deform(const MultibumpPlan& plan, const DeformationPoint& point, const GridPtr& grid) {
    const auto f = deformation_profile(plan, point);
    Field out = Field::sample(grid, f);
    const auto fail = [](const std::string& what) { throw ConstructionError("deformation check failed: " + what); };
    double sup = 0.0;
    for (double x : plan_samples(plan)) sup = std::max(sup, f(x));
    if (!(sup < plan.params.c_p)) fail("sup Phi_mu < c_p");
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if ((*grid)[i] >= 0.5 && out.values[i] != 0.0) fail("support in (0, 1/2)");
        if (out.values[i] < 0.0) fail("Phi_mu >= 0");
    }
    out.values.front() = 0.0;
    if (intersection_number(out, plan.params) > 2 * plan.m) fail("z(Phi_mu - U*) <= 2m");
    return out;
}

// ---------------------------------------------------------------- constructors

namespace {

std::vector<std::string> split(const std::string& text, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (seps.find(c) != std::string::npos) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_real(const std::string& field, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw PreconditionError("field '" + field + "': '" + text + "' is not a number");
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& t : split(text, "/,")) {
        const double v = to_real("list", t);
        if (v != std::floor(v) || v < 0.0) throw PreconditionError("'" + t + "' is not a nonnegative integer");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& t : split(text, "/,")) out.push_back(to_real("list", t));
    return out;
}

Field make_initial_data(const std::string& spec, const Params& params, const GridPtr& grid,
                        const CalibrationConstants& calib, const PlanOptions& plan_options) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw PreconditionError("init: expected kind:arguments, got '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    if (kind == "csv") {
        std::ifstream in(rest);
        if (!in) throw PreconditionError("init csv: cannot open '" + rest + "'");
        std::vector<double> xs, us;
        std::string line;
        while (std::getline(in, line)) {
            const auto cells = split(line, ",");
            if (cells.size() < 2) continue;
            try {
                xs.push_back(std::stod(cells[0]));
                us.push_back(std::stod(cells[1]));
            } catch (const std::exception&) {
                if (!xs.empty()) throw PreconditionError("init csv: malformed row '" + line + "'");
            }
        }
        if (xs.size() < 2 || !std::is_sorted(xs.begin(), xs.end())) {
            throw PreconditionError("init csv: need at least two rows with increasing x");
        }
        return Field::sample(grid, [&](double x) {
            const auto it = std::upper_bound(xs.begin(), xs.end(), x);
            if (it == xs.begin()) return us.front();
            if (it == xs.end()) return us.back();
            const std::size_t j = static_cast<std::size_t>(it - xs.begin());
            const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
            return (1.0 - w) * us[j - 1] + w * us[j];
        });
    }

    std::map<std::string, std::string> kv;
    for (const auto& item : split(rest, ",")) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw PreconditionError("init " + kind + ": expected key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    const auto take = [&](const std::string& key, double fallback, bool required) {
        const auto it = kv.find(key);
        if (it == kv.end()) {
            if (required) throw PreconditionError("init " + kind + ": missing field '" + key + "'");
            return fallback;
        }
        const double v = to_real(key, it->second);
        kv.erase(it);
        return v;
    };
    const auto no_extra = [&] {
        if (!kv.empty()) throw PreconditionError("init " + kind + ": unknown field '" + kv.begin()->first + "'");
    };

    if (kind == "bump") {
        BumpSpec bs;
        bs.epsilon = take("eps", 0.0, true);
        bs.K = take("K", calib.K, false);
        bs.a1 = calib.a1;
        bs.a2 = calib.a2;
        const double scale = take("scale", 1.0, false);
        no_extra();
        const Bump b = Bump::make(bs, params);
        return Field::sample(grid, [&](double x) { return scale * b(x); });
    }
    if (kind == "scaled_steady") {
        const double a = take("a", 0.0, true);
        const double scale = take("scale", 1.0, false);
        no_extra();
        return Field::sample(grid, [&](double x) { return scale * regular_steady(params, a, std::min(x, 1.0 - x)); });
    }
    if (kind == "multibump") {
        const auto sit = kv.find("sigma");
        if (sit == kv.end()) throw PreconditionError("init multibump: missing field 'sigma'");
        const std::vector<int> sigma = parse_int_list(sit->second);
        kv.erase(sit);
        PlanOptions po = plan_options;
        po.eps_top = take("eps_top", po.eps_top, false);
        std::vector<double> mu;
        if (const auto mit = kv.find("mu"); mit != kv.end()) {
            mu = parse_real_list(mit->second);
            kv.erase(mit);
        }
        no_extra();
        const MultibumpPlan plan = plan_multibump(sigma, params, calib, po);
        if (mu.empty()) mu.assign(static_cast<std::size_t>(plan.q()), 1.0);
        if (static_cast<int>(mu.size()) != plan.q()) {
            throw PreconditionError("init multibump: field 'mu' needs " + std::to_string(plan.q()) + " values");
        }
        return deform(plan, DeformationPoint{mu}, grid);
    }
    throw PreconditionError("init: unknown kind '" + kind + "'");
}

}  // namespace vhj
