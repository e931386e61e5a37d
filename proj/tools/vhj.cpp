// SPDX-License-Identifier: MIT
// Command-line driver: calibrate, solve, scenario, bisect, mc_check, audit.
#include <CLI11.hpp>

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vhj/analysis.hpp"
#include "vhj/control_oracle.hpp"
#include "vhj/critical_search.hpp"
#include "vhj/errors.hpp"
#include "vhj/initial_data.hpp"
#include "vhj/solver.hpp"

namespace fs = std::filesystem;
using namespace vhj;

namespace {

constexpr int kOk = 0;
constexpr int kMismatch = 2;
constexpr int kNumerical = 3;
constexpr int kUsage = 64;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every setting lives under a section.key name; the manifest lists all of them.
class Settings {
public:
    Settings() {
        const std::vector<std::pair<std::string, std::string>> defaults = {
            {"model.p", "3"},
            {"grid.nodes", "4097"},
            {"grid.h_min", "1e-6"},
            {"grid.ratio", "1.05"},
            {"solve.t_end", "0.05"},
            {"solve.time_tol", "1e-4"},
            {"solve.richardson_tol", "1e-3"},
            {"solve.dt_init", "1e-8"},
            {"solve.dt_max", "1e-2"},
            {"solve.k_schedule", "25/100/400/1600/6400"},
            {"solve.snapshots", ""},
            {"classify.eps_ref", "0.1"},
            {"classify.lbc_threshold", "auto"},
            {"classify.bounce_depth", "0.02"},
            {"calib.auto", "true"},
            {"calib.K", "1.5"},
            {"calib.c1", "0.035"},
            {"calib.c2", "0.58"},
            {"calib.eps_ref", "0.1"},
            {"calib.margin", "0.2"},
            {"plan.eps_top", "0.12"},
            {"plan.min_eps", "2e-3"},
            {"search.tol", "1e-3"},
            {"search.budget", "-1"},
            {"search.window_lo", "0"},
            {"search.window_hi", "auto"},
            {"scenario.sigma", "1"},
            {"scenario.horizon_factor", "10"},
            {"mc.paths", "10000"},
            {"mc.probes", "0.05:0.002/0.02:0.001/0.1:0.004"},
            {"mc.dt", "0"},
            {"mc.k_schedule", "100/400/1600/6400/25600"},
            {"mc.value_horizon", "0.005"},
            {"mc.witness_x0", "0.001"},
            {"run.init", "auto"},
            {"run.seed", "12345"},
            {"run.threads", "1"},
            {"run.out", "out"},
        };
        for (const auto& [k, v] : defaults) values_[k] = v;
    }

    void set(const std::string& key, const std::string& value) {
        if (!values_.count(key)) throw UsageError("unknown setting '" + key + "'");
        values_[key] = value;
    }

    std::string str(const std::string& key) const { return values_.at(key); }

    double real(const std::string& key) const {
        const std::string& v = values_.at(key);
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used == v.size()) return d;
        } catch (const std::exception&) {
        }
        throw UsageError("setting '" + key + "': '" + v + "' is not a number");
    }

    long integer(const std::string& key) const {
        const double d = real(key);
        if (d != std::floor(d)) throw UsageError("setting '" + key + "' must be an integer");
        return static_cast<long>(d);
    }

    bool flag(const std::string& key) const {
        const std::string& v = values_.at(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw UsageError("setting '" + key + "': expected true or false");
    }

    // flat `key = value` lines with [section] headers; '#' starts a comment
    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot read config file '" + path + "'");
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
            const auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw UsageError(path + ":" + std::to_string(lineno) + ": malformed section");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
            }
            const std::string key = trim(line.substr(0, eq));
            set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
        }
    }

    std::string manifest(const std::string& command) const {
        std::ostringstream os;
        os << "command = " << command << "\n";
        std::string section;
        for (const auto& [k, v] : values_) {
            const std::string s = k.substr(0, k.find('.'));
            if (s != section) {
                os << "[" << s << "]\n";
                section = s;
            }
            os << k.substr(k.find('.') + 1) << " = " << v << "\n";
        }
        return os.str();
    }

private:
    std::map<std::string, std::string> values_;
};

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << content;
        files_.push_back(name);
    }
    // run-summary index: every artifact of the run, itself included
    void finish() {
        files_.push_back("run_index.txt");
        std::ostringstream os;
        for (const auto& f : files_) os << f << "\n";
        std::ofstream out(dir_ / "run_index.txt", std::ios::binary);
        out << os.str();
    }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Context {
    Settings s;
    Params params;
    GridPtr grid;
    SolveConfig config;
    CalibrationConstants calib;
    PlanOptions plan;
    double lbc_threshold = 0.0;
    int threads = 1;
};

Context resolve(Settings& s) {
    Context c;
    c.params = Params::from_p(s.real("model.p"));
    GridSpec gs;
    gs.nodes = static_cast<std::size_t>(s.integer("grid.nodes"));
    gs.h_min = s.real("grid.h_min");
    gs.ratio = s.real("grid.ratio");
    c.grid = Grid::make(gs);
    c.config.t_end = s.real("solve.t_end");
    c.config.time_tol = s.real("solve.time_tol");
    c.config.richardson_tol = s.real("solve.richardson_tol");
    c.config.dt_init = s.real("solve.dt_init");
    c.config.dt_max = s.real("solve.dt_max");
    try {
        c.config.k_schedule = parse_real_list(s.str("solve.k_schedule"));
        if (!s.str("solve.snapshots").empty()) c.config.snapshot_times = parse_real_list(s.str("solve.snapshots"));
    } catch (const PreconditionError& e) {
        throw UsageError(std::string("solve settings: ") + e.what());
    }
    c.calib.K = s.real("calib.K");
    c.calib.c1 = s.real("calib.c1");
    c.calib.c2 = s.real("calib.c2");
    c.calib.eps_ref = s.real("calib.eps_ref");
    c.calib.margin = s.real("calib.margin");
    c.plan.eps_top = s.real("plan.eps_top");
    c.plan.min_eps = s.real("plan.min_eps");
    if (s.str("classify.lbc_threshold") == "auto") {
        std::ostringstream os;
        os.precision(12);
        os << default_lbc_threshold(c.params, s.real("classify.eps_ref"));
        s.set("classify.lbc_threshold", os.str());
    }
    c.lbc_threshold = s.real("classify.lbc_threshold");
    if (s.str("search.window_hi") == "auto") s.set("search.window_hi", s.str("solve.t_end"));
    c.threads = static_cast<int>(s.integer("run.threads"));
    if (c.threads < 1) throw UsageError("setting 'run.threads' must be at least 1");
    c.s = s;
    return c;
}

ClassifyOptions classify_options(const Context& c) {
    ClassifyOptions o;
    o.lbc_threshold = c.lbc_threshold;
    o.bounce_depth = c.s.real("classify.bounce_depth");
    return o;
}

std::string classification_table(const ClassificationReport& rep) {
    std::ostringstream os;
    os.precision(10);
    os << "pattern = " << rep.pattern() << "\n";
    os << "lbc_threshold = " << rep.lbc_threshold << "\n";
    os << "first_gbu = " << rep.first_gbu << "\n";
    os << "final_regularization = " << rep.final_regularization << "\n";
    for (const auto& t : rep.transitions) {
        os << "transition t = " << t.time << " type = " << to_string(t.type) << " N " << t.N_before << " -> "
           << t.N_after << "\n";
    }
    return os.str();
}

void write_trajectory(Output& out, const Trajectory& tr, const ClassificationReport& rep) {
    out.write("trajectory.csv", trajectory_csv(tr));
    out.write("transitions.csv", transitions_csv(rep));
    out.write("intervals.csv", intervals_csv(rep));
    out.write("classification.txt", classification_table(rep));
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
        out.write("snapshot_" + std::to_string(i) + ".csv", snapshot_csv(tr.snapshots[i]));
    }
}

std::string init_or(const Context& c, const std::string& fallback) {
    const std::string v = c.s.str("run.init");
    return v == "auto" ? fallback : v;
}

CalibrationConstants run_calibration(const Context& c) {
    CalibrationOptions co;
    co.eps_ref = c.calib.eps_ref;
    co.K = c.calib.K;
    co.margin = c.calib.margin;
    return calibrate(c.params, c.grid, c.config, co);
}

std::string calibration_text(const CalibrationConstants& k) {
    std::ostringstream os;
    os.precision(12);
    os << "[calib]\nK = " << k.K << "\nc1 = " << k.c1 << "\nc2 = " << k.c2 << "\neps_ref = " << k.eps_ref
       << "\nmargin = " << k.margin << "\nT_on = " << k.T_on << "\nT_off = " << k.T_off << "\n";
    return os.str();
}

int cmd_calibrate(Context& c, Output& out) {
    c.s.set("run.init", "bump:eps=" + c.s.str("calib.eps_ref") + ",K=" + c.s.str("calib.K"));
    const CalibrationConstants k = run_calibration(c);
    out.write("calibration.txt", calibration_text(k));
    std::cout << calibration_text(k);
    return kOk;
}

int cmd_solve(Context& c, Output& out) {
    c.s.set("run.init", init_or(c, "bump:eps=0.1,scale=2.0"));
    const Field phi = make_initial_data(c.s.str("run.init"), c.params, c.grid, c.calib, c.plan);
    const Trajectory tr = viscosity_solve(phi, c.params, c.config);
    out.write("manifest.txt", c.s.manifest("solve"));
    if (!tr.converged) {
        out.write("trajectory.csv", trajectory_csv(tr));
        std::cerr << "solve: trajectory did not converge in k; classification skipped\n";
        return kNumerical;
    }
    const ClassificationReport rep = classify(tr, c.params, classify_options(c));
    write_trajectory(out, tr, rep);
    std::cout << classification_table(rep);
    return kOk;
}

int cmd_audit(Context& c, Output& out) {
    c.s.set("run.init", init_or(c, "bump:eps=0.1,scale=2.0"));
    const Field phi = make_initial_data(c.s.str("run.init"), c.params, c.grid, c.calib, c.plan);
    const Trajectory tr = viscosity_solve(phi, c.params, c.config);
    ClassificationReport rep;
    if (tr.converged) rep = classify(tr, c.params, classify_options(c));
    const ZeroNumberAudit a = zero_number_audit(tr, rep, c.params);
    std::ostringstream os;
    os.precision(10);
    os << "initial_sup = " << tr.initial_sup << "\nN0 = " << a.N0 << "\nN_final = " << a.N_final << "\n";
    if (a.monotonicity_checked) {
        os << "monotone = " << a.monotone << "\ndrops_ok = " << a.drops_ok << "\ncount_bound_ok = " << a.count_bound_ok
           << "\n";
        for (double t : a.violation_times) os << "violation t = " << t << "\n";
    } else {
        os << "nonmonotone_witness = " << a.nonmonotone_witness << "\nt1 = " << a.witness_t1
           << "\nt2 = " << a.witness_t2 << "\n";
    }
    os << "verdict = " << (a.passed() ? "PASS" : "FAIL") << "\n";
    out.write("manifest.txt", c.s.manifest("audit"));
    out.write("trajectory.csv", trajectory_csv(tr));
    out.write("audit.txt", os.str());
    std::cout << os.str();
    return a.passed() ? kOk : kMismatch;
}

int cmd_scenario(Context& c, Output& out) {
    std::vector<int> sigma;
    try {
        sigma = parse_int_list(c.s.str("scenario.sigma"));
    } catch (const PreconditionError& e) {
        throw UsageError(std::string("setting 'scenario.sigma': ") + e.what());
    }
    c.s.set("run.init", "multibump:sigma=" + c.s.str("scenario.sigma"));
    long budget = c.s.integer("search.budget");
    if (c.s.flag("calib.auto")) {
        if (budget == 0) {
            out.write("manifest.txt", c.s.manifest("scenario"));
            out.write("verdict.txt", "verdict = FAIL\nnote = solve budget leaves no room for calibration\n");
            std::cout << "verdict = FAIL (budget)\n";
            return kMismatch;
        }
        c.calib = run_calibration(c);
        std::ostringstream a, b;
        a.precision(12);
        b.precision(12);
        a << c.calib.c1;
        b << c.calib.c2;
        c.s.set("calib.c1", a.str());
        c.s.set("calib.c2", b.str());
        if (budget > 0) --budget;
        out.write("calibration.txt", calibration_text(c.calib));
    }
    ScenarioOptions so;
    so.calib = c.calib;
    so.plan = c.plan;
    so.search.tol = c.s.real("search.tol");
    so.search.lbc_threshold = c.lbc_threshold;
    so.horizon_factor = c.s.real("scenario.horizon_factor");
    so.budget = static_cast<int>(budget);
    const ScenarioResult r = run_scenario(sigma, c.params, c.grid, c.config, so);
    out.write("manifest.txt", c.s.manifest("scenario"));
    out.write("plan.txt", plan_to_text(r.plan));
    out.write("scenario.txt", r.manifest);
    std::ostringstream v;
    if (!r.completed) {
        v << "verdict = FAIL\nnote = " << r.note << "\n";
        out.write("verdict.txt", v.str());
        std::cout << v.str();
        return kMismatch;
    }
    write_trajectory(out, r.trajectory, r.report);
    v << "verdict = " << (r.matches ? "PASS" : "FAIL") << "\npattern = " << r.report.pattern() << "\n";
    for (const auto& ck : r.checks) {
        v << "interval " << ck.index << " sigma = " << ck.sigma << " L = " << ck.L_intervals
          << " gbu_no_lbc = " << ck.gbu_no_lbc << " bouncing = " << ck.bouncing << (ck.ok ? " ok" : " divergent")
          << "\n";
    }
    out.write("verdict.txt", v.str());
    std::cout << v.str();
    return r.matches ? kOk : kMismatch;
}

int cmd_bisect(Context& c, Output& out) {
    c.s.set("run.init", init_or(c, "bump:eps=0.1"));
    const Field base = make_initial_data(c.s.str("run.init"), c.params, c.grid, c.calib, c.plan);
    const Family family = [&](double mu) {
        Field f = base;
        for (double& v : f.values) v *= mu;
        return f;
    };
    const ObjectiveWindow w{c.s.real("search.window_lo"), c.s.real("search.window_hi"), ObjectiveMode::max_positive};
    SearchOptions so;
    so.tol = c.s.real("search.tol");
    so.lbc_threshold = c.lbc_threshold;
    if (c.s.integer("search.budget") >= 0) so.max_solves = static_cast<int>(c.s.integer("search.budget"));
    out.write("manifest.txt", c.s.manifest("bisect"));
    const CriticalResult r = bisect_critical(family, w, c.params, c.config, so);

    // classify the runs around the bracket (independent solves)
    const std::vector<double> probes{r.lo - 5.0 * so.tol, r.midpoint(), r.hi + 5.0 * so.tol};
    std::vector<ClassificationReport> reps(probes.size());
    SolveConfig cfg = c.config;
    cfg.t_end = w.t_hi;
    std::exception_ptr error;
#pragma omp parallel for num_threads(c.threads)
    for (int i = 0; i < static_cast<int>(probes.size()); ++i) {
        try {
            const Trajectory tr = viscosity_solve(family(probes[static_cast<std::size_t>(i)]), c.params, cfg);
            reps[static_cast<std::size_t>(i)] = classify(tr, c.params, classify_options(c));
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    std::ostringstream os;
    os.precision(12);
    os << "mu_star = " << r.mu_star << "\nbracket = [" << r.lo << ", " << r.hi << "]\nevaluations = " << r.evaluations
       << "\n";
    for (const auto& e : r.audit) os << "eval mu = " << e.mu << " objective = " << e.objective << "\n";
    for (const auto& a : r.anomalies) os << "anomaly: " << a << "\n";
    out.write("bisect.txt", os.str());
    std::ostringstream csv;
    csv.precision(12);
    csv << "mu,pattern,L_intervals,gbu_no_lbc\n";
    for (std::size_t i = 0; i < probes.size(); ++i) {
        csv << probes[i] << ',' << reps[i].pattern() << ',' << reps[i].count_intervals(Behavior::L) << ','
            << reps[i].count_events(EventType::GBU_no_LBC) << '\n';
    }
    out.write("bisect_runs.csv", csv.str());
    std::cout << os.str() << csv.str();
    return kOk;
}

int cmd_mc(Context& c, Output& out) {
    c.s.set("run.init", init_or(c, "multibump:sigma=1/1"));
    const Field phi = make_initial_data(c.s.str("run.init"), c.params, c.grid, c.calib, c.plan);
    SolveConfig cfg = c.config;
    cfg.t_end = c.s.real("mc.value_horizon");
    // the value table samples horizons down to 1e-7, before the steep flanks
    // of the data smooth out, so the top level must exceed their slopes
    cfg.k_schedule = parse_real_list(c.s.str("mc.k_schedule"));
    cfg.snapshot_times.clear();
    for (int i = 1; i <= 400; ++i) cfg.snapshot_times.push_back(cfg.t_end * i / 400.0);
    for (int i = 0; i <= 40; ++i) cfg.snapshot_times.push_back(cfg.t_end * 2e-5 * std::pow(10.0, 3.0 * i / 40.0));
    std::sort(cfg.snapshot_times.begin(), cfg.snapshot_times.end());
    const Trajectory tr = viscosity_solve(phi, c.params, cfg);
    if (!tr.converged) {
        out.write("manifest.txt", c.s.manifest("mc_check"));
        std::cerr << "mc_check: value did not converge in k (interior level difference "
                  << tr.convergence.pair_diffs.back() << "); raise mc.k_schedule\n";
        return kNumerical;
    }
    const ValueTable table(phi, tr, c.params, std::sqrt(cfg.k_schedule.back()));
    const double budget = cfg.richardson_tol;

    std::vector<ControlRun> runs;
    std::ostringstream sum;
    sum.precision(10);
    bool ok = true;
    for (const auto& probe : [&] {
             std::vector<std::pair<double, double>> v;
             std::stringstream ss(c.s.str("mc.probes"));
             std::string item;
             while (std::getline(ss, item, '/')) {
                 const auto colon = item.find(':');
                 if (colon == std::string::npos) throw UsageError("setting 'mc.probes': expected x0:horizon items");
                 v.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
             }
             return v;
         }()) {
        ControlRun base;
        base.x0 = probe.first;
        base.horizon = probe.second;
        base.n_paths = static_cast<std::size_t>(c.s.integer("mc.paths"));
        base.seed = static_cast<std::uint64_t>(c.s.integer("run.seed"));
        base.dt_mc = c.s.real("mc.dt");
        ControlRun zero = base, feedback = base;
        zero.policy = Policy::zero_control;
        feedback.policy = Policy::pde_feedback;
        zero = simulate_gain(zero, phi, table, c.params, c.threads);
        feedback = simulate_gain(feedback, phi, table, c.params, c.threads);
        const double value = table.value(base.x0, base.horizon);
        const bool upper = feedback.mean_gain <= value + 3.0 * feedback.ci_halfwidth + budget;
        const bool lower = feedback.mean_gain >= zero.mean_gain - 3.0 * feedback.ci_halfwidth;
        ok = ok && upper && lower;
        sum << "probe x0 = " << base.x0 << " horizon = " << base.horizon << " value = " << value
            << " feedback = " << feedback.mean_gain << " +- " << feedback.ci_halfwidth << " zero = " << zero.mean_gain
            << " +- " << zero.ci_halfwidth << " upper_bound " << (upper ? "ok" : "FAIL") << " ordering "
            << (lower ? "ok" : "FAIL") << (feedback.overshoot_warning || zero.overshoot_warning ? " overshoot_warning" : "")
            << "\n";
        runs.push_back(zero);
        runs.push_back(feedback);
    }
    const HorizonWitness w = horizon_witness(table, c.s.real("mc.witness_x0"));
    ok = ok && w.found;
    sum << "witness x0 = " << c.s.real("mc.witness_x0") << " found = " << w.found << " h = (" << w.h1 << ", " << w.h2
        << ", " << w.h3 << ") value = (" << w.v1 << ", " << w.v2 << ", " << w.v3 << ")\n";
    sum << "verdict = " << (ok ? "PASS" : "FAIL") << "\n";
    out.write("manifest.txt", c.s.manifest("mc_check"));
    out.write("control.csv", control_csv(runs));
    out.write("mc_summary.txt", sum.str());
    std::cout << sum.str();
    return ok ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Viscous Hamilton-Jacobi lab: losses of boundary conditions, bouncing, control oracle"};
    app.require_subcommand(1);
    std::string config_path;
    std::map<std::string, std::string> overrides;
    const auto bind = [&](CLI::App* a, const std::string& flag, const std::string& key, const std::string& help) {
        a->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides[key] = v; },
                                            help);
    };
    const auto common = [&](CLI::App* a) {
        a->add_option("--config", config_path, "flat key = value file with [section] headers");
        bind(a, "--p", "model.p", "exponent p > 2");
        bind(a, "--nodes", "grid.nodes", "grid nodes");
        bind(a, "--t-end", "solve.t_end", "final time");
        bind(a, "--time-tol", "solve.time_tol", "local time error target");
        bind(a, "--init", "run.init", "initial data: bump:..., multibump:..., scaled_steady:..., csv:path");
        bind(a, "--threads", "run.threads", "worker threads");
        bind(a, "--seed", "run.seed", "random seed");
        bind(a, "--out", "run.out", "output directory");
        a->add_option_function<std::vector<std::string>>(
            "--set", [&overrides](const std::vector<std::string>& items) {
                for (const auto& it : items) {
                    const auto eq = it.find('=');
                    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected section.key=value");
                    overrides[it.substr(0, eq)] = it.substr(eq + 1);
                }
            },
            "override any setting, section.key=value");
    };
    auto* calibrate_cmd = app.add_subcommand("calibrate", "pilot single-bump run: LBC window constants");
    auto* solve_cmd = app.add_subcommand("solve", "solve one initial datum and classify");
    auto* scenario_cmd = app.add_subcommand("scenario", "multibump scenario for a behavior sequence");
    auto* bisect_cmd = app.add_subcommand("bisect", "amplitude separatrix of lambda * phi");
    auto* mc_cmd = app.add_subcommand("mc_check", "Monte Carlo control oracle against the PDE value");
    auto* audit_cmd = app.add_subcommand("audit", "zero-number audit of one solve");
    for (auto* a : {calibrate_cmd, solve_cmd, scenario_cmd, bisect_cmd, mc_cmd, audit_cmd}) common(a);
    bind(calibrate_cmd, "--eps-ref", "calib.eps_ref", "reference bump scale");
    bind(calibrate_cmd, "--K", "calib.K", "bump height coefficient");
    bind(scenario_cmd, "--sigma", "scenario.sigma", "behavior sequence, e.g. 1,1 or 2");
    bind(scenario_cmd, "--budget", "search.budget", "PDE solve budget (-1: unlimited)");
    bind(scenario_cmd, "--calibrate", "calib.auto", "run the pilot calibration first (true/false)");
    bind(bisect_cmd, "--tol", "search.tol", "bracket width");
    bind(bisect_cmd, "--budget", "search.budget", "PDE solve budget (-1: unlimited)");
    bind(mc_cmd, "--paths", "mc.paths", "paths per policy and probe");
    bind(mc_cmd, "--probes", "mc.probes", "x0:horizon items separated by /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    std::string command;
    for (auto* a : app.get_subcommands()) command = a->get_name();
    try {
        Settings s;
        if (!config_path.empty()) s.load(config_path);
        for (const auto& [k, v] : overrides) s.set(k, v);
        Context c = resolve(s);
        Output out(c.s.str("run.out"));
        int code = kOk;
        if (command == "calibrate") code = cmd_calibrate(c, out);
        else if (command == "solve") code = cmd_solve(c, out);
        else if (command == "scenario") code = cmd_scenario(c, out);
        else if (command == "bisect") code = cmd_bisect(c, out);
        else if (command == "mc_check") code = cmd_mc(c, out);
        else code = cmd_audit(c, out);
        if (command == "calibrate") out.write("manifest.txt", c.s.manifest(command));
        out.finish();
        return code;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const PreconditionError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
}
