// SPDX-License-Identifier: MIT
#include "vhj/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vhj/errors.hpp"
#include "vhj/solver.hpp"

namespace vhj {

double default_band(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return std::max(1e-6 * m, 1e-12);
}

SignChangeCount sign_changes(std::span<const double> x, std::span<const double> v, double band) {
    if (band < 0.0) throw PreconditionError("band must be nonnegative");
    if (x.size() != v.size()) throw PreconditionError("abscissae and samples differ in length");
    SignChangeCount out;
    out.band = band;
    int last_sign = 0;
    double last_x = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) <= band) continue;
        const int s = v[i] > 0.0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) {
            ++out.count;
            out.locations.push_back(0.5 * (last_x + x[i]));
        }
        last_sign = s;
        last_x = x[i];
    }
    return out;
}

SignChangeCount sign_changes(const Field& v, double band) { return sign_changes(v.grid->nodes(), v.values, band); }

SignChangeCount intersection_detail(const Field& field, const Params& params, double b, double x_cut) {
    if (!(b > 0.0 && b <= 1.0)) throw PreconditionError("intersection_number needs 0 < b <= 1");
    const Grid& g = *field.grid;
    std::vector<double> xs, vs;
    xs.reserve(g.size());
    vs.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g[i];
        if (x <= 0.0 || x < x_cut) continue;
        if (x > b || x > 1.0 - x_cut) break;
        xs.push_back(x);
        vs.push_back(field.values[i] - singular_steady(params, x));
    }
    return sign_changes(xs, vs, default_band(vs));
}

int intersection_number(const Field& field, const Params& params, double b, double x_cut) {
    return intersection_detail(field, params, b, x_cut).count;
}

std::string to_string(Behavior b) { return b == Behavior::C ? "C" : "L"; }

std::string to_string(EventType e) {
    switch (e) {
        case EventType::GBU_with_LBC: return "GBU_with_LBC";
        case EventType::GBU_no_LBC: return "GBU_no_LBC";
        case EventType::recovery: return "recovery";
        case EventType::bouncing: return "bouncing";
        case EventType::reloss: return "reloss";
    }
    return "unknown";
}

int ClassificationReport::count_intervals(Behavior b) const {
    return static_cast<int>(std::count_if(intervals.begin(), intervals.end(), [&](const Interval& i) {
        return i.label == b;
    }));
}

int ClassificationReport::count_events(EventType e) const {
    return static_cast<int>(std::count_if(transitions.begin(), transitions.end(), [&](const Transition& t) {
        return t.type == e;
    }));
}

std::string ClassificationReport::pattern() const {
    std::string s;
    for (const auto& i : intervals) s += to_string(i.label);
    return s;
}

double default_lbc_threshold(const Params& params, double eps_ref) {
    return 1e-4 * params.c_p * std::pow(eps_ref, params.alpha);
}

std::vector<double> lbc_thresholds(const Trajectory& traj, double lbc_threshold) {
    std::vector<double> thr(traj.times.size());
    for (std::size_t i = 0; i < thr.size(); ++i) {
        thr[i] = std::max(lbc_threshold, traj.singular_regime[i] ? 3.0 * traj.trace_residual[i] : 0.0);
    }
    return thr;
}

namespace {

// half-open sample runs [begin, end) with a common L/C label
struct Run {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool lbc = false;
};

double crossing_time(const Trajectory& tj, const std::vector<double>& thr, std::size_t i) {
    // trace - thr changes sign between samples i-1 and i
    const double a = tj.boundary_trace[i - 1] - thr[i - 1];
    const double b = tj.boundary_trace[i] - thr[i];
    const double w = (a == b) ? 0.5 : std::clamp(a / (a - b), 0.0, 1.0);
    return tj.times[i - 1] + w * (tj.times[i] - tj.times[i - 1]);
}

int N_at(const Trajectory& tj, double t) { return tj.N_series[tj.index_at(t)]; }

}  // namespace

ClassificationReport classify(const Trajectory& traj, const Params& params, const ClassifyOptions& opts) {
    if (!traj.converged) throw PreconditionError("classification refused: trajectory did not converge in k");
    ClassificationReport rep;
    rep.lbc_threshold = opts.lbc_threshold;
    const std::size_t n = traj.times.size();
    if (n == 0) return rep;

    const std::vector<double> thr = lbc_thresholds(traj, opts.lbc_threshold);
    std::vector<bool> lbc(n);
    for (std::size_t i = 0; i < n; ++i) lbc[i] = traj.boundary_trace[i] > thr[i];

    std::vector<Run> runs;
    for (std::size_t i = 0; i < n; ++i) {
        if (runs.empty() || runs.back().lbc != lbc[i]) runs.push_back({i, i + 1, lbc[i]});
        else runs.back().end = i + 1;
    }

    struct Event {
        double time;
        EventType type;
    };
    std::vector<Event> events;
    bool any_loss = false;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const Run& run = runs[r];
        if (run.lbc) {
            if (run.begin > 0) {
                const double t = crossing_time(traj, thr, run.begin);
                // a C gap between two L runs shorter than bounce_gap is one bounce
                const bool after_gap = r >= 2 && runs[r - 2].lbc;
                bool bounce = false;
                if (after_gap) {
                    const Run& gap = runs[r - 1];
                    const double t0 = crossing_time(traj, thr, gap.begin);
                    bounce = (t - t0) < opts.bounce_gap;
                    if (bounce) {
                        // replace the recovery that opened the gap by one bouncing instant
                        std::size_t imin = gap.begin;
                        for (std::size_t i = gap.begin; i < gap.end; ++i) {
                            if (traj.boundary_trace[i] < traj.boundary_trace[imin]) imin = i;
                        }
                        while (events.back().type != EventType::recovery) events.pop_back();
                        events.back() = {traj.times[imin], EventType::bouncing};
                    }
                }
                if (!bounce) events.push_back({t, any_loss ? EventType::reloss : EventType::GBU_with_LBC});
            }
            any_loss = true;
            // deep dips: the trace falls far below the peaks on both sides
            std::vector<double> left(run.end - run.begin), right(run.end - run.begin);
            double m = 0.0;
            for (std::size_t i = run.begin; i < run.end; ++i) left[i - run.begin] = m = std::max(m, traj.boundary_trace[i]);
            m = 0.0;
            for (std::size_t i = run.end; i-- > run.begin;) right[i - run.begin] = m = std::max(m, traj.boundary_trace[i]);
            for (std::size_t i = run.begin; i < run.end;) {
                const auto deep = [&](std::size_t j) {
                    return traj.boundary_trace[j] <
                           opts.bounce_depth * std::min(left[j - run.begin], right[j - run.begin]);
                };
                if (!deep(i)) {
                    ++i;
                    continue;
                }
                std::size_t imin = i;
                while (i < run.end && deep(i)) {
                    if (traj.boundary_trace[i] < traj.boundary_trace[imin]) imin = i;
                    ++i;
                }
                events.push_back({traj.times[imin], EventType::bouncing});
            }
        } else {
            if (run.begin > 0) events.push_back({crossing_time(traj, thr, run.begin), EventType::recovery});
            // singular instants inside the C run that do not border an L run
            std::size_t lo = run.begin, hi = run.end;
            if (run.begin > 0) {
                while (lo < hi && traj.singular_regime[lo]) ++lo;
            }
            if (run.end < n) {
                while (hi > lo && traj.singular_regime[hi - 1]) --hi;
            }
            for (std::size_t i = lo; i < hi;) {
                if (!traj.singular_regime[i]) {
                    ++i;
                    continue;
                }
                std::size_t j = i;
                std::size_t peak = i;
                while (j < hi && traj.singular_regime[j]) {
                    if (traj.near_grad_series[j] > traj.near_grad_series[peak]) peak = j;
                    ++j;
                }
                events.push_back({traj.times[peak], EventType::GBU_no_LBC});
                i = j;
            }
        }
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });

    // intervals between consecutive events; label from the samples inside
    std::vector<double> cuts{traj.times.front()};
    for (const auto& e : events) cuts.push_back(e.time);
    cuts.push_back(traj.times.back());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c], b = cuts[c + 1];
        std::size_t inside = 0, lost = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (traj.times[i] > a && traj.times[i] < b) {
                ++inside;
                if (lbc[i]) ++lost;
            }
        }
        Behavior label = (2 * lost > inside) ? Behavior::L : Behavior::C;
        if (inside == 0) label = lbc[std::min(traj.index_at(a), n - 1)] ? Behavior::L : Behavior::C;
        rep.intervals.push_back({a, b, label});
    }
    for (std::size_t e = 0; e < events.size(); ++e) {
        const Interval& before = rep.intervals[e];
        const Interval& after = rep.intervals[e + 1];
        Transition tr;
        tr.time = events[e].time;
        tr.type = events[e].type;
        tr.N_before = N_at(traj, 0.5 * (before.t_lo + before.t_hi));
        tr.N_after = N_at(traj, 0.5 * (after.t_lo + after.t_hi));
        rep.transitions.push_back(tr);
        rep.N_drops.push_back(tr.N_before - tr.N_after);
    }

    for (const auto& e : events) {
        if (e.type == EventType::GBU_with_LBC || e.type == EventType::GBU_no_LBC) {
            rep.first_gbu = e.time;
            break;
        }
    }
    for (const auto& e : events) {
        if (e.type == EventType::recovery || e.type == EventType::GBU_no_LBC) rep.final_regularization = e.time;
    }
    (void)params;
    return rep;
}

std::string transitions_csv(const ClassificationReport& report) {
    std::ostringstream os;
    os.precision(12);
    os << "t,type,N_before,N_after\n";
    for (const auto& t : report.transitions) {
        os << t.time << ',' << to_string(t.type) << ',' << t.N_before << ',' << t.N_after << '\n';
    }
    return os.str();
}

std::string intervals_csv(const ClassificationReport& report) {
    std::ostringstream os;
    os.precision(12);
    os << "t_lo,t_hi,label\n";
    for (const auto& i : report.intervals) os << i.t_lo << ',' << i.t_hi << ',' << to_string(i.label) << '\n';
    return os.str();
}

ZeroNumberAudit zero_number_audit(const Trajectory& traj, const ClassificationReport& report, const Params& params,
                                  int window) {
    ZeroNumberAudit audit;
    if (traj.times.empty()) return audit;
    audit.N0 = traj.N_series.front();
    audit.N_final = traj.N_series.back();
    if (traj.initial_sup > params.c_p) {
        int first_zero = -1;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            if (first_zero < 0 && traj.N_series[i] == 0) {
                first_zero = static_cast<int>(i);
            } else if (first_zero >= 0 && traj.N_series[i] == 1) {
                audit.nonmonotone_witness = true;
                audit.witness_t1 = traj.times[static_cast<std::size_t>(first_zero)];
                audit.witness_t2 = traj.times[i];
                break;
            }
        }
        return audit;
    }
    audit.monotonicity_checked = true;
    std::vector<std::size_t> marks;
    for (const auto& t : report.transitions) marks.push_back(traj.index_at(t.time));
    const auto near_mark = [&](std::size_t i) {
        for (std::size_t m : marks) {
            const std::size_t d = i > m ? i - m : m - i;
            if (d <= static_cast<std::size_t>(window)) return true;
        }
        return false;
    };
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        if (traj.N_series[i] > traj.N_series[i - 1] && !near_mark(i)) {
            audit.monotone = false;
            audit.violation_times.push_back(traj.times[i]);
        }
    }
    for (int d : report.N_drops) audit.drops_ok = audit.drops_ok && d >= 1;
    audit.count_bound_ok = static_cast<int>(report.transitions.size()) <= audit.N0;
    return audit;
}

}  // namespace vhj
