#pragma once

// Finite-dimensional shooting: the two-parameter family of initial data,
// exit classification against S_A, and a sign-driven bracket search on d0
// (plus an inner d1 loop on line grids).

#include "blowup/integrator.hpp"
#include "blowup/params.hpp"
#include "blowup/spectral.hpp"

#include <cmath>
#include <future>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace blowup {

struct ShotConfig {
    double d0 = 0.0;
    double d1 = 0.0; ///< ignored (forced 0) on radial grids
    ProblemParams params;
};

/// q(y,s₀) = (A/s₀²)(d₀ + d₁y)χ(2y,s₀) on the given grid, returned as w = φ + q
/// (or as q itself for the q-route).
inline GridState initial_data(const ShotConfig& shot, std::shared_ptr<const Grid> grid, Field field = Field::W) {
    shot.params.validate();
    if (!(std::fabs(shot.d0) <= 2.0) || !(std::fabs(shot.d1) <= 2.0)) {
        throw InvalidParameter("initial_data: (d0, d1) must lie in [-2, 2]^2");
    }
    const ProblemParams& pr = shot.params;
    const double s0 = pr.s0;
    const double d1 = grid->kind == GridKind::Radial ? 0.0 : shot.d1;
    const double amp = pr.amplitude / (s0 * s0);
    const Profile profile{pr.p, pr.n};
    GridState st;
    st.s = s0;
    st.grid = grid;
    st.field = field;
    st.values.resize(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double y = grid->y[i];
        const double q = amp * (shot.d0 + d1 * y) * cutoff_chi(2.0 * y, s0, pr.cutoff_scale);
        st.values[i] = field == Field::W ? profile.phi(y, s0) + q : q;
    }
    return st;
}

/// Exits by q2, q₋ or q_e later than this after s₀ are flagged as anomalies.
inline constexpr double kTransientWindow = 2.0;

struct SaturationSample {
    double s = 0.0;
    std::array<double, 5> ratios{};
};

struct ExitReport {
    bool survived = false;
    double exit_s = 0.0; ///< exit time, or the last observed s when survived
    Component violator = Component::None;
    int sign = 0;
    int q0_sign = 0;
    bool anomaly = false;
    std::string anomaly_note;
    bool poisoned = false;
    std::string poison_report;
    std::vector<SaturationSample> saturation;
};

/// Sign of the unstable q0 drift at the end of a surviving trajectory. The
/// e^s mode dominates the second difference of q0 over the last unit, while
/// the slowly varying part of q0 barely contributes to it; q0 itself carries
/// an O(1/s²) offset that would bias the steering.
inline int drift_sign(const TrajectoryRecord& rec) {
    const auto& ob = rec.observations;
    const double last = ob.back().s;
    const auto at = [&](double s) -> const Observation* {
        for (auto it = ob.rbegin(); it != ob.rend(); ++it)
            if (std::fabs(it->s - s) < 1e-9) return &*it;
        return nullptr;
    };
    const Observation* mid = at(last - 0.5);
    const Observation* first = at(last - 1.0);
    if (!mid || !first) return ob.back().dec.q0 >= 0.0 ? 1 : -1;
    const double second = ob.back().dec.q0 - 2.0 * mid->dec.q0 + first->dec.q0;
    return second >= 0.0 ? 1 : -1;
}

inline ExitReport classify(const TrajectoryRecord& rec) {
    ExitReport r;
    r.survived = rec.survived();
    r.exit_s = rec.exit_or_end();
    r.poisoned = rec.poisoned;
    r.poison_report = rec.poison_report;
    if (rec.exit.exited) {
        r.violator = rec.exit.violator;
        r.sign = rec.exit.sign;
        r.q0_sign = rec.exit.q0_sign;
        const bool finite_mode = r.violator == Component::Q0 || r.violator == Component::Q1;
        if (!finite_mode && rec.exit.s > rec.s_start + kTransientWindow) {
            r.anomaly = true;
            std::ostringstream os;
            os << "exit through " << component_name(r.violator) << " at s=" << rec.exit.s
               << " (only q0/q1 exits are expected after the transient)";
            r.anomaly_note = os.str();
        }
    } else if (!rec.observations.empty()) {
        r.q0_sign = drift_sign(rec);
    }
    r.saturation.reserve(rec.observations.size());
    for (const auto& o : rec.observations) r.saturation.push_back({o.s, o.membership.ratios});
    return r;
}

struct ShotResult {
    ShotConfig shot;
    ExitReport report;
    TrajectoryRecord record;
};

/// Everything a probe needs; shared read-only between concurrent probes.
template <RateProvider R>
struct ShootingSetup {
    const R* rate = nullptr;
    std::shared_ptr<const Grid> grid;
    IntegratorSettings settings;
};

template <RateProvider R>
ShotResult shoot(const ShootingSetup<R>& setup, const ShotConfig& shot, double s_max) {
    Integrator<R> integ(*setup.rate, setup.grid, setup.settings);
    ShrinkingSetSpec spec{shot.params.amplitude};
    ShotResult res;
    res.shot = shot;
    res.record = integ.run(initial_data(shot, setup.grid, integ.field()), s_max, spec);
    res.report = classify(res.record);
    return res;
}

struct BracketEntry {
    int level = 0;
    double d0 = 0.0;
    double d1 = 0.0;
    double exit_s = 0.0;
    bool survived = false;
    int q0_sign = 0;
    Component violator = Component::None;
    double lo = 0.0;
    double hi = 0.0;
};

struct SearchOptions {
    double lo = -2.0;
    double hi = 2.0;
    double width_tol = 1e-12;
    int max_levels = 80;
    unsigned threads = 0;     ///< 0: hardware concurrency
    bool keep_records = true; ///< keep the best trajectory
    bool fallback_full_box = true;
    int inner_levels = 12; ///< d1 bisection depth per d0 probe (line grids)
    int polish_levels = 0; ///< extra levels after the first survivor, steered by the final q0 sign
};

struct SearchResult {
    ShotResult best;
    std::vector<BracketEntry> history;
    bool reached_target = false;
    std::size_t probes = 0;
    double final_lo = 0.0;
    double final_hi = 0.0;
};

class NoAdmissibleBracket : public std::runtime_error {
public:
    NoAdmissibleBracket(const std::string& what, ExitReport lo, ExitReport hi)
        : std::runtime_error(what), lo_report(std::move(lo)), hi_report(std::move(hi)) {}
    ExitReport lo_report;
    ExitReport hi_report;
};

namespace detail {

inline unsigned probe_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

inline bool better(const ShotResult& a, const ShotResult& b) {
    if (a.report.survived != b.report.survived) return a.report.survived;
    return a.report.exit_s > b.report.exit_s;
}

template <class F>
std::vector<ShotResult> run_probes(const std::vector<double>& points, unsigned threads, F&& probe) {
    std::vector<ShotResult> out(points.size());
    if (threads <= 1 || points.size() <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i) out[i] = probe(points[i]);
        return out;
    }
    std::vector<std::future<ShotResult>> futs;
    futs.reserve(points.size());
    for (double d : points) futs.push_back(std::async(std::launch::async, probe, d));
    for (std::size_t i = 0; i < futs.size(); ++i) out[i] = futs[i].get();
    return out;
}

/// Generic sign-driven multisection on one coordinate. `probe(x)` runs a shot,
/// `sign_of(shot)` extracts the steering sign.
template <class Probe, class Sign>
SearchResult bisect(double lo, double hi, const SearchOptions& opt, int coordinate, Probe&& probe,
                    Sign&& sign_of) {
    SearchResult out;
    const unsigned threads = probe_threads(opt.threads);
    auto note = [&](int level, double x, const ShotResult& r, double a, double b) {
        BracketEntry e;
        e.level = level;
        e.d0 = coordinate == 0 ? x : r.shot.d0;
        e.d1 = coordinate == 1 ? x : r.shot.d1;
        e.exit_s = r.report.exit_s;
        e.survived = r.report.survived;
        e.q0_sign = r.report.q0_sign;
        e.violator = r.report.violator;
        e.lo = a;
        e.hi = b;
        out.history.push_back(e);
        ++out.probes;
        const bool refined_survivor = r.report.survived && out.best.report.survived;
        if (out.probes == 1 || better(r, out.best) || refined_survivor) {
            out.best = r;
            if (!opt.keep_records) out.best.record.observations.clear();
        }
    };

    auto ends = run_probes({lo, hi}, threads, probe);
    note(0, lo, ends[0], lo, hi);
    note(0, hi, ends[1], lo, hi);
    if (ends[0].report.survived || ends[1].report.survived) {
        out.reached_target = true;
        out.final_lo = lo;
        out.final_hi = hi;
        return out;
    }
    int sign_lo = sign_of(ends[0]);
    const int sign_hi = sign_of(ends[1]);
    if (sign_lo == sign_hi || sign_lo == 0 || sign_hi == 0) {
        std::ostringstream os;
        os << "no admissible bracket on [" << lo << ", " << hi << "]: both ends exit with sign " << sign_lo
           << " (s=" << ends[0].report.exit_s << ", " << ends[1].report.exit_s << ")";
        throw NoAdmissibleBracket(os.str(), ends[0].report, ends[1].report);
    }

    double a = lo, b = hi;
    int polished = 0;
    for (int level = 1; level <= opt.max_levels; ++level) {
        if (b - a < opt.width_tol) break;
        const unsigned m = threads;
        std::vector<double> pts(m);
        for (unsigned j = 0; j < m; ++j) pts[j] = a + (b - a) * (j + 1.0) / (m + 1.0);
        auto res = run_probes(pts, threads, probe);
        for (unsigned j = 0; j < m; ++j) note(level, pts[j], res[j], a, b);
        bool done = false;
        for (const auto& r : res) done = done || r.report.survived;
        if (done) {
            out.reached_target = true;
            if (polished++ >= opt.polish_levels) break;
        }
        // Keep the first sub-interval whose ends exit with opposite signs.
        double na = a, nb = b;
        int prev = sign_lo;
        double prev_x = a;
        bool found = false;
        for (unsigned j = 0; j < m; ++j) {
            const int sg = sign_of(res[j]);
            if (sg != prev) {
                na = prev_x;
                nb = pts[j];
                found = true;
                break;
            }
            prev = sg;
            prev_x = pts[j];
        }
        if (!found) {
            na = prev_x;
            nb = b;
        }
        sign_lo = prev;
        a = na;
        b = nb;
    }
    out.final_lo = a;
    out.final_hi = b;
    out.reached_target = out.reached_target || out.best.report.survived;
    return out;
}

} // namespace detail

/// Radial search over d0: bisection driven by the sign of q0 at exit.
/// Stops once a probe survives to s_target or the bracket is narrower than width_tol.
template <RateProvider R>
SearchResult search(const ShootingSetup<R>& setup, const ProblemParams& params, double s_target,
                    SearchOptions opt = {}) {
    params.validate();
    if (setup.grid->kind != GridKind::Radial) {
        throw InvalidParameter("search: radial search needs a radial grid (use search_general on line grids)");
    }
    auto probe = [&](double d0) { return shoot(setup, ShotConfig{d0, 0.0, params}, std::max(s_target, params.s0)); };
    if (s_target <= params.s0) {
        SearchResult out;
        const double mid = 0.5 * (opt.lo + opt.hi);
        out.best = probe(mid);
        out.reached_target = true;
        out.probes = 1;
        out.final_lo = opt.lo;
        out.final_hi = opt.hi;
        out.history.push_back({0, mid, 0.0, params.s0, true, out.best.report.q0_sign, Component::None, opt.lo, opt.hi});
        return out;
    }
    auto sign = [](const ShotResult& r) { return r.report.q0_sign; };
    try {
        return detail::bisect(opt.lo, opt.hi, opt, 0, probe, sign);
    } catch (const NoAdmissibleBracket&) {
        if (!opt.fallback_full_box || (opt.lo <= -2.0 && opt.hi >= 2.0)) throw;
        return detail::bisect(-2.0, 2.0, opt, 0, probe, sign);
    }
}

/// Line-grid search over (d0, d1): outer bisection on d0 steered by the q0
/// exit sign, inner bisection on d1 (steered by the q1 exit sign) at every d0 probe.
template <RateProvider R>
SearchResult search_general(const ShootingSetup<R>& setup, const ProblemParams& params, double s_target,
                            SearchOptions opt = {}) {
    params.validate();
    if (setup.grid->kind != GridKind::Line || params.n != 1) {
        throw InvalidParameter("search_general: requires a line grid with n = 1");
    }
    const double s_end = std::max(s_target, params.s0);
    auto inner = [&](double d0) {
        SearchOptions in = opt;
        in.lo = -2.0;
        in.hi = 2.0;
        in.max_levels = opt.inner_levels;
        in.threads = 1;
        in.fallback_full_box = false;
        auto probe1 = [&](double d1) { return shoot(setup, ShotConfig{d0, d1, params}, s_end); };
        auto sign1 = [](const ShotResult& r) {
            const auto& ob = r.record.observations;
            if (ob.empty()) return 0;
            return ob.back().dec.q1 >= 0.0 ? 1 : -1;
        };
        try {
            return detail::bisect(-2.0, 2.0, in, 1, probe1, sign1).best;
        } catch (const NoAdmissibleBracket&) {
            return probe1(0.0);
        }
    };
    auto sign0 = [](const ShotResult& r) { return r.report.q0_sign; };
    return detail::bisect(opt.lo, opt.hi, opt, 0, inner, sign0);
}

/// Writes the bracket history as CSV rows.
inline std::string bracket_history_csv(const std::vector<BracketEntry>& h) {
    std::ostringstream os;
    os.precision(17);
    os << "level,d0,d1,exit_s,survived,q0_sign,violator,lo,hi\n";
    for (const auto& e : h) {
        os << e.level << ',' << e.d0 << ',' << e.d1 << ',' << e.exit_s << ',' << (e.survived ? 1 : 0) << ','
           << e.q0_sign << ',' << component_name(e.violator) << ',' << e.lo << ',' << e.hi << '\n';
    }
    return os.str();
}

} // namespace blowup
