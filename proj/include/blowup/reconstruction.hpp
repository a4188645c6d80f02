#pragma once

// Back to physical variables: u(x,t) = ψ(t) w(x/√(T−t), −ln(T−t)), with T
// normalized to 0 so that T − t = e^{−s}. Profile-convergence residuals,
// the final profile u*(x) and the inner expansion coefficients.

#include "blowup/integrator.hpp"
#include "blowup/numerics.hpp"
#include "blowup/scaling.hpp"
#include "blowup/terms.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace blowup {

// ---------------------------------------------------------------- maps

/// Blowup time. The tail-integral anchor makes s = −ln(T − t) exact with T = 0.
inline constexpr double kBlowupTime = 0.0;

inline double time_to_blowup(double s) { return std::exp(-s); }
inline double physical_time(double s) { return kBlowupTime - std::exp(-s); }
inline double similarity_time(double t) {
    if (!(t < kBlowupTime)) throw DomainError("similarity_time: t must precede the blowup time");
    return -std::log(kBlowupTime - t);
}
inline double similarity_coordinate(double x, double s) { return x / std::sqrt(time_to_blowup(s)); }
inline double physical_coordinate(double y, double s) { return y * std::sqrt(time_to_blowup(s)); }

struct PhysicalSnapshot {
    double t = 0.0;
    double s = 0.0;
    double log_psi = 0.0; ///< ln ψ(t)
    std::vector<double> x_nodes;
    std::vector<double> u_values; ///< may overflow to inf once ln ψ > ~709; use log_psi then
};

template <RateProvider R>
PhysicalSnapshot to_physical(const GridState& st, const std::vector<double>& w, const R& rate) {
    PhysicalSnapshot snap;
    snap.s = st.s;
    snap.t = physical_time(st.s);
    snap.log_psi = rate.ell(st.s);
    const double psi = std::exp(snap.log_psi);
    snap.x_nodes.resize(w.size());
    snap.u_values.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        snap.x_nodes[i] = physical_coordinate(st.grid->y[i], st.s);
        snap.u_values[i] = psi * w[i];
    }
    return snap;
}

// ---------------------------------------------------------------- profile convergence

struct ResidualSample {
    double s = 0.0;
    double residual = 0.0; ///< sup_y |w − f₀(y/√s)|
    double scaled = 0.0;   ///< √s · residual
};

/// √s·sup_y|w(y,s) − f₀(y/√s)| along a trajectory that stayed in S_A past s₀ + 5.
inline std::vector<ResidualSample> theorem_residual(const TrajectoryRecord& rec) {
    if (rec.poisoned || !(rec.exit_or_end() > rec.s_start + 5.0 - 1e-9)) {
        std::ostringstream os;
        os << "theorem_residual: trajectory must stay in the shrinking set past s0+5 (exit/end at "
           << rec.exit_or_end() << ", s0=" << rec.s_start << ")";
        throw std::invalid_argument(os.str());
    }
    std::vector<ResidualSample> out;
    for (const auto& o : rec.observations) {
        if (rec.exit.exited && o.s > rec.exit.s) break;
        out.push_back({o.s, o.sup_w_minus_f0, std::sqrt(o.s) * o.sup_w_minus_f0});
    }
    return out;
}

/// True when each sample is no larger than its predecessor (relative slack `tol`).
inline bool non_increasing(const std::vector<double>& v, double tol = 1e-12) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1] * (1.0 + tol) + 1e-300) return false;
    return true;
}

/// Trend test: least-squares slope of v against s is ≤ 0 and the last sample
/// does not exceed the first.
inline bool non_increasing_trend(const std::vector<double>& s, const std::vector<double>& v) {
    if (s.size() != v.size() || v.size() < 2) return false;
    return least_squares(s, v).slope <= 0.0 && v.back() <= v.front();
}

/// s·w̄₂(s) along the trajectory, expected to approach −1/(4p).
inline std::vector<std::pair<double, double>> inner_coefficient_series(const TrajectoryRecord& rec) {
    std::vector<std::pair<double, double>> out;
    for (const auto& o : rec.observations) out.emplace_back(o.s, o.s * o.wbar2);
    return out;
}

inline std::optional<double> observation_at(const TrajectoryRecord& rec, double s, double Observation::*field) {
    for (const auto& o : rec.observations)
        if (std::fabs(o.s - s) < 1e-9) return o.*field;
    return std::nullopt;
}

/// max √s·|w(0,s) − 1| / A, i.e. the constant C in |u(0,t)/ψ(t) − 1| ≤ CA/√s.
inline double center_tracking_constant(const TrajectoryRecord& rec) {
    double c = 0.0;
    for (const auto& o : rec.observations) {
        if (rec.exit.exited && o.s > rec.exit.s) break;
        c = std::max(c, std::sqrt(o.s) * std::fabs(o.w_center - 1.0) / rec.params.amplitude);
    }
    return c;
}

// ---------------------------------------------------------------- final profile

/// [(p−1)²|x|²/(8p|ln|x||)]^{−1/(p−1)}·(4|ln|x||/(p−1))^{−α/(p−1)}, in logs.
inline double log_final_profile_formula(double x, const ProblemParams& params) {
    const double p = params.p;
    const double ax = std::fabs(x);
    if (!(ax > 0.0 && ax < 1.0)) throw DomainError("final profile formula needs 0 < |x| < 1");
    const double L = -std::log(ax);
    return -(2.0 * std::log(p - 1.0) + 2.0 * std::log(ax) - std::log(8.0 * p * L)) / (p - 1.0) -
           params.alpha / (p - 1.0) * std::log(4.0 * L / (p - 1.0));
}

struct ProfileSample {
    double x = 0.0;
    double z = 0.0; ///< x/√((T−t)|ln(T−t)|) at the final time
    double u_star = 0.0;
    double formula_ratio = 0.0;
    bool used = false;
    std::string skip_reason;
};

struct DyadicCheck {
    double x = 0.0;
    double measured = 0.0;  ///< u*(x)/u*(2x)
    double predicted = 0.0; ///< same ratio of the closed form
    double rel_error = 0.0;
};

struct ProfileReport {
    double s_final = 0.0;
    double k0 = 0.0;
    std::vector<ProfileSample> samples;
    double fitted_slope = 0.0;
    double expected_slope = 0.0;
    std::vector<DyadicCheck> dyadic;
    double max_dyadic_error = 0.0;
    bool ratio_trend_toward_one = false;
};

/// Linear interpolation of nodal values at |y| (radial) or y (line).
inline std::optional<double> interpolate(const Grid& g, const std::vector<double>& v, double y) {
    const double yy = g.kind == GridKind::Radial ? std::fabs(y) : y;
    const double pos = (yy - g.y.front()) / g.dy;
    if (pos < 0.0 || pos > static_cast<double>(g.size() - 1)) return std::nullopt;
    const auto i = std::min(static_cast<std::size_t>(pos), g.size() - 2);
    const double f = pos - static_cast<double>(i);
    return v[i] * (1.0 - f) + v[i + 1] * f;
}

/// u*(x) ≈ u(x, t_last) = ψ₁(s)·w(x e^{s/2}, s) on the resolvable annulus: x must
/// map inside the grid, 0 < x < 1, and t₀(x) (where x/√((T−t)|ln(T−t)|) = k0)
/// must fall inside [s_first, s_final].
template <RateProvider R>
ProfileReport final_profile(const GridState& final_state, const std::vector<double>& w, const R& rate,
                            const std::vector<double>& x_samples, double s_first, double k0 = 6.0) {
    const ProblemParams& params = rate.params();
    const double s = final_state.s;
    const Grid& g = *final_state.grid;
    ProfileReport rep;
    rep.s_final = s;
    rep.k0 = k0;
    rep.expected_slope = -2.0 / (params.p - 1.0);
    const double ell = rate.ell(s);
    auto z_at = [](double x, double ss) { return x * std::exp(0.5 * ss) / std::sqrt(ss); };

    std::vector<double> lx, lu;
    for (double x : x_samples) {
        ProfileSample ps;
        ps.x = x;
        ps.z = z_at(std::fabs(x), s);
        const double y = similarity_coordinate(x, s);
        if (!(std::fabs(x) > 0.0)) {
            ps.skip_reason = "x = 0 is the blowup point";
        } else if (!(std::fabs(x) < 1.0)) {
            ps.skip_reason = "closed form needs |x| < 1";
        } else if (ps.z < k0) {
            ps.skip_reason = "t0(x) lies after the final computed time";
        } else if (z_at(std::fabs(x), s_first) > k0) {
            ps.skip_reason = "t0(x) lies before the initial time";
        } else if (auto wv = interpolate(g, w, y); !wv) {
            ps.skip_reason = "x maps outside the grid";
        } else if (!(*wv > 0.0)) {
            ps.skip_reason = "non-positive w";
        } else {
            ps.used = true;
            const double log_u = ell + std::log(*wv);
            ps.u_star = std::exp(log_u);
            ps.formula_ratio = std::exp(log_u - log_final_profile_formula(x, params));
            lx.push_back(std::log(std::fabs(x)));
            lu.push_back(log_u);
        }
        rep.samples.push_back(ps);
    }
    if (lx.size() >= 2) rep.fitted_slope = least_squares(lx, lu).slope;

    // Trend toward 1: |ratio − 1| shrinks as x → 0 (first used sample vs last used sample).
    const ProfileSample* inner = nullptr;
    const ProfileSample* outer = nullptr;
    for (const auto& ps : rep.samples) {
        if (!ps.used) continue;
        if (!inner || std::fabs(ps.x) < std::fabs(inner->x)) inner = &ps;
        if (!outer || std::fabs(ps.x) > std::fabs(outer->x)) outer = &ps;
    }
    if (inner && outer && inner != outer) {
        rep.ratio_trend_toward_one = std::fabs(inner->formula_ratio - 1.0) <= std::fabs(outer->formula_ratio - 1.0);
    }
    return rep;
}

/// u*(x)/u*(2x) against the closed form at `levels` consecutive dyadic radii from x_base.
template <RateProvider R>
std::vector<DyadicCheck> dyadic_checks(const GridState& final_state, const std::vector<double>& w, const R& rate,
                                       double x_base, int levels, double s_first, double k0 = 6.0) {
    std::vector<double> xs;
    for (int i = 0; i <= levels; ++i) xs.push_back(x_base * std::pow(2.0, i));
    const auto rep = final_profile(final_state, w, rate, xs, s_first, k0);
    std::vector<DyadicCheck> out;
    for (int i = 0; i < levels; ++i) {
        const auto& a = rep.samples[static_cast<std::size_t>(i)];
        const auto& b = rep.samples[static_cast<std::size_t>(i) + 1];
        DyadicCheck d;
        d.x = a.x;
        if (!a.used || !b.used) {
            d.rel_error = std::numeric_limits<double>::infinity();
        } else {
            d.measured = a.u_star / b.u_star;
            d.predicted =
                std::exp(log_final_profile_formula(a.x, rate.params()) - log_final_profile_formula(b.x, rate.params()));
            d.rel_error = std::fabs(d.measured / d.predicted - 1.0);
        }
        out.push_back(d);
    }
    return out;
}

} // namespace blowup
