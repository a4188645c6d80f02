#pragma once

// Appendix-lemma bounds as executable sweeps. Each sweep produces one scaled
// series indexed by s (the max over the remaining variables), then fits the
// constant on the least asymptotic samples and requires every later sample
// to stay within a factor 2 of it.

#include "blowup/numerics.hpp"
#include "blowup/scaling.hpp"
#include "blowup/spectral.hpp"
#include "blowup/terms.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace blowup {

struct LemmaSweep {
    std::string name;
    std::vector<double> s_values;
    std::vector<double> scaled;
    BoundednessReport bound;
    [[nodiscard]] bool pass() const { return bound.bounded; }
};

namespace detail {

inline std::vector<double> geometric(double a, double b, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = a * std::pow(b / a, i / double(count - 1));
    return v;
}

inline std::vector<double> uniform(double a, double b, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / double(count - 1);
    return v;
}

inline LemmaSweep finish(std::string name, std::vector<double> s, std::vector<double> scaled, std::size_t fit) {
    LemmaSweep r;
    r.name = std::move(name);
    r.s_values = std::move(s);
    r.scaled = std::move(scaled);
    r.bound = check_bounded(r.scaled, fit);
    return r;
}

} // namespace detail

/// N(w̄,s) − p w̄²/2 against w̄ ln s/s² + w̄²/s + |w̄|³.
inline LemmaSweep lemma_N_remainder(const ProblemParams& params) {
    PointwiseRate rate(params);
    const std::vector<double> s_list{1e3, 3e3, 1e4, 3e4, 1e5};
    const std::vector<double> wbars{1e-3, 3e-3, 1e-2, 3e-2, 0.1};
    std::vector<double> scaled;
    for (double s : s_list) {
        const TermSlice t = TermContext<PointwiseRate>(rate).at(s);
        double worst = 0.0;
        for (double wb : wbars)
            for (double sg : {-1.0, 1.0}) {
                const double w = sg * wb;
                const double tmpl = wb * std::log(s) / (s * s) + wb * wb / s + wb * wb * wb;
                worst = std::max(worst, std::fabs(term_N(w, t) - params.p * w * w / 2.0) / tmpl);
            }
        scaled.push_back(worst);
    }
    return detail::finish("N remainder", s_list, scaled, 1);
}

/// s·sup_{|z|≤K1} |h|z|^{p−1}z·ratio(z) − |z|^{p−1}z/(p−1)| over s ∈ [20, 2000].
inline LemmaSweep lemma_log_ratio_bound(const ProblemParams& params, double k1) {
    PointwiseRate rate(params);
    TermContext<PointwiseRate> ctx(rate);
    const auto s_list = detail::geometric(20.0, 2000.0, 9);
    const auto zs = detail::uniform(-k1, k1, 401);
    std::vector<double> scaled;
    for (double s : s_list) {
        const TermSlice t = ctx.at(s);
        double worst = 0.0;
        for (double z : zs) {
            const double zp = signed_pow(z, params.p);
            worst = std::max(worst, std::fabs(t.h * zp * stable_log_ratio(z, t) - zp / (params.p - 1.0)));
        }
        scaled.push_back(s * worst);
    }
    return detail::finish("log-ratio bound K1=" + std::to_string(static_cast<int>(k1)), s_list, scaled, 2);
}

/// max_{|y|≤2K√s} |D(q,y,s)|·s³/(ln s (1+|y|)⁴) for q ∈ {0, ±A/s²} at s ∈ {50, 100, 200}.
inline LemmaSweep lemma_D_interior(const ProblemParams& params) {
    PointwiseRate rate(params);
    TermContext<PointwiseRate> ctx(rate);
    const std::vector<double> s_list{50.0, 100.0, 200.0};
    std::vector<double> scaled;
    for (double s : s_list) {
        const TermSlice t = ctx.at(s);
        const auto ys = detail::uniform(0.0, 2.0 * params.cutoff_scale * std::sqrt(s), 801);
        double worst = 0.0;
        for (double theta : {-1.0, 0.0, 1.0}) {
            const double q = theta * params.amplitude / (s * s);
            for (double y : ys) {
                const double d = term_D(q, y, t);
                worst = std::max(worst, std::fabs(d) * s * s * s / (std::log(s) * std::pow(1.0 + y, 4)));
            }
        }
        scaled.push_back(worst);
    }
    return detail::finish("D interior", s_list, scaled, 1);
}

/// s·sup_y |D(q,y,s)| over s ∈ [s0, s0+30] for in-set-like q, clipped to |q| ≤ 1/2.
inline LemmaSweep lemma_D_global(const ProblemParams& params) {
    PointwiseRate rate(params);
    TermContext<PointwiseRate> ctx(rate);
    const auto s_list = detail::uniform(params.s0, params.s0 + 30.0, 16);
    const double y_max = 2.0 * params.cutoff_scale * std::sqrt(params.s0 + 30.0) + 5.0;
    const auto ys = detail::uniform(0.0, y_max, 1201);
    std::vector<double> scaled;
    for (double s : s_list) {
        const TermSlice t = ctx.at(s);
        double worst = 0.0;
        for (double theta : {-1.0, 0.0, 1.0})
            for (double y : ys) {
                const double mag = std::min(params.amplitude / (s * s) * (1.0 + y * y * y), 0.5);
                worst = std::max(worst, std::fabs(term_D(theta * mag, y, t)));
            }
        scaled.push_back(s * worst);
    }
    return detail::finish("D global", s_list, scaled, 2);
}

/// Global s|V|/(1+|y|²) and inner s²|V + (|y|²−2n)/(4s)|/(1+|y|⁴), s ∈ [20, 200].
inline std::pair<LemmaSweep, LemmaSweep> lemma_V(const ProblemParams& params) {
    PointwiseRate rate(params);
    TermContext<PointwiseRate> ctx(rate);
    const auto s_list = detail::geometric(20.0, 200.0, 7);
    std::vector<double> global, inner;
    const double n = params.n;
    for (double s : s_list) {
        const TermSlice t = ctx.at(s);
        const double K = params.cutoff_scale;
        double g = 0.0, in = 0.0;
        for (double y : detail::uniform(0.0, 4.0 * K * std::sqrt(s), 1601)) {
            const double v = potential_V(y, t);
            g = std::max(g, s * std::fabs(v) / (1.0 + y * y));
            if (y <= K * std::sqrt(s))
                in = std::max(in, s * s * std::fabs(v + (y * y - 2.0 * n) / (4.0 * s)) / (1.0 + std::pow(y, 4)));
        }
        global.push_back(g);
        inner.push_back(in);
    }
    return {detail::finish("V global", s_list, global, 2), detail::finish("V expansion", s_list, inner, 2)};
}

/// Global s·sup|R| and inner s³|R − c_p/s²|/(1+|y|⁴), s ∈ [20, 200].
inline std::pair<LemmaSweep, LemmaSweep> lemma_R(const ProblemParams& params) {
    PointwiseRate rate(params);
    TermContext<PointwiseRate> ctx(rate);
    const auto s_list = detail::geometric(20.0, 200.0, 7);
    const double cp = remainder_constant(params.p, params.n);
    std::vector<double> global, inner;
    for (double s : s_list) {
        const TermSlice t = ctx.at(s);
        const double K = params.cutoff_scale;
        double g = 0.0, in = 0.0;
        for (double y : detail::uniform(0.0, 4.0 * K * std::sqrt(s), 1601)) {
            const double r = term_R(y, t);
            g = std::max(g, s * std::fabs(r));
            if (y <= K * std::sqrt(s)) in = std::max(in, s * s * s * std::fabs(r - cp / (s * s)) / (1.0 + std::pow(y, 4)));
        }
        global.push_back(g);
        inner.push_back(in);
    }
    return {detail::finish("R global", s_list, global, 2), detail::finish("R expansion", s_list, inner, 2)};
}

/// max |B(q)|/|q|^{min(p,2)} over q ∈ ±[1e-6, 1/2] and |y| ≤ 2K√s, s ∈ {20, 40, 80, 160}.
inline LemmaSweep lemma_B(const ProblemParams& params) {
    PointwiseRate rate(params);
    TermContext<PointwiseRate> ctx(rate);
    const std::vector<double> s_list{20.0, 40.0, 80.0, 160.0};
    const double pbar = std::min(params.p, 2.0);
    const auto qs = detail::geometric(1e-6, 0.5, 41);
    std::vector<double> scaled;
    for (double s : s_list) {
        const TermSlice t = ctx.at(s);
        double worst = 0.0;
        for (double y : detail::uniform(0.0, 2.0 * params.cutoff_scale * std::sqrt(s), 201))
            for (double qa : qs)
                for (double sg : {-1.0, 1.0}) {
                    const double q = sg * qa;
                    worst = std::max(worst, std::fabs(term_B(q, y, t)) / std::pow(qa, pbar));
                }
        scaled.push_back(worst);
    }
    return detail::finish("B bound", s_list, scaled, 1);
}

/// Every sweep above for one parameter set.
inline std::vector<LemmaSweep> all_lemma_sweeps(const ProblemParams& params) {
    std::vector<LemmaSweep> out;
    out.push_back(lemma_N_remainder(params));
    out.push_back(lemma_log_ratio_bound(params, 1.0));
    out.push_back(lemma_log_ratio_bound(params, 5.0));
    out.push_back(lemma_D_interior(params));
    out.push_back(lemma_D_global(params));
    auto [vg, vi] = lemma_V(params);
    out.push_back(vg);
    out.push_back(vi);
    auto [rg, ri] = lemma_R(params);
    out.push_back(rg);
    out.push_back(ri);
    out.push_back(lemma_B(params));
    return out;
}

} // namespace blowup
