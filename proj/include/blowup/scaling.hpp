#pragma once

// Blowup rate ψ(t), its similarity-time form ψ₁(s) = ψ(T − e^{−s}) and the
// coefficient h(s) = e^{−s} ψ₁^{p−1}(s) ln^α(ψ₁²(s) + 2).
//
// Everything is carried in the log domain: ℓ(s) = ln ψ₁(s) grows like
// s/(p−1) and ψ₁ itself overflows long before the sweeps we care about.

#include "blowup/numerics.hpp"
#include "blowup/params.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace blowup {

/// ln(e^{2ℓ} + 2) = ln(ψ² + 2) for ψ = e^ℓ, overflow free.
inline double log_psi_sq_plus_two(double ell) { return log_sum_exp(2.0 * ell, std::numbers::ln2); }

/// h as a function of (s, ℓ): exp(−s + (p−1)ℓ) · ln^α(e^{2ℓ} + 2).
inline double rate_coefficient(double s, double ell, double p, double alpha) {
    const double lg = log_psi_sq_plus_two(ell);
    return std::exp(-s + (p - 1.0) * ell + (alpha == 0.0 ? 0.0 : alpha * std::log(lg)));
}

/// κ_α = (p−1)^{−1/(p−1)} ((p−1)/2)^{α/(p−1)}.
inline double kappa_alpha(const ProblemParams& params) {
    const double p = params.p;
    if (!(p > 1.0)) throw InvalidParameter("kappa_alpha: p must be > 1");
    return std::pow(p - 1.0, -1.0 / (p - 1.0)) * std::pow((p - 1.0) / 2.0, params.alpha / (p - 1.0));
}

namespace detail {

/// J(ℓ) = ∫_0^∞ e^{(1−p)t} ln^{−α}(e^{2(ℓ+t)} + 2) dt, so that
/// ∫_Ψ^∞ du / (u^p ln^α(u²+2)) = Ψ^{1−p} J(ln Ψ).
inline double tail_kernel_integral(double ell, double p, double alpha) {
    const double t_split = std::max(std::log(1.0e6), 20.0 / (p - 1.0));
    auto integrand = [=](double t) {
        const double lg = log_psi_sq_plus_two(ell + t);
        return std::exp((1.0 - p) * t - alpha * std::log(lg));
    };
    double err = 0.0;
    const double body =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t_split, 20, 1e-14, &err);

    // Integration by parts past the split point: with Λ = ln(e^{2x}+2) ≈ 2x,
    //   ∫_T^∞ e^{(1−p)t} Λ^{−α} dt = e^{(1−p)T} Λ_T^{−α}/(p−1) Σ_k (−1)^k (α)_k (2/((p−1)Λ_T))^k,
    // an asymptotic series summed to its smallest term.
    const double lam = log_psi_sq_plus_two(ell + t_split);
    const double lead = std::exp((1.0 - p) * t_split - alpha * std::log(lam)) / (p - 1.0);
    const double ratio = 2.0 / ((p - 1.0) * lam);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 60; ++k) {
        const double next = -term * (alpha + k) * ratio;
        if (next == 0.0 || std::fabs(next) >= std::fabs(term)) break;
        sum += next;
        term = next;
        if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
    }
    return body + lead * sum;
}

} // namespace detail

/// ln ∫_Ψ^∞ du/(u^p ln^α(u²+2)) for Ψ = e^ℓ.
inline double log_tail_time_integral(double ell, const ProblemParams& params) {
    if (!(params.p > 1.0)) throw InvalidParameter("tail_time_integral: p must be > 1 for convergence");
    if (!(ell > 0.0)) throw DomainError("tail_time_integral: Psi must be > 1");
    return (1.0 - params.p) * ell + std::log(detail::tail_kernel_integral(ell, params.p, params.alpha));
}

/// T − t = ∫_Ψ^∞ du/(u^p ln^α(u²+2)), the time left before the rate ODE reaches +∞ from Ψ.
inline double tail_time_integral(double Psi, const ProblemParams& params) {
    if (!(params.p > 1.0)) throw InvalidParameter("tail_time_integral: p must be > 1 for convergence");
    if (!(Psi > 1.0)) throw DomainError("tail_time_integral: Psi must be > 1");
    return std::exp(log_tail_time_integral(std::log(Psi), params));
}

/// ℓ(s) = ln ψ₁(s), solving ln tail_time_integral(e^ℓ) = −s.
inline double anchor_log_rate(double s, const ProblemParams& params) {
    if (!(params.p > 1.0)) throw InvalidParameter("anchor_log_rate: p must be > 1");
    const double p = params.p;
    auto f = [&](double ell) { return log_tail_time_integral(ell, params) + s; };

    // Leading-order guess from (p−1)ℓ + α ln(2ℓ) + ln(p−1) ≈ s.
    double guess = s / (p - 1.0);
    for (int i = 0; i < 4; ++i) {
        guess = (s - params.alpha * std::log(std::max(2.0 * guess, 1.0)) - std::log(p - 1.0)) / (p - 1.0);
    }
    const double floor = 1e-6;
    double lo = std::max(floor, guess - 1.0);
    double hi = std::max(lo + 1.0, guess + 1.0);
    double flo = f(lo);
    double fhi = f(hi);
    for (int expand = 0; expand < 200 && !(flo > 0.0 && fhi < 0.0); ++expand) {
        if (flo <= 0.0) {
            if (lo == floor) break;
            lo = std::max(floor, lo - (hi - lo));
            flo = f(lo);
        }
        if (fhi >= 0.0) {
            hi += (hi - lo);
            fhi = f(hi);
        }
    }
    if (!(flo > 0.0 && fhi < 0.0)) {
        std::ostringstream os;
        os << "anchor_log_rate: root-solve bracket failure at s=" << s << " (" << params.describe()
           << "), bracket [" << lo << ", " << hi << "] residuals [" << flo << ", " << fhi << "]";
        throw std::runtime_error(os.str());
    }
    std::uintmax_t iters = 200;
    boost::math::tools::eps_tolerance<double> tol(50);
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (a + b);
}

/// Lemma-level asymptotics of h(s), used as cross-checks of the tabulated map.
inline double h_expansion(double s, const ProblemParams& params) {
    const double a = params.alpha;
    return (1.0 - a / s - a * a * std::log(s) / (s * s)) / (params.p - 1.0);
}

/// ln ψ₁(s) ≈ s/(p−1) − α ln(s)/(p−1).
inline double ln_psi1_expansion(double s, const ProblemParams& params) {
    return (s - params.alpha * std::log(s)) / (params.p - 1.0);
}

/// ψ₁(s) e^{−s/(p−1)} s^{α/(p−1)} / κ_α, which tends to 1.
inline double rate_ratio_to_kappa(double s, double ell, const ProblemParams& params) {
    const double p = params.p;
    return std::exp(ell - s / (p - 1.0) + params.alpha * std::log(s) / (p - 1.0) - std::log(kappa_alpha(params)));
}

/// Anything that can answer ℓ(s) and h(s) for the term evaluators.
template <class T>
concept RateProvider = requires(const T& r, double s) {
    { r.params() } -> std::convertible_to<ProblemParams>;
    { r.ell(s) } -> std::convertible_to<double>;
    { r.h(s) } -> std::convertible_to<double>;
};

/// Tabulated ℓ(s) and h(s) on a uniform s-grid; immutable after construction.
class ScalingMap {
public:
    ScalingMap(ProblemParams params, std::vector<double> s, std::vector<double> ell, std::vector<double> h)
        : params_(params), s_(std::move(s)), ell_(std::move(ell)), h_(std::move(h)) {
        if (s_.size() < 2 || s_.size() != ell_.size() || s_.size() != h_.size()) {
            throw std::invalid_argument("ScalingMap: inconsistent table sizes");
        }
        step_ = (s_.back() - s_.front()) / static_cast<double>(s_.size() - 1);
    }

    [[nodiscard]] const ProblemParams& params() const { return params_; }
    [[nodiscard]] const std::vector<double>& s_grid() const { return s_; }
    [[nodiscard]] const std::vector<double>& ell_table() const { return ell_; }
    [[nodiscard]] const std::vector<double>& h_table() const { return h_; }
    [[nodiscard]] double s_min() const { return s_.front(); }
    [[nodiscard]] double s_max() const { return s_.back(); }
    [[nodiscard]] double step() const { return step_; }

    /// ℓ(s) by cubic Hermite interpolation (slopes are h = dℓ/ds).
    [[nodiscard]] double ell(double s) const {
        const std::size_t i = locate(s);
        return hermite_cubic(s_[i], s_[i + 1], ell_[i], ell_[i + 1], h_[i], h_[i + 1], s);
    }

    /// h(s), recomputed from the interpolated ℓ so that h stays consistent with ℓ.
    [[nodiscard]] double h(double s) const { return rate_coefficient(s, ell(s), params_.p, params_.alpha); }

    [[nodiscard]] double ratio_to_kappa(double s) const { return rate_ratio_to_kappa(s, ell(s), params_); }

private:
    [[nodiscard]] std::size_t locate(double s) const {
        const double slack = 1e-9 * step_;
        if (!(s >= s_.front() - slack && s <= s_.back() + slack)) {
            std::ostringstream os;
            os << "ScalingMap: s=" << s << " outside tabulated range [" << s_.front() << ", " << s_.back() << "]";
            throw DomainError(os.str());
        }
        const double x = (s - s_.front()) / step_;
        const auto last = s_.size() - 2;
        if (x <= 0.0) return 0;
        return std::min<std::size_t>(static_cast<std::size_t>(x), last);
    }

    ProblemParams params_;
    std::vector<double> s_;
    std::vector<double> ell_;
    std::vector<double> h_;
    double step_ = 0.0;
};

/// Root-solves ℓ at every query. Slow, but valid for arbitrarily large s.
class PointwiseRate {
public:
    explicit PointwiseRate(ProblemParams params) : params_(params) {}
    [[nodiscard]] const ProblemParams& params() const { return params_; }
    [[nodiscard]] double ell(double s) const { return anchor_log_rate(s, params_); }
    [[nodiscard]] double h(double s) const { return rate_coefficient(s, ell(s), params_.p, params_.alpha); }

private:
    ProblemParams params_;
};

static_assert(RateProvider<ScalingMap>);
static_assert(RateProvider<PointwiseRate>);

/// Builds the ℓ/h table on [s0, s_max].
///
/// ℓ is anchored at s_max by the tail-integral identity and integrated
/// backward with classical RK4 (dℓ/ds = h). Backward is the stable direction:
/// perturbations of ℓ evolve like e^{(p−1)h·Δs} ≈ e^{Δs}. The result is
/// checked against an independent anchor at s0.
inline ScalingMap build_scaling_map(const ProblemParams& params, double s_max, double step = 1e-3) {
    params.validate();
    const double s0 = params.s0;
    if (!(s_max > s0)) throw InvalidParameter("build_scaling_map: s_max must exceed s0");
    if (!(step > 0.0)) throw InvalidParameter("build_scaling_map: step must be positive");

    const auto count = static_cast<std::size_t>(std::ceil((s_max - s0) / step - 1e-9));
    const double ds = (s_max - s0) / static_cast<double>(count);
    const double p = params.p;
    const double a = params.alpha;
    auto rhs = [&](double s, double ell) { return rate_coefficient(s, ell, p, a); };

    std::vector<double> s(count + 1);
    std::vector<double> ell(count + 1);
    std::vector<double> h(count + 1);
    for (std::size_t i = 0; i <= count; ++i) s[i] = s0 + ds * static_cast<double>(i);
    s[count] = s_max;

    ell[count] = anchor_log_rate(s_max, params);
    for (std::size_t i = count; i > 0; --i) {
        const double si = s[i];
        const double y = ell[i];
        const double hstep = -(si - s[i - 1]);
        const double k1 = rhs(si, y);
        const double k2 = rhs(si + 0.5 * hstep, y + 0.5 * hstep * k1);
        const double k3 = rhs(si + 0.5 * hstep, y + 0.5 * hstep * k2);
        const double k4 = rhs(si + hstep, y + hstep * k3);
        ell[i - 1] = y + hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    for (std::size_t i = 0; i <= count; ++i) {
        h[i] = rhs(s[i], ell[i]);
        if (!(h[i] > 0.0) || !std::isfinite(h[i])) {
            throw std::runtime_error("build_scaling_map: non-positive or non-finite h at s=" + std::to_string(s[i]));
        }
        if (i > 0 && !(ell[i] > ell[i - 1])) {
            throw std::runtime_error("build_scaling_map: ell not strictly increasing near s=" + std::to_string(s[i]));
        }
    }

    const double check = anchor_log_rate(s0, params);
    if (std::fabs(check - ell[0]) > 1e-8 * std::max(1.0, std::fabs(check))) {
        std::ostringstream os;
        os << "build_scaling_map: backward integration drifted from the s0 anchor (" << ell[0] << " vs " << check
           << ")";
        throw std::runtime_error(os.str());
    }
    return ScalingMap(params, std::move(s), std::move(ell), std::move(h));
}

} // namespace blowup
