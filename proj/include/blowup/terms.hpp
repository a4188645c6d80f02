#pragma once

// Profiles f₀ and φ and every term of the q-equation
//   ∂_s q = 𝓛q + Vq + B(q) + R + D(q),   𝓛 = Δ − ½y·∇ + 1,
// obtained from the w-equation by w = φ + q, plus the w-form nonlinearity N.

#include "blowup/numerics.hpp"
#include "blowup/params.hpp"
#include "blowup/scaling.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace blowup {

/// f₀(z) = (1 + c z²)^{−k} and φ(y,s) = f₀(y/√s) + n/(2ps), c = (p−1)/(4p), k = 1/(p−1).
/// Derivatives are closed-form and radial (y is |y| for n ≥ 2, signed on a line grid).
struct Profile {
    double p = 3.0;
    int n = 1;

    [[nodiscard]] double c() const { return (p - 1.0) / (4.0 * p); }
    [[nodiscard]] double k() const { return 1.0 / (p - 1.0); }

    [[nodiscard]] double f0(double z) const { return std::pow(1.0 + c() * z * z, -k()); }

    [[nodiscard]] double phi(double y, double s) const { return f0(y / std::sqrt(s)) + n / (2.0 * p * s); }

    [[nodiscard]] double phi_y(double y, double s) const {
        const double g = 1.0 + c() * y * y / s;
        return -k() * std::pow(g, -k() - 1.0) * 2.0 * c() * y / s;
    }

    /// Δφ = φ_rr + (n−1)/r φ_r.
    [[nodiscard]] double laplacian(double y, double s) const {
        const double cc = c(), kk = k();
        const double g = 1.0 + cc * y * y / s;
        const double a = 2.0 * cc * y / s;
        return -kk * std::pow(g, -kk - 1.0) * (2.0 * cc / s) * n + kk * (kk + 1.0) * std::pow(g, -kk - 2.0) * a * a;
    }

    /// ½ y·∇φ.
    [[nodiscard]] double half_y_grad(double y, double s) const {
        const double g = 1.0 + c() * y * y / s;
        return -k() * std::pow(g, -k() - 1.0) * c() * y * y / s;
    }

    [[nodiscard]] double phi_s(double y, double s) const {
        const double g = 1.0 + c() * y * y / s;
        return k() * std::pow(g, -k() - 1.0) * c() * y * y / (s * s) - n / (2.0 * p * s * s);
    }
};

/// Everything the term evaluators need at one similarity time.
struct TermSlice {
    double s = 0.0;
    double h = 0.0;
    double ell = 0.0;
    double log_den = 0.0; ///< ln ln(ψ₁² + 2)
    double two_em2l = 0.0; ///< 2e^{−2ℓ}
    double den = 0.0;      ///< ln(ψ₁² + 2)
    double p = 3.0;
    double alpha = 1.0;
    Profile profile;
};

inline TermSlice make_slice(const ProblemParams& params, double s, double ell, double h) {
    TermSlice t;
    t.s = s;
    t.ell = ell;
    t.h = h;
    t.den = log_psi_sq_plus_two(ell);
    t.log_den = std::log(t.den);
    t.two_em2l = 2.0 * std::exp(-2.0 * ell);
    t.p = params.p;
    t.alpha = params.alpha;
    t.profile = Profile{params.p, params.n};
    return t;
}

/// Binds a rate provider to the problem parameters.
template <RateProvider R>
class TermContext {
public:
    explicit TermContext(const R& rate) : rate_(&rate), params_(rate.params()), profile_{params_.p, params_.n} {}

    [[nodiscard]] const ProblemParams& params() const { return params_; }
    [[nodiscard]] const Profile& profile() const { return profile_; }
    [[nodiscard]] const R& rate() const { return *rate_; }

    [[nodiscard]] TermSlice at(double s) const {
        const double ell = rate_->ell(s);
        return make_slice(params_, s, ell, rate_coefficient(s, ell, params_.p, params_.alpha));
    }

private:
    const R* rate_;
    ProblemParams params_;
    Profile profile_;
};

/// ln(ψ₁²z² + 2) = 2ℓ + ln(z² + 2e^{−2ℓ}). Below |z| = 10⁻⁴ the split form
/// would cancel, so the log-sum-exp form is used there; z = 0 gives ln 2.
inline double log_psi_z_sq_plus_two(double z, const TermSlice& t) {
    const double zz = z * z;
    if (zz >= 1e-8) return 2.0 * t.ell + std::log(zz + t.two_em2l);
    if (z == 0.0) return std::numbers::ln2;
    return log_sum_exp(2.0 * t.ell + 2.0 * std::log(std::fabs(z)), std::numbers::ln2);
}

/// α·(ln ln(ψ₁²z²+2) − ln ln(ψ₁²+2)), the log of the ratio below.
inline double log_ratio_exponent(double z, const TermSlice& t) {
    if (t.alpha == 0.0) return 0.0;
    if (z == 1.0 || z == -1.0) return 0.0;
    return t.alpha * (std::log(log_psi_z_sq_plus_two(z, t)) - t.log_den);
}

/// ln^α(ψ₁²z² + 2)/ln^α(ψ₁² + 2), evaluated through ℓ = ln ψ₁.
inline double stable_log_ratio(double z, const TermSlice& t) {
    if (t.alpha == 0.0 || z == 1.0 || z == -1.0) return 1.0;
    if (t.alpha == 1.0) return log_psi_z_sq_plus_two(z, t) / t.den;
    return std::exp(log_ratio_exponent(z, t));
}

/// L(v,s) = ratio(v) − 1, via expm1 so small departures keep full precision.
inline double term_L(double v, const TermSlice& t) { return std::expm1(log_ratio_exponent(v, t)); }

/// V = p/(p−1)(φ^{p−1} − 1).
inline double potential_V(double y, const TermSlice& t) {
    const double phi = t.profile.phi(y, t.s);
    return t.p / (t.p - 1.0) * std::expm1((t.p - 1.0) * std::log(phi));
}

/// B = (|q+φ|^{p−1}(q+φ) − φ^p − pφ^{p−1}q)/(p−1).
inline double term_B(double q, double y, const TermSlice& t) {
    const double phi = t.profile.phi(y, t.s);
    const double p = t.p;
    const double phi_pm1 = std::pow(phi, p - 1.0);
    return (signed_pow(q + phi, p) - phi_pm1 * phi - p * phi_pm1 * q) / (p - 1.0);
}

/// D₁ = (h − 1/(p−1))(|v|^{p−1}v − v), v = q + φ.
inline double term_D1(double q, double y, const TermSlice& t) {
    const double v = q + t.profile.phi(y, t.s);
    return (t.h - 1.0 / (t.p - 1.0)) * (signed_pow(v, t.p) - v);
}

/// D₂ = h|v|^{p−1}v·L(v,s).
inline double term_D2(double q, double y, const TermSlice& t) {
    const double v = q + t.profile.phi(y, t.s);
    return t.h * signed_pow(v, t.p) * term_L(v, t);
}

inline constexpr double kMaxAdmissibleV = 1.0e3;

/// D = D₁ + D₂. |v| > 10³ means the state left the physical regime.
inline double term_D(double q, double y, const TermSlice& t) {
    const double v = q + t.profile.phi(y, t.s);
    if (!(std::fabs(v) <= kMaxAdmissibleV)) {
        std::ostringstream os;
        os << "term_D: |q+phi|=" << std::fabs(v) << " exceeds " << kMaxAdmissibleV << " at y=" << y << " s=" << t.s;
        throw DomainError(os.str());
    }
    return (t.h - 1.0 / (t.p - 1.0)) * (signed_pow(v, t.p) - v) + t.h * signed_pow(v, t.p) * term_L(v, t);
}

/// R = Δφ − ½y·∇φ − φ/(p−1) + φ^p/(p−1) − ∂_sφ.
inline double term_R(double y, const TermSlice& t) {
    const Profile& pr = t.profile;
    const double s = t.s;
    const double phi = pr.phi(y, s);
    const double p = t.p;
    return pr.laplacian(y, s) - pr.half_y_grad(y, s) + (std::pow(phi, p) - phi) / (p - 1.0) - pr.phi_s(y, s);
}

/// N(w̄) = h|w̄+1|^{p−1}(w̄+1)·ratio(w̄+1) − h(w̄+1) − w̄.
inline double term_N(double wbar, const TermSlice& t) {
    const double w = wbar + 1.0;
    return t.h * signed_pow(w, t.p) * stable_log_ratio(w, t) - t.h * w - wbar;
}

/// Limit of s²R(0,s) for this profile: n(n+4)/(8p).
inline double remainder_constant(double p, int n) { return n * (n + 4.0) / (8.0 * p); }

// Convenience overloads taking (s, ctx), as in the reference operation list.

template <RateProvider R>
double stable_log_ratio(double z, double s, const TermContext<R>& ctx) { return stable_log_ratio(z, ctx.at(s)); }
template <RateProvider R>
double term_L(double v, double s, const TermContext<R>& ctx) { return term_L(v, ctx.at(s)); }
template <RateProvider R>
double potential_V(double y, double s, const TermContext<R>& ctx) { return potential_V(y, ctx.at(s)); }
template <RateProvider R>
double term_B(double q, double y, double s, const TermContext<R>& ctx) { return term_B(q, y, ctx.at(s)); }
template <RateProvider R>
double term_D(double q, double y, double s, const TermContext<R>& ctx) { return term_D(q, y, ctx.at(s)); }
template <RateProvider R>
double term_R(double y, double s, const TermContext<R>& ctx) { return term_R(y, ctx.at(s)); }
template <RateProvider R>
double term_N(double wbar, double s, const TermContext<R>& ctx) { return term_N(wbar, ctx.at(s)); }

} // namespace blowup
