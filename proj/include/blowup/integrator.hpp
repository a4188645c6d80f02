#pragma once

// Method-of-lines time marching of the similarity-variable dynamics.
//
//   WForm   ∂_s w = Δw − ½y·∇w − h w + h|w|^{p−1}w·ratio(w)         (primary route)
//   QForm   ∂_s q = 𝓛q + Vq + B(q) + R + D(q)                      (cross-check route)
//   Linear  ∂_s u = 𝓛u
//   LinearV ∂_s u = (𝓛 + V)u                                       (kernel bounds)
//
// Second-order central differences, classical RK4, fixed uniform grid.

#include "blowup/numerics.hpp"
#include "blowup/params.hpp"
#include "blowup/scaling.hpp"
#include "blowup/spectral.hpp"
#include "blowup/terms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace blowup {

enum class Dynamics { WForm, QForm, Linear, LinearV };

inline std::string_view dynamics_name(Dynamics d) {
    switch (d) {
    case Dynamics::WForm: return "w";
    case Dynamics::QForm: return "q";
    case Dynamics::Linear: return "linear";
    default: return "linear_v";
    }
}

struct IntegratorSettings {
    double dy = 0.05;
    double ds = 0.0; ///< 0 picks the largest stable step dividing observe_every
    double observe_every = 0.05;
    bool stop_on_exit = true;
    Dynamics dynamics = Dynamics::WForm;
    bool enforce_resolution = true; ///< require dy ≤ 0.05 (projection accuracy near the origin)
};

inline constexpr double kMaxGridSpacing = 0.05;
inline constexpr double kGridMargin = 5.0;

/// Radial (or line) grid sized so the cutoff support 2K√s_max stays inside.
inline std::shared_ptr<const Grid> make_production_grid(const ProblemParams& params, double s_max, double dy,
                                                        GridKind kind = GridKind::Radial, double margin = kGridMargin) {
    const double y_max = 2.0 * params.cutoff_scale * std::sqrt(s_max) + margin;
    return std::make_shared<const Grid>(make_grid(kind, params.n, dy, y_max));
}

/// Largest explicit step: diffusion limit 0.4·dy² and the advection limit of the ½y·∇ term.
inline double stable_step(const Grid& g) {
    return std::min(0.4 * g.dy * g.dy, 2.5 * g.dy / (0.5 * g.y_max));
}

enum class Field { W, Q };

/// Nodal field at one similarity time. `values` holds w (Field::W) or q (Field::Q).
struct GridState {
    double s = 0.0;
    std::shared_ptr<const Grid> grid;
    std::vector<double> values;
    Field field = Field::W;
};

struct Observation {
    double s = 0.0;
    ModeDecomposition dec;
    MembershipReport membership;
    double sup_w_minus_f0 = 0.0; ///< sup_y |w − f₀(y/√s)|
    double w_center = 0.0;       ///< w(0,s)
    double wbar0 = 0.0;          ///< ∫(w−1)χρ
    double wbar2 = 0.0;          ///< coefficient of (|y|²−2n) in w−1
};

struct ExitInfo {
    bool exited = false;
    double s = 0.0;
    Component violator = Component::None;
    int sign = 0;    ///< sign of the violating component
    int q0_sign = 0; ///< sign of q0 at the exit observation
};

struct TrajectoryRecord {
    ProblemParams params;
    IntegratorSettings settings;
    double s_start = 0.0;
    double s_max = 0.0;
    double ds = 0.0;
    std::vector<Observation> observations;
    ExitInfo exit;
    bool poisoned = false;
    double last_valid_s = 0.0;
    std::string poison_report;
    GridState final_state;

    [[nodiscard]] double last_s() const { return observations.empty() ? s_start : observations.back().s; }
    [[nodiscard]] bool survived() const {
        return !exit.exited && !poisoned && last_s() >= s_max - 1e-9;
    }
    /// First s at which membership failed, or the last observed s when it never did.
    [[nodiscard]] double exit_or_end() const { return exit.exited ? exit.s : last_s(); }
};

/// Raised by run() when the state stops being finite.
class PoisonedState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <RateProvider R>
class Integrator {
public:
    Integrator(const R& rate, std::shared_ptr<const Grid> grid, IntegratorSettings settings)
        : rate_(&rate), params_(rate.params()), grid_(std::move(grid)), settings_(settings),
          profile_{params_.p, params_.n} {
        if (!grid_) throw ConfigError("Integrator: null grid");
        const Grid& g = *grid_;
        if (g.size() < 5) throw ConfigError("Integrator: grid needs at least 5 nodes");
        if (settings_.enforce_resolution && g.dy > kMaxGridSpacing * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "Integrator: dy=" << g.dy << " exceeds the resolution requirement " << kMaxGridSpacing;
            throw ConfigError(os.str());
        }
        if (!(settings_.observe_every > 0.0)) throw ConfigError("Integrator: observe_every must be positive");
        const double limit = stable_step(g);
        double ds = settings_.ds > 0.0 ? settings_.ds : limit;
        if (ds > limit * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "Integrator: ds=" << ds << " violates the explicit stability bound " << limit
               << " (0.4*dy^2=" << 0.4 * g.dy * g.dy << ")";
            throw ConfigError(os.str());
        }
        if (settings_.observe_every < ds * (1.0 - 1e-12)) throw ConfigError("Integrator: observe_every must be >= ds");
        const double per = std::ceil(settings_.observe_every / ds - 1e-9);
        ds_ = settings_.observe_every / per;
        build_stencil();
        const std::size_t m = g.size();
        k1_.resize(m);
        k2_.resize(m);
        k3_.resize(m);
        k4_.resize(m);
        tmp_.resize(m);
        phi_.resize(m);
        aux_a_.resize(m);
        aux_b_.resize(m);
        aux_c_.resize(m);
    }

    [[nodiscard]] double ds() const { return ds_; }
    [[nodiscard]] const Grid& grid() const { return *grid_; }
    [[nodiscard]] std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    [[nodiscard]] const IntegratorSettings& settings() const { return settings_; }
    [[nodiscard]] const ProblemParams& params() const { return params_; }
    [[nodiscard]] const Profile& profile() const { return profile_; }

    [[nodiscard]] Field field() const { return settings_.dynamics == Dynamics::WForm ? Field::W : Field::Q; }

    /// (Δ − ½y·∇)u with the boundary second derivative prescribed as `edge_uyy`.
    void apply_transport(const std::vector<double>& u, std::vector<double>& out, double edge_uyy_lo,
                         double edge_uyy_hi) const {
        const Grid& g = *grid_;
        const std::size_t last = g.size() - 1;
        const double inv_dy2 = 1.0 / (g.dy * g.dy);
        const double inv_2dy = 0.5 / g.dy;
        for (std::size_t i = 1; i < last; ++i) {
            out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dy2 + beta_[i] * (u[i + 1] - u[i - 1]);
        }
        if (g.kind == GridKind::Radial) {
            out[0] = 2.0 * g.n * (u[1] - u[0]) * inv_dy2;
        } else {
            const double uy = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv_2dy;
            out[0] = edge_uyy_lo - 0.5 * g.y[0] * uy;
        }
        const double uy = (3.0 * u[last] - 4.0 * u[last - 1] + u[last - 2]) * inv_2dy;
        out[last] = edge_uyy_hi + edge_first_ * uy;
    }

    /// Right-hand side of the configured dynamics at time s.
    void rhs(double s, const std::vector<double>& u, std::vector<double>& out) {
        const Grid& g = *grid_;
        const std::size_t m = g.size();
        switch (settings_.dynamics) {
        case Dynamics::Linear:
            apply_transport(u, out, 0.0, 0.0);
            for (std::size_t i = 0; i < m; ++i) out[i] += u[i];
            return;
        case Dynamics::LinearV: {
            refresh_potential(s);
            apply_transport(u, out, 0.0, 0.0);
            for (std::size_t i = 0; i < m; ++i) out[i] += (1.0 + aux_a_[i]) * u[i];
            return;
        }
        case Dynamics::WForm: {
            const TermSlice t = slice(s);
            apply_transport(u, out, 0.0, 0.0);
            const double h = t.h;
            const double p = t.p;
            for (std::size_t i = 0; i < m; ++i) {
                const double w = u[i];
                out[i] += -h * w + h * signed_pow(w, p) * stable_log_ratio(w, t);
            }
            return;
        }
        case Dynamics::QForm: {
            const TermSlice t = slice(s);
            refresh_q_terms(s, t);
            // w_yy = 0 at the edges translates to q_yy = −φ_yy there.
            const double lo = g.kind == GridKind::Line ? -phi_yy(g.y[0], s) : 0.0;
            const double hi = -phi_yy(g.y[m - 1], s);
            apply_transport(u, out, lo, hi);
            const double p = t.p;
            const double h = t.h;
            const double hdev = h - 1.0 / (p - 1.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double q = u[i];
                const double phi = phi_[i];
                const double v = q + phi;
                if (!(std::fabs(v) <= kMaxAdmissibleV)) {
                    std::ostringstream os;
                    os << "q-route: |q+phi|=" << std::fabs(v) << " left the admissible range at y=" << g.y[i]
                       << " s=" << s;
                    throw DomainError(os.str());
                }
                const double vp = signed_pow(v, p);
                const double pm1 = aux_c_[i];
                const double B = (vp - pm1 * phi - p * pm1 * q) / (p - 1.0);
                const double D = hdev * (vp - v) + h * vp * term_L(v, t);
                out[i] += (1.0 + aux_a_[i]) * q + B + aux_b_[i] + D;
            }
            return;
        }
        }
    }

    /// One classical RK4 step in place.
    void step(GridState& st, double ds) {
        std::vector<double>& u = st.values;
        const std::size_t m = u.size();
        const double s = st.s;
        rhs(s, u, k1_);
        for (std::size_t i = 0; i < m; ++i) tmp_[i] = u[i] + 0.5 * ds * k1_[i];
        rhs(s + 0.5 * ds, tmp_, k2_);
        for (std::size_t i = 0; i < m; ++i) tmp_[i] = u[i] + 0.5 * ds * k2_[i];
        rhs(s + 0.5 * ds, tmp_, k3_);
        for (std::size_t i = 0; i < m; ++i) tmp_[i] = u[i] + ds * k3_[i];
        rhs(s + ds, tmp_, k4_);
        for (std::size_t i = 0; i < m; ++i) u[i] += ds / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        st.s = s + ds;
    }

    /// The perturbation q at time s (w − φ for the w-route, the state itself otherwise).
    [[nodiscard]] std::vector<double> perturbation(const GridState& st) const {
        if (st.field == Field::Q) return st.values;
        std::vector<double> q(st.values.size());
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = st.values[i] - profile_.phi(grid_->y[i], st.s);
        return q;
    }

    /// The full solution w at time s.
    [[nodiscard]] std::vector<double> w_values(const GridState& st) const {
        if (st.field == Field::W) return st.values;
        std::vector<double> w(st.values.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = st.values[i] + profile_.phi(grid_->y[i], st.s);
        return w;
    }

    [[nodiscard]] Observation observe(const GridState& st, const ShrinkingSetSpec& spec) const {
        const Grid& g = *grid_;
        Observation o;
        o.s = st.s;
        const auto q = perturbation(st);
        o.dec = decompose(g, q, st.s, params_);
        o.membership = in_shrinking_set(o.dec, spec);
        const bool linear = settings_.dynamics == Dynamics::Linear || settings_.dynamics == Dynamics::LinearV;
        if (linear) return o;
        const auto w = w_values(st);
        const double sq = std::sqrt(st.s);
        const double n = g.n;
        double sup = 0.0, a0 = 0.0, a2 = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = g.y[i];
            sup = std::max(sup, std::fabs(w[i] - profile_.f0(y / sq)));
            const double wb = (w[i] - 1.0) * cutoff_chi(y, st.s, params_.cutoff_scale) * g.rho_weights[i];
            a0 += wb;
            a2 += wb * (y * y - 2.0 * n);
        }
        o.sup_w_minus_f0 = sup;
        o.w_center = w[center_index()];
        o.wbar0 = a0;
        o.wbar2 = a2 / (8.0 * n);
        return o;
    }

    [[nodiscard]] std::size_t center_index() const {
        return grid_->kind == GridKind::Radial ? 0 : grid_->size() / 2;
    }

    /// Marches from `initial` to s_max, observing every `observe_every`.
    /// Stops at the first exit from S_A when stop_on_exit is set.
    TrajectoryRecord run(GridState initial, double s_max, const ShrinkingSetSpec& spec) {
        if (initial.grid != grid_ && (!initial.grid || initial.grid->size() != grid_->size())) {
            throw ConfigError("Integrator::run: state grid does not match the integrator grid");
        }
        if (initial.field != field()) throw ConfigError("Integrator::run: state field does not match the dynamics");
        const double support = 2.0 * params_.cutoff_scale * std::sqrt(s_max);
        if (grid_->y_max < support * (1.0 - 1e-12)) {
            std::ostringstream os;
            os << "Integrator::run: y_max=" << grid_->y_max << " < 2K*sqrt(s_max)=" << support;
            throw ConfigError(os.str());
        }
        TrajectoryRecord rec;
        rec.params = params_;
        rec.settings = settings_;
        rec.s_start = initial.s;
        rec.s_max = s_max;
        rec.ds = ds_;
        rec.last_valid_s = initial.s;

        GridState st = std::move(initial);
        st.grid = grid_;
        const double s0 = st.s;
        auto record = [&](const GridState& state) {
            Observation o = observe(state, spec);
            if (!o.membership.member && !rec.exit.exited) {
                rec.exit.exited = true;
                rec.exit.s = o.s;
                rec.exit.violator = o.membership.violator;
                rec.exit.sign = o.membership.sign;
                rec.exit.q0_sign = o.dec.q0 >= 0.0 ? 1 : -1;
            }
            rec.observations.push_back(o);
            rec.last_valid_s = o.s;
        };

        try {
            check_finite(st);
            record(st);
            std::size_t k = 0;
            while (!(rec.exit.exited && settings_.stop_on_exit)) {
                const double target = std::min(s_max, s0 + settings_.observe_every * static_cast<double>(k + 1));
                const double span = target - st.s;
                if (span <= 1e-12) break;
                const auto steps = static_cast<std::size_t>(std::ceil(span / ds_ - 1e-9));
                const double h = span / static_cast<double>(steps);
                for (std::size_t j = 0; j < steps; ++j) step(st, h);
                st.s = target;
                ++k;
                check_finite(st);
                record(st);
                if (target >= s_max) break;
            }
        } catch (const PoisonedState& e) {
            rec.poisoned = true;
            rec.poison_report = e.what();
        } catch (const DomainError& e) {
            rec.poisoned = true;
            rec.poison_report = std::string("state left admissible regime after s=") +
                                std::to_string(rec.last_valid_s) + ": " + e.what();
        }
        rec.final_state = std::move(st);
        return rec;
    }

private:
    [[nodiscard]] TermSlice slice(double s) const {
        const double ell = rate_->ell(s);
        return make_slice(params_, s, ell, rate_coefficient(s, ell, params_.p, params_.alpha));
    }

    void check_finite(const GridState& st) const {
        for (std::size_t i = 0; i < st.values.size(); ++i) {
            if (!std::isfinite(st.values[i])) {
                std::ostringstream os;
                os << "poisoned state at s=" << st.s << ": non-finite value at node " << i << " (y=" << grid_->y[i]
                   << ")";
                throw PoisonedState(os.str());
            }
        }
    }

    [[nodiscard]] double phi_yy(double y, double s) const {
        const double c = profile_.c(), k = profile_.k();
        const double g = 1.0 + c * y * y / s;
        const double a = 2.0 * c * y / s;
        return -k * std::pow(g, -k - 1.0) * (2.0 * c / s) + k * (k + 1.0) * std::pow(g, -k - 2.0) * a * a;
    }

    void refresh_potential(double s) {
        if (cached_v_s_ == s) return;
        const Grid& g = *grid_;
        const double p = params_.p;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double phi = profile_.phi(g.y[i], s);
            phi_[i] = phi;
            aux_c_[i] = std::pow(phi, p - 1.0);
            aux_a_[i] = p / (p - 1.0) * (aux_c_[i] - 1.0);
        }
        cached_v_s_ = s;
    }

    void refresh_q_terms(double s, const TermSlice& t) {
        if (cached_r_s_ == s) return;
        refresh_potential(s);
        const Grid& g = *grid_;
        for (std::size_t i = 0; i < g.size(); ++i) aux_b_[i] = term_R(g.y[i], t);
        cached_r_s_ = s;
    }

    void build_stencil() {
        const Grid& g = *grid_;
        beta_.assign(g.size(), 0.0);
        const double inv_2dy = 0.5 / g.dy;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double y = g.y[i];
            const double drift = (g.kind == GridKind::Radial ? (g.n - 1.0) / y : 0.0) - 0.5 * y;
            beta_[i] = drift * inv_2dy;
        }
        const double yN = g.y.back();
        edge_first_ = (g.kind == GridKind::Radial ? (g.n - 1.0) / yN : 0.0) - 0.5 * yN;
    }

    const R* rate_;
    ProblemParams params_;
    std::shared_ptr<const Grid> grid_;
    IntegratorSettings settings_;
    Profile profile_;
    double ds_ = 0.0;
    std::vector<double> beta_;
    double edge_first_ = 0.0;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
    std::vector<double> phi_, aux_a_, aux_b_, aux_c_;
    double cached_v_s_ = std::numeric_limits<double>::quiet_NaN();
    double cached_r_s_ = std::numeric_limits<double>::quiet_NaN();
};

// ---------------------------------------------------------------- diagnostics

struct ModeOdeSample {
    double s = 0.0;
    double r0 = 0.0; ///< s²|q0′ − q0|
    double r1 = 0.0; ///< s²|q1′ − q1/2|
    double r2 = 0.0; ///< s³/ln s·|q2′ + (2/s)q2|
};

/// Centered finite-difference residuals of the mode ODEs on [s_lo, s_hi].
inline std::vector<ModeOdeSample> mode_ode_residuals(const TrajectoryRecord& rec, double s_lo, double s_hi) {
    std::vector<ModeOdeSample> out;
    const auto& ob = rec.observations;
    for (std::size_t i = 1; i + 1 < ob.size(); ++i) {
        const double s = ob[i].s;
        if (s < s_lo - 1e-9 || s > s_hi + 1e-9) continue;
        const double dt = ob[i + 1].s - ob[i - 1].s;
        const auto& a = ob[i - 1].dec;
        const auto& b = ob[i + 1].dec;
        const auto& c = ob[i].dec;
        ModeOdeSample m;
        m.s = s;
        m.r0 = s * s * std::fabs((b.q0 - a.q0) / dt - c.q0);
        m.r1 = s * s * std::fabs((b.q1 - a.q1) / dt - 0.5 * c.q1);
        m.r2 = s * s * s / std::log(s) * std::fabs((b.q2 - a.q2) / dt + 2.0 / s * c.q2);
        out.push_back(m);
    }
    return out;
}

struct KernelSample {
    double s = 0.0;
    double theta_minus = 0.0;
    double theta_e = 0.0;
    double template_minus = 0.0;
    double template_e = 0.0;
};

struct KernelBoundReport {
    double sigma = 0.0;
    double rho_star = 0.0;
    ModeDecomposition initial;
    std::vector<KernelSample> samples;
    double fitted_c_minus = 0.0; ///< max θ₋/template
    double fitted_c_e = 0.0;     ///< max θ_e/template
    double theta_e_decay_rate = 0.0; ///< −slope of ln θ_e vs s
};

/// Propagates v under ∂_sθ = (𝓛 + V)θ from σ to σ + ρ* and compares the θ₋ and
/// θ_e norms to the linear-kernel bound templates (constants fitted).
template <RateProvider R>
KernelBoundReport verify_kernel_bounds(const R& rate, std::shared_ptr<const Grid> grid, const std::vector<double>& v,
                                       double sigma, double rho_star, IntegratorSettings settings = {}) {
    if (!(rho_star > 0.0) || rho_star > 3.0) throw InvalidParameter("verify_kernel_bounds: need 0 < rho_star <= 3");
    settings.dynamics = Dynamics::LinearV;
    settings.stop_on_exit = false;
    Integrator<R> integ(rate, grid, settings);
    const ProblemParams& params = rate.params();
    GridState st{sigma, grid, v, Field::Q};
    ShrinkingSetSpec spec{params.amplitude};
    const auto rec = integ.run(st, sigma + rho_star, spec);
    if (rec.poisoned) throw std::runtime_error("verify_kernel_bounds: " + rec.poison_report);

    KernelBoundReport rep;
    rep.sigma = sigma;
    rep.rho_star = rho_star;
    rep.initial = rec.observations.front().dec;
    const auto& v0 = rep.initial;
    const double p = params.p;
    std::vector<double> ts, logs;
    for (const auto& o : rec.observations) {
        const double s = o.s;
        const double d = s - sigma;
        KernelSample k;
        k.s = s;
        k.theta_minus = o.dec.qminus_norm;
        k.theta_e = o.dec.qe_norm;
        k.template_minus = std::exp(d) * (d * d + 1.0) / s * (std::fabs(v0.q0) + std::fabs(v0.q1) + std::sqrt(s) * std::fabs(v0.q2)) +
                           std::exp(-0.5 * d) * v0.qminus_norm + std::exp(-d * d) / std::pow(s, 1.5) * v0.qe_norm;
        k.template_e = std::exp(d) * (std::fabs(v0.q0) + std::sqrt(s) * std::fabs(v0.q1) + s * std::fabs(v0.q2) +
                                      std::pow(s, 1.5) * v0.qminus_norm) +
                       std::exp(-d / p) * v0.qe_norm;
        if (k.template_minus > 0.0) rep.fitted_c_minus = std::max(rep.fitted_c_minus, k.theta_minus / k.template_minus);
        if (k.template_e > 0.0) rep.fitted_c_e = std::max(rep.fitted_c_e, k.theta_e / k.template_e);
        if (k.theta_e > 0.0) {
            ts.push_back(s);
            logs.push_back(std::log(k.theta_e));
        }
        rep.samples.push_back(k);
    }
    if (ts.size() >= 2) rep.theta_e_decay_rate = -least_squares(ts, logs).slope;
    return rep;
}

} // namespace blowup
