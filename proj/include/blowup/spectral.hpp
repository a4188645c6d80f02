#pragma once

// Hermite eigenfunctions of 𝓛 = Δ − ½y·∇ + 1 in L²_ρ, the cutoff χ, the
// grid shared by stepping and projection, and the five-component split of q.

#include "blowup/numerics.hpp"
#include "blowup/params.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace blowup {

// ---------------------------------------------------------------- Hermite

/// Coefficients of h_m(y) = Σ_j (−1)^j m!/(j!(m−2j)!) y^{m−2j}; row m holds powers 0..m.
inline std::vector<std::vector<double>> hermite_coefficients(int max_degree) {
    if (max_degree < 0) throw InvalidParameter("hermite_coefficients: negative degree");
    std::vector<std::vector<double>> table(static_cast<std::size_t>(max_degree) + 1);
    for (int m = 0; m <= max_degree; ++m) {
        auto& row = table[static_cast<std::size_t>(m)];
        row.assign(static_cast<std::size_t>(m) + 1, 0.0);
        for (int j = 0; 2 * j <= m; ++j) {
            const double c = std::tgamma(m + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(m - 2.0 * j + 1.0));
            row[static_cast<std::size_t>(m - 2 * j)] = (j % 2 == 0 ? c : -c);
        }
    }
    return table;
}

/// i!·2^i, the L²_ρ norm squared of h_i in one dimension.
inline double hermite_norm_sq(int i) { return std::tgamma(i + 1.0) * std::pow(2.0, i); }

// ---------------------------------------------------------------- grid

enum class GridKind { Radial, Line };

/// Uniform grid in y. Radial: r ∈ [0, y_max] for any n. Line: y ∈ [−y_max, y_max], n = 1.
///
/// `rho_weights` are composite-Simpson weights times the measure and ρ, so
/// ∫ f ρ dy ≈ Σ f_i rho_weights_i.
struct Grid {
    GridKind kind = GridKind::Radial;
    int n = 1;
    double dy = 0.05;
    double y_max = 0.0;
    std::vector<double> y;
    std::vector<double> rho_weights;
    double self_test_error = 0.0;

    [[nodiscard]] std::size_t size() const { return y.size(); }
    [[nodiscard]] double radius(std::size_t i) const { return std::fabs(y[i]); }

    /// ∫ f ρ for nodal values f.
    [[nodiscard]] double integrate(const std::vector<double>& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * rho_weights[i];
        return acc;
    }
};

/// |S^{n−1}|, with |S^0| = 2.
inline double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

/// ρ(y) = e^{−|y|²/4}/(4π)^{n/2}.
inline double rho_density(double r, int n) {
    return std::exp(-0.25 * r * r) / std::pow(4.0 * std::numbers::pi, n / 2.0);
}

inline double moment_self_test(const Grid& g);

inline Grid make_grid(GridKind kind, int n, double dy, double y_max) {
    if (!(dy > 0.0) || !(y_max > 0.0)) throw InvalidParameter("make_grid: dy and y_max must be positive");
    if (n < 1) throw InvalidParameter("make_grid: n must be >= 1");
    if (kind == GridKind::Line && n != 1) throw InvalidParameter("make_grid: line grid requires n = 1");
    Grid g;
    g.kind = kind;
    g.n = n;
    g.dy = dy;
    auto half = static_cast<std::size_t>(std::ceil(y_max / dy - 1e-9));
    if (kind == GridKind::Radial) {
        if (half % 2 == 1) ++half;
        if (half < 2) half = 2;
        g.y_max = dy * static_cast<double>(half);
        g.y.resize(half + 1);
        for (std::size_t i = 0; i <= half; ++i) g.y[i] = dy * static_cast<double>(i);
        const auto w = simpson_weights(g.y.size(), dy);
        const double area = sphere_area(n);
        g.rho_weights.resize(g.y.size());
        for (std::size_t i = 0; i < g.y.size(); ++i) {
            const double r = g.y[i];
            const double jac = (n == 1) ? 1.0 : std::pow(r, n - 1);
            g.rho_weights[i] = w[i] * area * jac * rho_density(r, n);
        }
    } else {
        if (half < 1) half = 1;
        g.y_max = dy * static_cast<double>(half);
        g.y.resize(2 * half + 1);
        for (std::size_t i = 0; i < g.y.size(); ++i) g.y[i] = dy * (static_cast<double>(i) - static_cast<double>(half));
        const auto w = simpson_weights(g.y.size(), dy);
        g.rho_weights.resize(g.y.size());
        for (std::size_t i = 0; i < g.y.size(); ++i) g.rho_weights[i] = w[i] * rho_density(g.y[i], 1);
    }
    g.self_test_error = moment_self_test(g);
    return g;
}

/// Largest relative error of the grid's even ρ-moments E|y|^{2k}, k = 0..3
/// (exact: 4^k Γ(n/2+k)/Γ(n/2)). Used as the projection self-test.
inline double moment_self_test(const Grid& g) {
    double worst = 0.0;
    for (int k = 0; k <= 3; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += std::pow(g.y[i] * g.y[i], k) * g.rho_weights[i];
        const double exact = std::pow(4.0, k) * std::tgamma(g.n / 2.0 + k) / std::tgamma(g.n / 2.0);
        worst = std::max(worst, std::fabs(acc / exact - 1.0));
    }
    return worst;
}

/// Hermite table plus a line quadrature for ρ (the 1D orthogonality checks).
class HermiteBasis {
public:
    HermiteBasis(int max_degree, double dy, double y_max)
        : max_degree_(max_degree), coeffs_(hermite_coefficients(max_degree)),
          grid_(make_grid(GridKind::Line, 1, dy, y_max)) {}

    [[nodiscard]] int max_degree() const { return max_degree_; }
    [[nodiscard]] const std::vector<std::vector<double>>& coefficients() const { return coeffs_; }
    [[nodiscard]] const Grid& quadrature() const { return grid_; }

    /// h_m(y) by Horner on the coefficient table.
    [[nodiscard]] double operator()(int m, double y) const {
        const auto& c = coeffs_.at(static_cast<std::size_t>(m));
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * y + *it;
        return acc;
    }

    /// G_ij = ∫ h_i h_j ρ by the grid quadrature.
    [[nodiscard]] std::vector<std::vector<double>> gram() const {
        const auto d = static_cast<std::size_t>(max_degree_) + 1;
        std::vector<std::vector<double>> values(d, std::vector<double>(grid_.size()));
        for (std::size_t m = 0; m < d; ++m)
            for (std::size_t i = 0; i < grid_.size(); ++i) values[m][i] = (*this)(static_cast<int>(m), grid_.y[i]);
        std::vector<std::vector<double>> g(d, std::vector<double>(d, 0.0));
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b <= a; ++b) {
                double acc = 0.0;
                for (std::size_t i = 0; i < grid_.size(); ++i) acc += values[a][i] * values[b][i] * grid_.rho_weights[i];
                g[a][b] = g[b][a] = acc;
            }
        return g;
    }

    /// max_{i,j} |G_ij − i!2^i δ_ij|.
    [[nodiscard]] double orthogonality_error() const {
        const auto g = gram();
        double worst = 0.0;
        for (std::size_t a = 0; a < g.size(); ++a)
            for (std::size_t b = 0; b < g.size(); ++b) {
                const double exact = (a == b) ? hermite_norm_sq(static_cast<int>(a)) : 0.0;
                worst = std::max(worst, std::fabs(g[a][b] - exact));
            }
        return worst;
    }

private:
    int max_degree_;
    std::vector<std::vector<double>> coeffs_;
    Grid grid_;
};

// ---------------------------------------------------------------- cutoff

/// χ₀: 1 on [0,1], 0 on [2,∞), quintic smoothstep in between.
inline double chi0(double x) {
    if (x <= 1.0) return 1.0;
    if (x >= 2.0) return 0.0;
    const double t = x - 1.0;
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// χ(y,s) = χ₀(|y|/(K√s)).
inline double cutoff_chi(double y, double s, double K) { return chi0(std::fabs(y) / (K * std::sqrt(s))); }

// ---------------------------------------------------------------- decomposition

enum class Component { Q0 = 0, Q1 = 1, Q2 = 2, QMinus = 3, QE = 4, None = 5 };

inline std::string_view component_name(Component c) {
    switch (c) {
    case Component::Q0: return "q0";
    case Component::Q1: return "q1";
    case Component::Q2: return "q2";
    case Component::QMinus: return "qminus";
    case Component::QE: return "qe";
    default: return "none";
    }
}

inline Component component_from_name(std::string_view name) {
    for (int i = 0; i <= 5; ++i) {
        const auto c = static_cast<Component>(i);
        if (component_name(c) == name) return c;
    }
    throw InvalidParameter("unknown component name: " + std::string(name));
}

/// Components of q_b = χq (q0, q1, q2) and the two sup-norms. Radial grids keep q1 = 0.
struct ModeDecomposition {
    double s = 0.0;
    double q0 = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double qminus_norm = 0.0;
    double qe_norm = 0.0;

    [[nodiscard]] double value(Component c) const {
        switch (c) {
        case Component::Q0: return q0;
        case Component::Q1: return q1;
        case Component::Q2: return q2;
        case Component::QMinus: return qminus_norm;
        case Component::QE: return qe_norm;
        default: return 0.0;
        }
    }
};

/// Nodal q₋ = q_b − q0 − q1·y − (q2/2)(|y|² − 2n), exposed for orthogonality checks.
inline std::vector<double> minus_part(const Grid& g, const std::vector<double>& q, double s, double K,
                                      const ModeDecomposition& d) {
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = g.y[i];
        const double qb = cutoff_chi(y, s, K) * q[i];
        out[i] = qb - d.q0 - d.q1 * y - 0.5 * d.q2 * (y * y - 2.0 * g.n);
    }
    return out;
}

/// Splits q into q_b = χq and q_e = (1−χ)q and projects q_b on degrees ≤ 2.
///
/// Throws ConfigError when the grid misses the cutoff support or fails the
/// moment self-test (too coarse for 1e-8 projections).
inline ModeDecomposition decompose(const Grid& g, const std::vector<double>& q, double s, const ProblemParams& params) {
    if (q.size() != g.size()) throw InvalidParameter("decompose: value count does not match grid");
    const double K = params.cutoff_scale;
    const double support = 2.0 * K * std::sqrt(s);
    if (g.y_max < support * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "decompose: grid y_max=" << g.y_max << " does not cover the cutoff support 2K*sqrt(s)=" << support;
        throw ConfigError(os.str());
    }
    if (const double err = g.self_test_error; err > 1e-6) {
        std::ostringstream os;
        os << "decompose: grid too coarse, rho-moment self-test error " << err << " (dy=" << g.dy << ")";
        throw ConfigError(os.str());
    }

    const double n = g.n;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, qe = 0.0;
    std::vector<double> qb(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = g.y[i];
        const double chi = cutoff_chi(y, s, K);
        qb[i] = chi * q[i];
        qe = std::max(qe, std::fabs((1.0 - chi) * q[i]));
        const double w = g.rho_weights[i] * qb[i];
        a0 += w;
        a1 += w * y;
        a2 += w * (y * y / (4.0 * n) - 0.5);
    }
    ModeDecomposition d;
    d.s = s;
    d.q0 = a0;
    d.q1 = (g.kind == GridKind::Line) ? 0.5 * a1 : 0.0;
    d.q2 = a2;
    d.qe_norm = qe;
    double qm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = g.y[i];
        const double r = qb[i] - d.q0 - d.q1 * y - 0.5 * d.q2 * (y * y - 2.0 * n);
        qm = std::max(qm, std::fabs(r) / (1.0 + std::pow(std::fabs(y), 3)));
    }
    d.qminus_norm = qm;
    return d;
}

/// Nodal q0 + q1·y + (q2/2)(|y|² − 2n), the finite-mode part of a decomposition.
inline std::vector<double> reconstruct(const Grid& g, const ModeDecomposition& d) {
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = g.y[i];
        out[i] = d.q0 + d.q1 * y + 0.5 * d.q2 * (y * y - 2.0 * g.n);
    }
    return out;
}

// ---------------------------------------------------------------- shrinking set

/// Bounds (A/s², A/s², A² ln²s/s², A/s², A²/√s) on (q0, q1, q2, q₋, q_e).
struct ShrinkingSetSpec {
    double A = 1.0;

    [[nodiscard]] std::array<double, 5> bounds(double s) const {
        const double s2 = s * s;
        const double ls = std::log(s);
        return {A / s2, A / s2, A * A * ls * ls / s2, A / s2, A * A / std::sqrt(s)};
    }
};

struct MembershipReport {
    double s = 0.0;
    std::array<double, 5> ratios{};
    std::array<bool, 5> within{};
    bool member = true;
    Component violator = Component::None;
    int sign = 0;
    double max_ratio = 0.0;
};

/// Per-component saturation ratios |value|/bound. The set is closed: ratio 1 is inside.
/// The violator is the component with the largest ratio among those above 1,
/// and `sign` is the sign of its (signed) value.
inline MembershipReport in_shrinking_set(const ModeDecomposition& d, const ShrinkingSetSpec& spec) {
    MembershipReport r;
    r.s = d.s;
    const auto b = spec.bounds(d.s);
    for (int i = 0; i < 5; ++i) {
        const auto c = static_cast<Component>(i);
        const double ratio = std::fabs(d.value(c)) / b[static_cast<std::size_t>(i)];
        r.ratios[static_cast<std::size_t>(i)] = ratio;
        r.within[static_cast<std::size_t>(i)] = ratio <= 1.0;
        if (ratio > r.max_ratio) r.max_ratio = ratio;
        if (ratio > 1.0) {
            r.member = false;
            if (r.violator == Component::None || ratio > r.ratios[static_cast<std::size_t>(r.violator)]) {
                r.violator = c;
                r.sign = d.value(c) >= 0.0 ? 1 : -1;
            }
        }
    }
    return r;
}

inline std::string decomposition_csv_header() { return "s,q0,q1,q2,qminus_norm,qe_norm,member_flag,violator"; }

inline std::string decomposition_csv_row(const ModeDecomposition& d, const MembershipReport& m) {
    std::ostringstream os;
    os.precision(17);
    os << d.s << ',' << d.q0 << ',' << d.q1 << ',' << d.q2 << ',' << d.qminus_norm << ',' << d.qe_norm << ','
       << (m.member ? 1 : 0) << ',' << component_name(m.violator);
    return os.str();
}

} // namespace blowup
