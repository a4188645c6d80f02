#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace blowup {

/// |v|^{p-1} v. Integer exponents 2 and 3 are multiplied out; otherwise
/// sign(v)·exp(p ln|v|) with v = 0 mapped to 0.
inline double signed_pow(double v, double p) {
    if (p == 3.0) return v * v * v;
    if (p == 2.0) return v * std::fabs(v);
    if (v == 0.0) return 0.0;
    const double mag = std::exp(p * std::log(std::fabs(v)));
    return v < 0.0 ? -mag : mag;
}

/// ln(e^a + e^b) without overflow; either argument may be -inf.
inline double log_sum_exp(double a, double b) {
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    const double gap = lo - hi;
    if (gap < -40.0) return hi;
    return hi + std::log1p(std::exp(gap));
}

/// Composite Simpson weights for `count` equally spaced nodes (count odd, ≥ 3).
inline std::vector<double> simpson_weights(std::size_t count, double spacing) {
    if (count < 3 || count % 2 == 0) {
        throw std::invalid_argument("simpson_weights: node count must be odd and >= 3");
    }
    std::vector<double> w(count);
    for (std::size_t i = 0; i < count; ++i) {
        w[i] = (i == 0 || i + 1 == count) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        w[i] *= spacing / 3.0;
    }
    return w;
}

/// Cubic Hermite interpolation on one interval given values and slopes.
inline double hermite_cubic(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
           (t3 - t2) * h * d1;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y ≈ slope·x + intercept.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("least_squares: need at least two paired samples");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
    return {sxy / sxx, my - sxy / sxx * mx};
}

/// Verdict of a "scaled quantity stays bounded" sweep.
///
/// The constant is fitted on the leading `fit_count` samples (the least
/// asymptotic ones) and every later sample must stay within `growth` times it.
struct BoundednessReport {
    double fitted_constant = 0.0;
    double max_later = 0.0;
    double growth = 2.0;
    bool bounded = false;
};

inline BoundednessReport check_bounded(std::span<const double> scaled, std::size_t fit_count, double growth = 2.0) {
    BoundednessReport r;
    r.growth = growth;
    if (scaled.empty()) return r;
    fit_count = std::clamp<std::size_t>(fit_count, 1, scaled.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        const double v = std::fabs(scaled[i]);
        if (!std::isfinite(v)) return r;
        if (i < fit_count) {
            r.fitted_constant = std::max(r.fitted_constant, v);
        } else {
            r.max_later = std::max(r.max_later, v);
        }
    }
    r.bounded = r.max_later <= growth * r.fitted_constant || r.max_later == 0.0;
    return r;
}

} // namespace blowup
