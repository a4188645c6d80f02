#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace blowup {

/// Raised when a parameter violates the documented preconditions.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an argument lies outside the domain where a quantity is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a time-marching configuration cannot be run as requested.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical and construction parameters of the problem
///   u_t = Δu + |u|^{p-1} u ln^α(u² + 2).
///
/// `amplitude` is the shrinking-set size A, `cutoff_scale` is K (the cutoff is
/// supported in |y| ≤ 2K√s) and `s0` is the initial similarity time.
struct ProblemParams {
    double p = 3.0;
    double alpha = 1.0;
    int n = 1;
    double amplitude = 20.0;
    double cutoff_scale = 10.0;
    double s0 = 20.0;

    /// Throws InvalidParameter describing the first violated invariant.
    void validate() const {
        auto fail = [](const std::string& what) { throw InvalidParameter("ProblemParams: " + what); };
        if (!std::isfinite(p) || !(p > 1.0)) fail("p must be > 1");
        if (!std::isfinite(alpha)) fail("alpha must be finite");
        if (n < 1) fail("n must be >= 1");
        if (!(amplitude >= 1.0)) fail("A must be >= 1");
        if (!(cutoff_scale >= 1.0)) fail("K must be >= 1");
        if (!(s0 >= 1.0)) fail("s0 must be >= 1");
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os << "p=" << p << " alpha=" << alpha << " n=" << n << " A=" << amplitude
           << " K=" << cutoff_scale << " s0=" << s0;
        return os.str();
    }
};

} // namespace blowup
