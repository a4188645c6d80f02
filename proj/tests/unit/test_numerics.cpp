#include "blowup/numerics.hpp"
#include "blowup/params.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace blowup;

TEST(SignedPow, MatchesStdPowWithSign) {
    for (double p : {1.5, 2.0, 2.5, 3.0, 4.0})
        for (double v : {-3.0, -0.7, 0.0, 0.2, 5.0}) {
            const double expect = v == 0.0 ? 0.0 : std::copysign(std::pow(std::fabs(v), p), v);
            EXPECT_NEAR(signed_pow(v, p), expect, 1e-13 * std::max(1.0, std::fabs(expect))) << p << " " << v;
        }
}

TEST(LogSumExp, StableForLargeArguments) {
    EXPECT_DOUBLE_EQ(log_sum_exp(0.0, 0.0), std::log(2.0));
    EXPECT_DOUBLE_EQ(log_sum_exp(1000.0, std::log(2.0)), 1000.0);
    EXPECT_NEAR(log_sum_exp(1.0, 2.0), std::log(std::exp(1.0) + std::exp(2.0)), 1e-15);
    EXPECT_EQ(log_sum_exp(-INFINITY, 3.0), 3.0);
}

TEST(Simpson, ExactForCubics) {
    const std::size_t n = 21;
    const double h = 0.1;
    const auto w = simpson_weights(n, h);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i * h;
        acc += w[i] * (x * x * x - 2.0 * x + 1.0);
    }
    EXPECT_NEAR(acc, 4.0 - 4.0 + 2.0, 1e-13);
    EXPECT_THROW(simpson_weights(4, 0.1), std::invalid_argument);
}

TEST(HermiteCubic, ReproducesCubicExactly) {
    auto f = [](double x) { return 2 * x * x * x - x + 3; };
    auto df = [](double x) { return 6 * x * x - 1; };
    for (double x : {0.5, 0.75, 0.9})
        EXPECT_NEAR(hermite_cubic(0.5, 1.0, f(0.5), f(1.0), df(0.5), df(1.0), x), f(x), 1e-14);
}

TEST(LeastSquares, RecoversLine) {
    std::vector<double> x{1, 2, 3, 4}, y;
    for (double v : x) y.push_back(-2.0 * v + 0.5);
    const auto fit = least_squares(x, y);
    EXPECT_NEAR(fit.slope, -2.0, 1e-14);
    EXPECT_NEAR(fit.intercept, 0.5, 1e-14);
    std::vector<double> one{1.0};
    EXPECT_THROW(least_squares(one, one), std::invalid_argument);
}

TEST(CheckBounded, FitThenVerify) {
    std::vector<double> ok{1.0, 1.2, 1.9, 0.5};
    EXPECT_TRUE(check_bounded(ok, 1).bounded);
    std::vector<double> bad{1.0, 1.5, 2.5};
    const auto r = check_bounded(bad, 1);
    EXPECT_FALSE(r.bounded);
    EXPECT_DOUBLE_EQ(r.fitted_constant, 1.0);
    EXPECT_DOUBLE_EQ(r.max_later, 2.5);
    std::vector<double> nan{1.0, NAN};
    EXPECT_FALSE(check_bounded(nan, 1).bounded);
}

TEST(Params, ValidationRejectsBadValues) {
    ProblemParams p;
    EXPECT_NO_THROW(p.validate());
    p.p = 1.0;
    EXPECT_THROW(p.validate(), InvalidParameter);
    p = ProblemParams{};
    p.n = 0;
    EXPECT_THROW(p.validate(), InvalidParameter);
    p = ProblemParams{};
    p.amplitude = -1.0;
    EXPECT_THROW(p.validate(), InvalidParameter);
}
