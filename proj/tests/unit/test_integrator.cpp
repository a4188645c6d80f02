#include "blowup/integrator.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace blowup;

namespace {

ProblemParams base() { return ProblemParams{}; }

struct Fixture {
    ProblemParams pr = base();
    ScalingMap map = build_scaling_map(pr, 30.0);
    std::shared_ptr<const Grid> grid = make_production_grid(pr, 25.0, 0.05);
};

} // namespace

TEST(Integrator, ConstantStatesAreSteady) {
    Fixture f;
    IntegratorSettings set;
    set.stop_on_exit = false;
    Integrator<ScalingMap> integ(f.map, f.grid, set);
    for (double c : {0.0, 1.0}) {
        GridState st{20.0, f.grid, std::vector<double>(f.grid->size(), c), Field::W};
        std::vector<double> out(f.grid->size());
        integ.rhs(20.0, st.values, out);
        for (double v : out) EXPECT_NEAR(v, 0.0, 1e-14);
        for (int k = 0; k < 100; ++k) integ.step(st, integ.ds());
        for (double v : st.values) EXPECT_NEAR(v, c, 1e-13);
    }
}

TEST(Integrator, WRhsAtProfileMatchesTerms) {
    // ∂_s w at w = φ minus ∂_sφ equals R + D(0) up to the stencil error.
    Fixture f;
    IntegratorSettings set;
    Integrator<ScalingMap> integ(f.map, f.grid, set);
    const double s = 22.0;
    std::vector<double> w(f.grid->size()), out(f.grid->size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = integ.profile().phi(f.grid->y[i], s);
    integ.rhs(s, w, out);
    TermContext<ScalingMap> ctx(f.map);
    const auto t = ctx.at(s);
    double worst = 0.0;
    for (std::size_t i = 0; i < w.size() / 2; ++i) {
        const double y = f.grid->y[i];
        const double expect = term_R(y, t) + term_D(0.0, y, t) + integ.profile().phi_s(y, s);
        worst = std::max(worst, std::fabs(out[i] - expect));
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(Integrator, QRouteAgreesWithWRoute) {
    // The routes differ only by how Δφ is discretized, so their gap is O(dy²).
    const ProblemParams pr = base();
    const ScalingMap map = build_scaling_map(pr, 30.0);
    auto gap = [&](double dy) {
        const auto grid = make_production_grid(pr, 21.0, dy);
        IntegratorSettings sw, sq;
        sw.stop_on_exit = sq.stop_on_exit = false;
        sq.dynamics = Dynamics::QForm;
        Integrator<ScalingMap> iw(map, grid, sw), iq(map, grid, sq);
        std::vector<double> q(grid->size());
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = 1e-4 * std::exp(-grid->y[i] * grid->y[i] / 8.0);
        GridState a{20.0, grid, q, Field::Q};
        GridState b{20.0, grid, iq.w_values(a), Field::W};
        const auto steps = static_cast<int>(std::lround(0.25 / iq.ds()));
        for (int k = 0; k < steps; ++k) {
            iq.step(a, iq.ds());
            iw.step(b, iw.ds());
        }
        const auto qa = iq.perturbation(a);
        const auto qb = iw.perturbation(b);
        double worst = 0.0;
        for (std::size_t i = 0; i < qa.size(); ++i) worst = std::max(worst, std::fabs(qa[i] - qb[i]));
        return worst;
    };
    const double coarse = gap(0.05), fine = gap(0.025);
    EXPECT_LT(coarse, 1e-4);
    EXPECT_GT(coarse / fine, 3.0);
    EXPECT_LT(coarse / fine, 5.0);
}

TEST(Integrator, LinearSpectrum) {
    Fixture f;
    IntegratorSettings set;
    set.dynamics = Dynamics::Linear;
    Integrator<ScalingMap> integ(f.map, f.grid, set);
    for (auto [m, factor] : {std::pair{0, std::exp(1.0)}, {2, 1.0}, {4, std::exp(-1.0)}}) {
        std::vector<double> h(f.grid->size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double y = f.grid->y[i];
            h[i] = m == 0 ? 1.0 : (m == 2 ? y * y - 2.0 : y * y * y * y - 12.0 * y * y + 12.0);
        }
        GridState st{20.0, f.grid, h, Field::Q};
        const int steps = static_cast<int>(std::lround(1.0 / integ.ds()));
        for (int k = 0; k < steps; ++k) integ.step(st, integ.ds());
        std::vector<double> num(h.size()), den(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            num[i] = st.values[i] * h[i];
            den[i] = h[i] * h[i];
        }
        EXPECT_NEAR(f.grid->integrate(num) / f.grid->integrate(den), factor, 1e-4 * factor) << m;
    }
}

TEST(Integrator, ConfigurationErrors) {
    Fixture f;
    auto coarse = std::make_shared<const Grid>(make_grid(GridKind::Radial, 1, 0.1, 120.0));
    EXPECT_THROW(Integrator<ScalingMap>(f.map, coarse, {}), ConfigError);
    IntegratorSettings big;
    big.ds = 0.01;
    EXPECT_THROW(Integrator<ScalingMap>(f.map, f.grid, big), ConfigError);
    IntegratorSettings rare;
    rare.observe_every = 1e-5;
    EXPECT_THROW(Integrator<ScalingMap>(f.map, f.grid, rare), ConfigError);
    Integrator<ScalingMap> integ(f.map, f.grid, {});
    GridState st{20.0, f.grid, std::vector<double>(f.grid->size(), 1.0), Field::W};
    EXPECT_THROW(integ.run(st, 40.0, ShrinkingSetSpec{20.0}), ConfigError);
    GridState wrong{20.0, f.grid, std::vector<double>(f.grid->size(), 0.0), Field::Q};
    EXPECT_THROW(integ.run(wrong, 22.0, ShrinkingSetSpec{20.0}), ConfigError);
}

TEST(Integrator, StepDividesObservationInterval) {
    Fixture f;
    Integrator<ScalingMap> integ(f.map, f.grid, {});
    const double per = 0.05 / integ.ds();
    EXPECT_NEAR(per, std::round(per), 1e-9);
    EXPECT_LE(integ.ds(), stable_step(*f.grid) * (1 + 1e-12));
}

TEST(Integrator, PoisonedStateIsReported) {
    Fixture f;
    IntegratorSettings set;
    set.stop_on_exit = false;
    Integrator<ScalingMap> integ(f.map, f.grid, set);
    std::vector<double> w(f.grid->size(), 1.0);
    w[3] = NAN;
    const auto rec = integ.run(GridState{20.0, f.grid, w, Field::W}, 21.0, ShrinkingSetSpec{20.0});
    EXPECT_TRUE(rec.poisoned);
    EXPECT_FALSE(rec.survived());
    EXPECT_FALSE(rec.poison_report.empty());
}

TEST(Integrator, ProfileStateStaysInSetBriefly) {
    Fixture f;
    Integrator<ScalingMap> integ(f.map, f.grid, {});
    std::vector<double> w(f.grid->size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = integ.profile().phi(f.grid->y[i], 20.0);
    const auto rec = integ.run(GridState{20.0, f.grid, w, Field::W}, 21.0, ShrinkingSetSpec{20.0});
    ASSERT_FALSE(rec.observations.empty());
    EXPECT_NEAR(rec.observations.front().s, 20.0, 1e-12);
    EXPECT_NEAR(rec.observations.front().sup_w_minus_f0, 1.0 / (2.0 * 3.0 * 20.0), 1e-12);
    EXPECT_TRUE(rec.survived());
    EXPECT_EQ(rec.observations.size(), 21u);
}

TEST(ModeOde, ResidualsOfExactSolution) {
    TrajectoryRecord rec;
    for (int i = 0; i <= 40; ++i) {
        Observation o;
        o.s = 20.0 + 0.05 * i;
        o.dec.q0 = 1e-3 * std::exp(o.s - 20.0);
        o.dec.q2 = 5.0 / (o.s * o.s);
        rec.observations.push_back(o);
    }
    // Only the central-difference truncation remains.
    const double h = 0.05;
    for (const auto& r : mode_ode_residuals(rec, 20.0, 22.0)) {
        const double s = r.s;
        const double q0 = 1e-3 * std::exp(s - 20.0);
        EXPECT_NEAR(r.r0, s * s * q0 * (std::sinh(h) / h - 1.0), 1e-12);
        const double d2 = (5.0 / ((s + h) * (s + h)) - 5.0 / ((s - h) * (s - h))) / (2.0 * h) + 10.0 / (s * s * s);
        EXPECT_NEAR(r.r2, s * s * s / std::log(s) * std::fabs(d2), 1e-10);
    }
}

TEST(KernelBounds, ZeroDatumStaysZero) {
    Fixture f;
    const std::vector<double> v(f.grid->size(), 0.0);
    const auto rep = verify_kernel_bounds(f.map, f.grid, v, 21.0, 1.0);
    for (const auto& k : rep.samples) {
        EXPECT_EQ(k.theta_minus, 0.0);
        EXPECT_EQ(k.theta_e, 0.0);
    }
    EXPECT_THROW(verify_kernel_bounds(f.map, f.grid, v, 21.0, 5.0), InvalidParameter);
}

TEST(KernelBounds, FittedConstantsStable) {
    ProblemParams pr = base();
    const auto map = build_scaling_map(pr, 64.0);
    const auto grid = make_production_grid(pr, 62.0, 0.05);
    std::vector<double> fit;
    for (double sigma : {30.0, 60.0}) {
        std::vector<double> v(grid->size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1e-4 * (grid->y[i] * grid->y[i] - 2.0);
        fit.push_back(verify_kernel_bounds(map, grid, v, sigma, 1.0).fitted_c_minus);
    }
    EXPECT_GT(fit[0], 0.0);
    EXPECT_LT(std::max(fit[0], fit[1]) / std::min(fit[0], fit[1]), 2.0);
}

TEST(KernelBounds, OuterDatumDecay) {
    ProblemParams pr = base();
    const auto map = build_scaling_map(pr, 34.0);
    const double sigma = 30.0, rho = 3.0;
    const double edge = pr.cutoff_scale * std::sqrt(sigma);
    // The drift carries data outward along y e^{(s−σ)/2}; the grid must still hold it at σ + ρ*.
    const auto grid = std::make_shared<const Grid>(make_grid(GridKind::Radial, pr.n, 0.05, edge * std::exp(0.5 * rho) + 20.0));
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = grid->y[i] >= edge ? 1e-3 : 0.0;
    const auto rep = verify_kernel_bounds(map, grid, v, sigma, rho);
    const double expected = 1.0 / pr.p;
    EXPECT_GT(rep.theta_e_decay_rate, 0.5 * expected);
    EXPECT_LT(rep.theta_e_decay_rate, 2.0 * expected);
}
