// Command-line front end: scaling, terms, shoot, profile and report.

#include "blowup/blowup.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace blowup;
namespace fs = std::filesystem;

namespace {

struct Common {
    ProblemParams params;
    double dy = 0.05;
    std::string out = "run";
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--p", c.params.p, "Nonlinearity exponent p > 1")->capture_default_str();
    app->add_option("--alpha", c.params.alpha, "Log exponent alpha")->capture_default_str();
    app->add_option("--n", c.params.n, "Space dimension (radial)")->capture_default_str();
    app->add_option("--A", c.params.amplitude, "Shrinking-set size A")->capture_default_str();
    app->add_option("--K", c.params.cutoff_scale, "Cutoff scale K")->capture_default_str();
    app->add_option("--s0", c.params.s0, "Initial similarity time")->capture_default_str();
    app->add_option("--dy", c.dy, "Grid spacing")->capture_default_str();
    app->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
}

json manifest_entry(const fs::path& path, const std::string& what) {
    return {{"file", path.filename().string()}, {"content", what}};
}

json run_scaling(const Common& c, double s_max, double step, json& files) {
    const auto map = build_scaling_map(c.params, s_max, step);
    const fs::path dir(c.out);
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(0.1 / map.step())));
    write_text(dir / "scaling.csv", scaling_csv(map, stride));
    write_text(dir / "scaling_map.json", to_json(map).dump());
    files.push_back(manifest_entry(dir / "scaling.csv", "s, ell, h, h_expansion, ratio_to_kappa"));
    files.push_back(manifest_entry(dir / "scaling_map.json", "tabulated rate map"));
    return {{"s_max", s_max}, {"ratio_to_kappa_at_s_max", map.ratio_to_kappa(s_max)}, {"h_at_s_max", map.h(s_max)}};
}

json run_terms(const Common& c, double s, double q, json& files) {
    PointwiseRate rate(c.params);
    TermContext<PointwiseRate> ctx(rate);
    const auto t = ctx.at(s);
    std::ostringstream os;
    os.precision(17);
    os << "y,phi,V,R,B,D\n";
    const double y_max = 2.0 * c.params.cutoff_scale * std::sqrt(s);
    for (double y = 0.0; y <= y_max + 1e-9; y += c.dy * 10.0) {
        os << y << ',' << t.profile.phi(y, s) << ',' << potential_V(y, t) << ',' << term_R(y, t) << ','
           << term_B(q, y, t) << ',' << term_D(q, y, t) << '\n';
    }
    const fs::path dir(c.out);
    write_text(dir / "terms.csv", os.str());
    files.push_back(manifest_entry(dir / "terms.csv", "y, phi, V, R, B(q), D(q) at one s"));

    json sweeps = json::array();
    for (const auto& sw : all_lemma_sweeps(c.params)) {
        sweeps.push_back({{"name", sw.name},
                          {"s", sw.s_values},
                          {"scaled", sw.scaled},
                          {"fitted_constant", sw.bound.fitted_constant},
                          {"max_later", sw.bound.max_later},
                          {"bounded", sw.pass()}});
    }
    write_text(dir / "lemma_sweeps.json", sweeps.dump(2));
    files.push_back(manifest_entry(dir / "lemma_sweeps.json", "appendix-lemma bound sweeps"));
    return {{"s", s}, {"q", q}, {"h", t.h}, {"remainder_constant", remainder_constant(c.params.p, c.params.n)}};
}

struct ShootOptions {
    double s_target = 0.0;
    std::optional<double> d0;
    double d1 = 0.0;
    bool line = false;
    unsigned threads = 0;
    int polish = 0;
    double lo = -2.0;
    double hi = 2.0;
};

struct ShootOutcome {
    ShotResult best;
    json summary;
};

ShootOutcome run_shoot(const Common& c, const ShootOptions& so, const ScalingMap& map, json& files) {
    const auto& pr = c.params;
    const double target = so.s_target > 0.0 ? so.s_target : pr.s0 + 15.0;
    const auto kind = so.line ? GridKind::Line : GridKind::Radial;
    ShootingSetup<ScalingMap> setup{&map, make_production_grid(pr, target, c.dy, kind), {}};
    setup.settings.dy = c.dy;
    const fs::path dir(c.out);
    ShootOutcome out;
    if (so.d0) {
        out.best = shoot(setup, ShotConfig{*so.d0, so.d1, pr}, target);
    } else {
        SearchOptions opt;
        opt.threads = so.threads;
        opt.polish_levels = so.polish;
        opt.lo = so.lo;
        opt.hi = so.hi;
        const auto res = so.line ? search_general(setup, pr, target, opt) : search(setup, pr, target, opt);
        out.best = res.best;
        write_text(dir / "bracket_history.csv", bracket_history_csv(res.history));
        files.push_back(manifest_entry(dir / "bracket_history.csv", "one row per probe"));
        out.summary["search"] = {{"probes", res.probes},
                                 {"reached_target", res.reached_target},
                                 {"final_lo", res.final_lo},
                                 {"final_hi", res.final_hi}};
    }
    const auto& rec = out.best.record;
    write_text(dir / "trajectory.csv", trajectory_csv(rec));
    write_text(dir / "checkpoint.json", checkpoint_to_json(rec.final_state).dump());
    files.push_back(manifest_entry(dir / "trajectory.csv", "decomposition and ratios per observation"));
    files.push_back(manifest_entry(dir / "checkpoint.json", "final state"));
    out.summary["trajectory"] = trajectory_summary(rec);
    out.summary["d0"] = out.best.shot.d0;
    out.summary["d1"] = out.best.shot.d1;
    if (out.best.report.anomaly) out.summary["anomaly"] = out.best.report.anomaly_note;
    try {
        json res = json::array();
        for (const auto& r : theorem_residual(rec)) res.push_back({r.s, r.scaled});
        out.summary["scaled_residual"] = res;
    } catch (const std::invalid_argument& e) {
        out.summary["scaled_residual"] = {{"skipped", e.what()}};
    }
    return out;
}

json run_profile(const Common& c, const GridState& state, const ScalingMap& map, double k0, int levels,
                 json& files) {
    Integrator<ScalingMap> integ(map, state.grid, IntegratorSettings{});
    const auto w = integ.w_values(state);
    const double s = state.s;
    const double x_base = k0 * std::sqrt(s) * std::exp(-0.5 * s);
    std::vector<double> xs;
    for (double f = 1.0; f <= std::pow(2.0, levels) + 1e-9; f *= std::pow(2.0, 0.25)) xs.push_back(x_base * f);
    auto rep = final_profile(state, w, map, xs, c.params.s0, k0);
    rep.dyadic = dyadic_checks(state, w, map, x_base, levels, c.params.s0, k0);
    for (const auto& d : rep.dyadic) rep.max_dyadic_error = std::max(rep.max_dyadic_error, d.rel_error);
    const fs::path dir(c.out);
    write_text(dir / "profile.csv", profile_csv(rep));
    files.push_back(manifest_entry(dir / "profile.csv", "x, z, u_star, formula_ratio, skip reason"));
    return profile_summary(rep);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blowup for the log-perturbed semilinear heat equation in similarity variables"};
    app.require_subcommand(1);

    Common c;
    double s_max = 40.0, step = 1e-3, s_terms = 40.0, q_terms = 0.0, k0 = 6.0, y_max_profile = 0.0;
    int levels = 3;
    ShootOptions so;
    std::string checkpoint;

    auto* sc = app.add_subcommand("scaling", "Tabulate ln psi1(s) and h(s)");
    add_common(sc, c);
    sc->add_option("--s-max", s_max, "Last tabulated s")->capture_default_str();
    sc->add_option("--step", step, "RK4 step")->capture_default_str();

    auto* tm = app.add_subcommand("terms", "Evaluate V, R, B, D at one s and run the lemma sweeps");
    add_common(tm, c);
    tm->add_option("--s", s_terms, "Similarity time")->capture_default_str();
    tm->add_option("--q", q_terms, "Perturbation value for B and D")->capture_default_str();

    auto add_shoot = [&](CLI::App* sub) {
        sub->add_option("--s-target", so.s_target, "Survival target (default s0+15)");
        sub->add_option("--d0", so.d0, "Single shot at this d0 instead of a search");
        sub->add_option("--d1", so.d1, "Odd coefficient for a single line-grid shot");
        sub->add_flag("--line", so.line, "Line grid with (d0, d1) search (n = 1)");
        sub->add_option("--threads", so.threads, "Concurrent probes per level (0: all cores)");
        sub->add_option("--polish", so.polish, "Extra bisection levels after the first survivor");
        sub->add_option("--lo", so.lo, "Lower end of the d0 bracket");
        sub->add_option("--hi", so.hi, "Upper end of the d0 bracket");
    };
    auto* sh = app.add_subcommand("shoot", "Search d0 (or run one shot) and record the trajectory");
    add_common(sh, c);
    add_shoot(sh);

    auto* pf = app.add_subcommand("profile", "Final profile u*(x) from a checkpoint");
    add_common(pf, c);
    pf->add_option("--checkpoint", checkpoint, "checkpoint.json written by shoot")->required();
    pf->add_option("--k0", k0, "Matching constant for t0(x)")->capture_default_str();
    pf->add_option("--levels", levels, "Dyadic levels")->capture_default_str();

    auto* rp = app.add_subcommand("report", "Scaling, search, profile and lemma sweeps in one run directory");
    add_common(rp, c);
    add_shoot(rp);
    rp->add_option("--k0", k0, "Matching constant for t0(x)")->capture_default_str();
    rp->add_option("--profile-ymax", y_max_profile, "Grid half-width of the profile rerun (0: automatic)");

    CLI11_PARSE(app, argc, argv);

    try {
        c.params.validate();
        json files = json::array();
        json summary;
        summary["params"] = to_json(c.params);
        if (sc->parsed()) {
            summary["scaling"] = run_scaling(c, s_max, step, files);
        } else if (tm->parsed()) {
            summary["terms"] = run_terms(c, s_terms, q_terms, files);
        } else if (sh->parsed()) {
            const double target = so.s_target > 0.0 ? so.s_target : c.params.s0 + 15.0;
            const auto map = build_scaling_map(c.params, target + 1.0);
            summary["shoot"] = run_shoot(c, so, map, files).summary;
        } else if (pf->parsed()) {
            const auto state = checkpoint_from_json(read_json(checkpoint));
            const auto map = build_scaling_map(c.params, state.s + 1.0);
            summary["profile"] = run_profile(c, state, map, k0, levels, files);
        } else if (rp->parsed()) {
            const auto t0 = std::chrono::steady_clock::now();
            const double target = so.s_target > 0.0 ? so.s_target : c.params.s0 + 15.0;
            const auto map = build_scaling_map(c.params, target + 1.0);
            summary["scaling"] = run_scaling(c, target + 1.0, 1e-3, files);
            summary["terms"] = run_terms(c, target, 0.0, files);
            auto shot = run_shoot(c, so, map, files);
            summary["shoot"] = shot.summary;
            if (shot.best.record.survived()) {
                // Rerun the winner on a grid wide enough for the annulus z ∈ [k0, 2^levels k0].
                const double y_max = y_max_profile > 0.0
                                         ? y_max_profile
                                         : std::max(2.0 * c.params.cutoff_scale * std::sqrt(target) + 5.0,
                                                    8.0 * k0 * std::sqrt(target) + 10.0);
                auto grid = std::make_shared<const Grid>(make_grid(GridKind::Radial, c.params.n, c.dy, y_max));
                ShootingSetup<ScalingMap> setup{&map, grid, {}};
                const auto wide = shoot(setup, shot.best.shot, target);
                if (wide.record.survived()) {
                    summary["profile"] = run_profile(c, wide.record.final_state, map, k0, 3, files);
                } else {
                    summary["profile"] = {{"skipped", "wide-grid rerun exited at " + std::to_string(wide.report.exit_s)}};
                }
            }
            summary["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        const fs::path dir(c.out);
        summary["files"] = files;
        write_text(dir / "manifest.json", summary.dump(2));
        std::cout << summary.dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
