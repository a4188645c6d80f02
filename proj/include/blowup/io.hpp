#pragma once

// JSON / CSV serialization of maps, trajectories, checkpoints and profiles.

#include "blowup/integrator.hpp"
#include "blowup/reconstruction.hpp"
#include "blowup/scaling.hpp"
#include "blowup/shooting.hpp"
#include "blowup/spectral.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace blowup {

using json = nlohmann::json;

inline json to_json(const ProblemParams& p) {
    return {{"p", p.p}, {"alpha", p.alpha}, {"n", p.n}, {"A", p.amplitude}, {"K", p.cutoff_scale}, {"s0", p.s0}};
}

inline ProblemParams params_from_json(const json& j) {
    ProblemParams p;
    p.p = j.at("p").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.n = j.at("n").get<int>();
    p.amplitude = j.at("A").get<double>();
    p.cutoff_scale = j.at("K").get<double>();
    p.s0 = j.at("s0").get<double>();
    p.validate();
    return p;
}

/// {params, s, ell, h}.
inline json to_json(const ScalingMap& m) {
    return {{"params", to_json(m.params())}, {"s", m.s_grid()}, {"ell", m.ell_table()}, {"h", m.h_table()}};
}

inline ScalingMap scaling_map_from_json(const json& j) {
    return ScalingMap(params_from_json(j.at("params")), j.at("s").get<std::vector<double>>(),
                      j.at("ell").get<std::vector<double>>(), j.at("h").get<std::vector<double>>());
}

/// Columns s, ell, h, h_expansion, ratio_to_kappa at every `stride`-th table row.
inline std::string scaling_csv(const ScalingMap& m, std::size_t stride = 1) {
    std::ostringstream os;
    os.precision(17);
    os << "s,ell,h,h_expansion,ratio_to_kappa\n";
    const auto& s = m.s_grid();
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t i = 0; i < s.size(); i += stride) {
        os << s[i] << ',' << m.ell_table()[i] << ',' << m.h_table()[i] << ',' << h_expansion(s[i], m.params()) << ','
           << rate_ratio_to_kappa(s[i], m.ell_table()[i], m.params()) << '\n';
    }
    return os.str();
}

/// Checkpoint {s, y_nodes, w_values}; a q-route state is converted by the caller.
inline json checkpoint_to_json(const GridState& st) {
    return {{"s", st.s},
            {"y_nodes", st.grid->y},
            {"w_values", st.values},
            {"field", st.field == Field::W ? "w" : "q"},
            {"n", st.grid->n}};
}

inline GridState checkpoint_from_json(const json& j) {
    const auto y = j.at("y_nodes").get<std::vector<double>>();
    if (y.size() < 3) throw InvalidParameter("checkpoint: need at least 3 nodes");
    const double dy = y[1] - y[0];
    const bool line = y.front() < 0.0;
    const int n = j.value("n", 1);
    GridState st;
    st.s = j.at("s").get<double>();
    st.grid = std::make_shared<const Grid>(make_grid(line ? GridKind::Line : GridKind::Radial, n, dy, y.back()));
    if (st.grid->size() != y.size()) throw InvalidParameter("checkpoint: node layout is not a uniform grid");
    st.values = j.at("w_values").get<std::vector<double>>();
    if (st.values.size() != y.size()) throw InvalidParameter("checkpoint: value count mismatch");
    st.field = j.value("field", std::string("w")) == "q" ? Field::Q : Field::W;
    return st;
}

inline std::string trajectory_csv(const TrajectoryRecord& rec) {
    std::ostringstream os;
    os.precision(17);
    os << decomposition_csv_header()
       << ",ratio_q0,ratio_q1,ratio_q2,ratio_qminus,ratio_qe,sup_w_minus_f0,w_center,wbar0,wbar2\n";
    for (const auto& o : rec.observations) {
        os << decomposition_csv_row(o.dec, o.membership);
        for (double r : o.membership.ratios) os << ',' << r;
        os << ',' << o.sup_w_minus_f0 << ',' << o.w_center << ',' << o.wbar0 << ',' << o.wbar2 << '\n';
    }
    return os.str();
}

inline json exit_to_json(const TrajectoryRecord& rec) {
    json j;
    j["survived"] = rec.survived();
    j["exited"] = rec.exit.exited;
    if (rec.exit.exited) {
        j["exit_s"] = rec.exit.s;
        j["violator"] = std::string(component_name(rec.exit.violator));
        j["sign"] = rec.exit.sign;
        j["q0_sign"] = rec.exit.q0_sign;
    }
    j["poisoned"] = rec.poisoned;
    if (rec.poisoned) {
        j["poison_report"] = rec.poison_report;
        j["last_valid_s"] = rec.last_valid_s;
    }
    return j;
}

inline json trajectory_summary(const TrajectoryRecord& rec) {
    json j;
    j["params"] = to_json(rec.params);
    j["dynamics"] = std::string(dynamics_name(rec.settings.dynamics));
    j["s_start"] = rec.s_start;
    j["s_max"] = rec.s_max;
    j["ds"] = rec.ds;
    j["observations"] = rec.observations.size();
    j["exit"] = exit_to_json(rec);
    if (!rec.observations.empty()) {
        const double lo = rec.s_start + 2.0;
        const double hi = rec.exit_or_end();
        double m0 = 0.0, m2 = 0.0;
        for (const auto& r : mode_ode_residuals(rec, lo, hi)) {
            m0 = std::max(m0, r.r0);
            m2 = std::max(m2, r.r2);
        }
        j["fitted"] = {{"mode_ode_q0", m0}, {"mode_ode_q2", m2}, {"center_tracking", center_tracking_constant(rec)}};
    }
    return j;
}

inline std::string profile_csv(const ProfileReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << "x,z,u_star,formula_ratio,used,skip_reason\n";
    for (const auto& s : rep.samples) {
        os << s.x << ',' << s.z << ',' << s.u_star << ',' << s.formula_ratio << ',' << (s.used ? 1 : 0) << ",\""
           << s.skip_reason << "\"\n";
    }
    return os.str();
}

inline json profile_summary(const ProfileReport& rep) {
    json d = json::array();
    for (const auto& c : rep.dyadic)
        d.push_back({{"x", c.x}, {"measured", c.measured}, {"predicted", c.predicted}, {"rel_error", c.rel_error}});
    return {{"s_final", rep.s_final},
            {"k0", rep.k0},
            {"fitted_slope", rep.fitted_slope},
            {"expected_slope", rep.expected_slope},
            {"dyadic", d},
            {"max_dyadic_error", rep.max_dyadic_error},
            {"ratio_trend_toward_one", rep.ratio_trend_toward_one}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return json::parse(in);
}

} // namespace blowup
