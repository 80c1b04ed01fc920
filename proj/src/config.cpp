#include "qsum/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "qsum/errors.hpp"
#include "qsum/io.hpp"
#include "qsum/series.hpp"

namespace qsum {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, std::vector<std::string>& errs) {
    if (!j.is_object()) {
        errs.push_back(where + ": expected an object");
        return;
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) errs.push_back(where + ": unknown key '" + it.key() + "'");
    for (const auto& k : required)
        if (!j.contains(k)) errs.push_back(where + ": missing key '" + k + "'");
}

CPoly parse_poly(const json& j, const std::string& where, std::vector<std::string>& errs) {
    std::vector<cd> coeffs;
    if (!j.is_array()) {
        errs.push_back(where + ": polynomial must be an array of [re, im] pairs");
        return CPoly();
    }
    for (const auto& c : j) {
        if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
            errs.push_back(where + ": coefficient must be [re, im]");
            return CPoly();
        }
        coeffs.emplace_back(c[0].get<double>(), c[1].get<double>());
    }
    return CPoly(coeffs);
}

Profile parse_profile_generator(const json& j, const MGrid& grid, const std::string& where,
                                std::vector<std::string>& errs) {
    require_keys(j, where, {"kind", "amp", "width", "power", "ell", "j"}, {"kind", "amp"}, errs);
    Profile p(grid.size(), cd(0.0, 0.0));
    if (!errs.empty() && !j.contains("kind")) return p;
    const std::string kind = j.value("kind", "gaussian");
    const double amp = j.value("amp", 0.0);
    if (kind == "gaussian") {
        const double width = j.value("width", 1.0);
        if (!(width > 0.0)) errs.push_back(where + ": gaussian width must be positive");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double m = grid.nodes[i] / width;
            p[i] = amp * std::exp(-m * m);
        }
    } else if (kind == "rational_decay") {
        const double power = j.value("power", 4.0);
        if (!(power > 1.0)) errs.push_back(where + ": rational_decay power must exceed 1");
        for (std::size_t i = 0; i < grid.size(); ++i)
            p[i] = amp / std::pow(1.0 + grid.nodes[i] * grid.nodes[i], power / 2.0);
    } else {
        errs.push_back(where + ": unknown profile kind '" + kind + "'");
    }
    return p;
}

}  // namespace

int RunConfig::grid_L() const {
    if (grids.L > 0) return grids.L;
    return 16 * problem.grid_alignment();
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config parse error: ") + e.what());
    }
    std::vector<std::string> errs;
    require_keys(j, "config", {"problem", "grids", "covering", "solver", "verify", "out_dir"},
                 {"problem", "out_dir"}, errs);
    if (!errs.empty()) {
        std::string msg = "config schema violations:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw SchemaError(msg);
    }

    RunConfig cfg;
    const json& jp = j.at("problem");
    require_keys(jp, "problem",
                 {"q", "k1", "k2", "Q", "R_D1", "R_D2", "R_ell", "d_D1", "d_D2", "d_ell",
                  "delta_ell", "Delta_ell", "p1", "C_data", "forcing", "beta", "beta_prime",
                  "mu", "eps0", "r_T", "T_direction", "T_half_aperture", "alpha", "nu", "rho",
                  "delta", "delta_tilde", "D"},
                 {"q", "k1", "k2", "Q", "R_D1", "R_D2", "R_ell", "d_D1", "d_D2", "d_ell",
                  "delta_ell", "Delta_ell", "p1", "forcing", "beta", "mu", "eps0", "r_T", "D"},
                 errs);

    // grids first: profile generators sample onto the m-grid
    if (j.contains("grids"))
        require_keys(j.at("grids"), "grids",
                     {"M_max", "n_m", "L", "tau1_s_min", "tau1_s_max", "tau2_s_min"}, {}, errs);
    if (!errs.empty()) {
        std::string msg = "config schema violations:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw SchemaError(msg);
    }
    if (j.contains("grids")) {
        const json& jg = j.at("grids");
        cfg.grids.M_max = jg.value("M_max", cfg.grids.M_max);
        cfg.grids.n_m = jg.value("n_m", cfg.grids.n_m);
        cfg.grids.L = jg.value("L", cfg.grids.L);
        cfg.grids.tau1_s_min = jg.value("tau1_s_min", cfg.grids.tau1_s_min);
        cfg.grids.tau1_s_max = jg.value("tau1_s_max", cfg.grids.tau1_s_max);
        cfg.grids.tau2_s_min = jg.value("tau2_s_min", cfg.grids.tau2_s_min);
    }

    ProblemSpec& s = cfg.problem;
    const double q = jp.value("q", 0.0);
    if (!(q > 1.0)) errs.push_back("problem.q: q must exceed 1");
    const int k1 = jp.value("k1", 0), k2 = jp.value("k2", 0);
    if (!(1 <= k1 && k1 < k2)) errs.push_back("problem: need 1 <= k1 < k2");
    if (!errs.empty()) {
        std::string msg = "config schema violations:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw SchemaError(msg);
    }
    s.frame = QFrame(q, k1, k2);
    s.Q = parse_poly(jp.at("Q"), "problem.Q", errs);
    s.R_D1 = parse_poly(jp.at("R_D1"), "problem.R_D1", errs);
    s.R_D2 = parse_poly(jp.at("R_D2"), "problem.R_D2", errs);
    for (const auto& rp : jp.at("R_ell"))
        s.R_ell.push_back(parse_poly(rp, "problem.R_ell", errs));
    s.d_D1 = jp.at("d_D1").get<int>();
    s.d_D2 = jp.at("d_D2").get<int>();
    s.d_ell = jp.at("d_ell").get<std::vector<int>>();
    s.delta_ell = jp.at("delta_ell").get<std::vector<int>>();
    s.Delta_ell = jp.at("Delta_ell").get<std::vector<int>>();
    s.p1 = jp.at("p1").get<int>();
    s.beta = jp.at("beta").get<double>();
    s.beta_prime = jp.value("beta_prime", s.beta / 2.0);
    s.mu = jp.at("mu").get<double>();
    s.eps0 = jp.at("eps0").get<double>();
    s.r_T = jp.at("r_T").get<double>();
    s.T_direction = jp.value("T_direction", 0.0);
    s.T_half_aperture = jp.value("T_half_aperture", 0.3);
    s.alpha = jp.value("alpha", 0.0);
    s.nu = jp.value("nu", -1.0);
    s.rho = jp.value("rho", 0.5);
    s.delta = jp.value("delta", s.rho / 2.0);
    s.delta_tilde = jp.value("delta_tilde", 0.1);
    s.D = jp.at("D").get<int>();

    s.mgrid = make_mgrid(s.beta, s.mu, cfg.grids.M_max, cfg.grids.n_m);

    s.C_data.assign(std::max(0, s.D - 1), std::vector<Profile>(s.p1 + 1));
    if (jp.contains("C_data")) {
        for (const auto& cj : jp.at("C_data")) {
            require_keys(cj, "problem.C_data[]", {"ell", "j", "kind", "amp", "width", "power"},
                         {"ell", "j", "kind", "amp"}, errs);
            if (!errs.empty()) break;
            int ell = cj.at("ell").get<int>(), jj = cj.at("j").get<int>();
            if (ell < 1 || ell > s.D - 1 || jj < 0 || jj > s.p1) {
                errs.push_back("problem.C_data[]: ell/j out of range");
                break;
            }
            s.C_data[ell - 1][jj] = parse_profile_generator(cj, s.mgrid, "problem.C_data[]", errs);
        }
    }

    const json& jf = jp.at("forcing");
    require_keys(jf, "problem.forcing", {"kind", "T0", "profile", "n_stored", "F"},
                 {"kind"}, errs);
    const std::string fkind = jf.value("kind", "geometric");
    if (fkind == "geometric") {
        s.forcing.kind = ForcingSpec::Kind::geometric;
        if (jf.contains("T0") && jf.at("T0").is_array()) {
            auto t = jf.at("T0").get<std::vector<double>>();
            if (t.size() != 2) errs.push_back("problem.forcing.T0: expected [re, im]");
            else s.forcing.T0 = cd(t[0], t[1]);
        } else {
            s.forcing.T0 = cd(jf.value("T0", 1.0), 0.0);
        }
        if (!(std::abs(s.forcing.T0) > 0.0)) errs.push_back("problem.forcing.T0 must be nonzero");
        if (jf.contains("profile"))
            s.forcing.g = parse_profile_generator(jf.at("profile"), s.mgrid,
                                                  "problem.forcing.profile", errs);
        else
            errs.push_back("problem.forcing: geometric kind requires 'profile'");
        const int n_stored = jf.value("n_stored", 14);
        s.forcing.F.resize(n_stored);
        for (int n = 0; n < n_stored; ++n) {
            cd scale = std::pow(cd(1.0, 0.0) / s.forcing.T0, n) *
                       s.frame.qpow(borel_exponent(n, Rational(s.frame.k1)));
            s.forcing.F[n] = s.forcing.g;
            for (auto& v : s.forcing.F[n]) v *= scale;
        }
    } else if (fkind == "polynomial") {
        s.forcing.kind = ForcingSpec::Kind::polynomial;
        if (!jf.contains("F")) {
            errs.push_back("problem.forcing: polynomial kind requires 'F' generators");
        } else {
            for (const auto& fj : jf.at("F"))
                s.forcing.F.push_back(
                    parse_profile_generator(fj, s.mgrid, "problem.forcing.F[]", errs));
        }
        s.forcing.g.assign(s.mgrid.size(), cd(0.0, 0.0));
    } else {
        errs.push_back("problem.forcing.kind: expected 'geometric' or 'polynomial'");
    }

    if (j.contains("covering")) {
        const json& jc = j.at("covering");
        require_keys(jc, "covering", {"varsigma", "overlap_frac", "delta_tilde", "directions_deg"},
                     {}, errs);
        cfg.covering.varsigma = jc.value("varsigma", cfg.covering.varsigma);
        cfg.covering.overlap_frac = jc.value("overlap_frac", cfg.covering.overlap_frac);
        cfg.covering.delta_tilde = jc.value("delta_tilde", cfg.covering.delta_tilde);
        if (jc.contains("directions_deg"))
            cfg.covering.directions_deg = jc.at("directions_deg").get<std::vector<double>>();
    }
    if (j.contains("solver")) {
        const json& js = j.at("solver");
        require_keys(js, "solver", {"tol", "max_iter", "pi_tol", "theta_tol", "quad_tol"}, {},
                     errs);
        cfg.solver.tol = js.value("tol", cfg.solver.tol);
        cfg.solver.max_iter = js.value("max_iter", cfg.solver.max_iter);
        cfg.solver.pi_tol = js.value("pi_tol", cfg.solver.pi_tol);
        cfg.solver.theta_tol = js.value("theta_tol", cfg.solver.theta_tol);
        cfg.solver.quad_tol = js.value("quad_tol", cfg.solver.quad_tol);
        for (double t : {cfg.solver.tol, cfg.solver.pi_tol, cfg.solver.theta_tol,
                         cfg.solver.quad_tol})
            if (!(t > 0.0)) errs.push_back("solver: tolerances must be positive");
    }
    if (j.contains("verify")) {
        const json& jv = j.at("verify");
        require_keys(jv, "verify",
                     {"eps_magnitudes", "N_range", "probes", "eps_ref_mag", "n_eps_expansion",
                      "noise_floor_factor", "residual_samples"},
                     {}, errs);
        if (jv.contains("eps_magnitudes"))
            cfg.verify.eps_magnitudes = jv.at("eps_magnitudes").get<std::vector<double>>();
        if (jv.contains("N_range")) {
            auto r = jv.at("N_range").get<std::vector<int>>();
            if (r.size() != 2) errs.push_back("verify.N_range: expected [N_min, N_max]");
            else { cfg.verify.N_min = r[0]; cfg.verify.N_max = r[1]; }
        }
        if (jv.contains("probes")) {
            for (const auto& pj : jv.at("probes")) {
                require_keys(pj, "verify.probes[]", {"re_t", "im_t", "re_z", "im_z"},
                             {"re_t", "im_t", "re_z", "im_z"}, errs);
                if (!errs.empty()) break;
                cfg.verify.probes.emplace_back(
                    cd(pj.at("re_t").get<double>(), pj.at("im_t").get<double>()),
                    cd(pj.at("re_z").get<double>(), pj.at("im_z").get<double>()));
            }
        }
        cfg.verify.eps_ref_mag = jv.value("eps_ref_mag", cfg.verify.eps_ref_mag);
        cfg.verify.n_eps_expansion = jv.value("n_eps_expansion", cfg.verify.n_eps_expansion);
        cfg.verify.noise_floor_factor =
            jv.value("noise_floor_factor", cfg.verify.noise_floor_factor);
        cfg.verify.residual_samples = jv.value("residual_samples", cfg.verify.residual_samples);
    }
    cfg.out_dir = j.at("out_dir").get<std::string>();

    if (!errs.empty()) {
        std::string msg = "config schema violations:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw SchemaError(msg);
    }
    cfg.raw_json = j.dump(2);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path));
}

std::string bundled_config_json() {
    json j;
    j["problem"] = {
        {"q", 32.0},
        {"k1", 1},
        {"k2", 2},
        {"Q", {{4.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}}},
        {"R_D1", {{2.2, 0.0}, {0.8, 0.0}, {0.5, 0.0}}},
        {"R_D2", {{2.0, 0.0}, {0.7, 0.0}, {0.45, 0.0}}},
        {"R_ell", {{{1.0, 0.0}, {1.0, 0.0}}, {{1.0, 0.0}, {0.0, 0.0}, {0.5, 0.0}}}},
        {"d_D1", 5},
        {"d_D2", 11},
        {"d_ell", {1, 2}},
        {"delta_ell", {1, 2}},
        {"Delta_ell", {2, 2}},
        {"p1", 2},
        {"C_data",
         {{{"ell", 1}, {"j", 0}, {"kind", "gaussian"}, {"amp", 5e-4}, {"width", 1.0}},
          {{"ell", 1}, {"j", 1}, {"kind", "gaussian"}, {"amp", 3e-4}, {"width", 1.5}},
          {{"ell", 2}, {"j", 2}, {"kind", "gaussian"}, {"amp", 4e-4}, {"width", 0.8}}}},
        {"forcing",
         {{"kind", "geometric"},
          {"T0", 2.0},
          {"n_stored", 16},
          {"profile", {{"kind", "gaussian"}, {"amp", 1.0}, {"width", 1.0}}}}},
        {"beta", 1.0},
        {"beta_prime", 0.5},
        {"mu", 4.0},
        {"eps0", 0.8},
        {"r_T", 0.5},
        {"T_direction", 0.0},
        {"T_half_aperture", 0.3},
        {"alpha", 0.0},
        {"nu", -1.0},
        {"rho", 0.5},
        {"delta", 0.25},
        {"delta_tilde", 0.1},
        {"D", 3}};
    j["grids"] = {{"M_max", 30.0}, {"n_m", 301}, {"L", 32},
                  {"tau1_s_min", -16.0}, {"tau1_s_max", 26.5}, {"tau2_s_min", -34.0}};
    j["covering"] = {{"varsigma", 4},
                     {"overlap_frac", 0.2},
                     {"delta_tilde", 0.1},
                     {"directions_deg", {14.85, 17.85, 180.0, 311.0}}};
    j["solver"] = {{"tol", 1e-11}, {"max_iter", 40}, {"pi_tol", 1e-14}, {"theta_tol", 1e-12},
                   {"quad_tol", 1e-10}};
    j["verify"] = {
        {"eps_magnitudes", {0.60, 0.35, 0.20, 0.11, 0.06, 0.034, 0.019, 0.010, 0.0055, 0.0030,
                            0.0017, 0.00092, 0.00060}},
        {"N_range", {0, 8}},
        {"probes",
         {{{"re_t", 0.30}, {"im_t", 0.02}, {"re_z", 0.15}, {"im_z", 0.0}},
          {{"re_t", 0.42}, {"im_t", -0.03}, {"re_z", -0.3}, {"im_z", 0.1}}}},
        {"eps_ref_mag", 0.3},
        {"n_eps_expansion", 10},
        {"noise_floor_factor", 10.0},
        {"residual_samples", 10}};
    j["out_dir"] = "runs/bundled";
    return j.dump(2) + "\n";
}

}  // namespace qsum
