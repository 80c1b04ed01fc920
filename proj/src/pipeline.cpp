#include "qsum/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <thread>

#include "json.hpp"
#include "qsum/errors.hpp"
#include "qsum/io.hpp"
#include "qsum/laplace.hpp"

namespace qsum {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> v = {Stage::validate, Stage::formal, Stage::borel1,
                                         Stage::accel,    Stage::borel2, Stage::sum,
                                         Stage::verify};
    return v;
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::validate: return "validate";
        case Stage::formal: return "formal";
        case Stage::borel1: return "borel1";
        case Stage::accel: return "accel";
        case Stage::borel2: return "borel2";
        case Stage::sum: return "sum";
        case Stage::verify: return "verify";
    }
    return "?";
}

std::optional<Stage> stage_from_name(const std::string& name) {
    for (Stage s : all_stages())
        if (stage_name(s) == name) return s;
    return std::nullopt;
}

std::string RunManifest::to_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["ok"] = ok;
    json st = json::array();
    for (const auto& s : stages)
        st.push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail},
                      {"volatile_wall_ms", s.wall_ms}});
    j["stages"] = st;
    json ar = json::array();
    for (const auto& [p, c] : artifacts) ar.push_back({{"path", p}, {"checksum", c}});
    j["artifacts"] = ar;
    return j.dump(2) + "\n";
}

std::string RunManifest::canonical_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["ok"] = ok;
    json st = json::array();
    for (const auto& s : stages)
        st.push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
    j["stages"] = st;
    json ar = json::array();
    for (const auto& [p, c] : artifacts) ar.push_back({{"path", p}, {"checksum", c}});
    j["artifacts"] = ar;
    return j.dump(2) + "\n";
}

cd eps_ref_for(const RunConfig& cfg, int p) {
    const double arg = 2.0 * M_PI * p / cfg.covering.varsigma;
    return std::polar(cfg.verify.eps_ref_mag, arg);
}

namespace {

int thread_budget() {
    if (const char* env = std::getenv("QSUM_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 4u));
}

// shared state across stages of one invocation
struct DirectionData {
    TauGrid g1, g2;
    GridFunction psi1, psi2;
    std::optional<BorelContext> ctx1, ctx2;
    std::optional<BorelSolution> w1_ref, w2_ref;  // at the reference eps
};

struct State {
    const RunConfig& cfg;
    ProblemSpec spec;  // owned copy (contexts point into it)
    GoodCovering covering;
    AssociatedFamily family;
    std::vector<DirectionData> dirs;
    RunManifest manifest;
    // cache of swept solutions: key (p, eps-bits)
    std::map<std::pair<int, std::pair<double, double>>, SectorialSolution> sweep_cache;

    explicit State(const RunConfig& c) : cfg(c), spec(c.problem) {}

    fs::path out(const std::string& rel) const { return cfg.out_dir / rel; }

    void emit(const std::string& rel, const std::string& content) {
        write_text_file(out(rel), content);
        manifest.artifacts.emplace_back(rel, hex64(fnv1a64(content)));
    }

    void require_artifact(const std::string& rel, const std::string& needed_stage) {
        if (!fs::exists(out(rel)))
            throw StageError("requires " + needed_stage + " artifact (" + rel + ")");
    }
};

std::string fmt_cd(cd v) { return fmt_double(v.real()) + "," + fmt_double(v.imag()); }

json cert_json(const BoundCertificate& c) {
    return {{"M1", c.M1}, {"M2", c.M2}, {"C_P", c.C_P}, {"r_QR", c.r_QR},
            {"worst_tau", c.worst_tau}, {"worst_m", c.worst_m}};
}

void build_geometry(State& st) {
    st.covering = build_good_covering(st.cfg.covering.varsigma, st.spec.eps0,
                                      st.cfg.covering.overlap_frac);
    std::vector<RootSet> roots = {build_rootset(st.spec, 1), build_rootset(st.spec, 2)};
    DirectionOptions opts;
    if (!st.cfg.covering.directions_deg.empty()) {
        std::vector<double> rad;
        for (double d : st.cfg.covering.directions_deg) rad.push_back(d * M_PI / 180.0);
        opts.overrides = rad;
    }
    st.family = choose_directions(st.spec, st.covering, roots, opts);
}

void build_direction(State& st, int p) {
    if (st.dirs.empty()) st.dirs.resize(st.family.varsigma());
    DirectionData& dd = st.dirs[p];
    if (dd.ctx1) return;
    const double dir = st.family.directions[p];
    dd.g1 = make_level_grid(st.spec, dir, st.cfg.grids.tau1_s_min, st.cfg.grids.tau1_s_max,
                            st.cfg.grid_L());
    dd.g2 = make_level2_grid(st.spec, dir, st.cfg.grids.tau2_s_min, st.cfg.grid_L());
    dd.psi1 = build_psi_k1(st.spec, dd.g1);
    dd.ctx1 = make_context(st.spec, 1, dd.g1, dd.psi1, eps_ref_for(st.cfg, p));
}

void build_accel(State& st, int p) {
    DirectionData& dd = st.dirs[p];
    if (dd.ctx2) return;
    dd.psi2 = build_psi_k2(st.spec, dd.g1, dd.g2, st.cfg.solver.quad_tol);
    dd.ctx2 = make_context(st.spec, 2, dd.g2, dd.psi2, eps_ref_for(st.cfg, p));
}

SectorialSolution solve_direction(State& st, int p, cd eps) {
    DirectionData& dd = st.dirs[p];
    BorelContext c1 = *dd.ctx1;
    c1.eps = eps;
    BorelSolution w1 = solve_w(c1, st.cfg.solver.tol, st.cfg.solver.max_iter);
    BorelContext c2 = *dd.ctx2;
    c2.eps = eps;
    BorelSolution w2 = solve_w2_banded(c2, w1.w, st.cfg.solver.tol, st.cfg.solver.max_iter);
    return make_sectorial(st.spec, p, st.family.directions[p], eps, std::move(w2.w), dd.psi2,
                          st.cfg.solver.quad_tol);
}

const SectorialSolution& swept_solution(State& st, int p, cd eps) {
    auto key = std::make_pair(p, std::make_pair(eps.real(), eps.imag()));
    auto it = st.sweep_cache.find(key);
    if (it != st.sweep_cache.end()) return it->second;
    auto [pos, _] = st.sweep_cache.emplace(key, solve_direction(st, p, eps));
    return pos->second;
}

// ---- stages ----

void stage_validate(State& st) {
    auto rep = validate_assumptions(st.spec);
    auto forcing = build_forcing(st.spec);
    json j;
    j["pass"] = rep.pass();
    json items = json::array();
    for (const auto& it : rep.items)
        items.push_back({{"name", it.name}, {"slack", it.slack}, {"pass", it.pass}});
    j["assumptions"] = items;
    j["mgrid_selftest_error"] = st.spec.mgrid.quad_selftest_error();
    j["forcing"] = {{"C_F", forcing.C_F},
                    {"T0", forcing.T0},
                    {"level1_ok", forcing.level1_ok},
                    {"level2_divergent", forcing.level2_divergent}};
    st.emit("validation.json", j.dump(2) + "\n");
    if (!rep.pass()) throw StageError("validate: assumptions failed\n" + rep.summary());
}

void stage_formal(State& st) {
    st.require_artifact("validation.json", "validate");
    CoefficientSeries series = solve_recursion(st.spec, eps_ref_for(st.cfg, 0), 16);
    st.emit("formal_U.csv", coefficient_series_csv(series, st.spec.mgrid));
    st.emit("formal_U_norms.csv", coefficient_norms_csv(series));
}

void stage_borel1(State& st) {
    st.require_artifact("formal_U.csv", "formal");
    build_geometry(st);
    json fam;
    fam["varsigma"] = st.family.varsigma();
    fam["delta_tilde"] = st.family.delta_tilde;
    json dirs = json::array();
    for (int p = 0; p < st.family.varsigma(); ++p) {
        build_direction(st, p);
        DirectionData& dd = st.dirs[p];
        BorelSolution w1 = solve_w(*dd.ctx1, st.cfg.solver.tol, st.cfg.solver.max_iter);
        dd.w1_ref = w1;
        st.emit("w1_" + std::to_string(p) + ".csv", gridfunction_csv(w1.w));
        json side;
        side["level"] = 1;
        side["direction"] = st.family.directions[p];
        side["eps"] = {w1.eps.real(), w1.eps.imag()};
        side["norm"] = w1.norm;
        side["contraction_ratio"] = w1.contraction_ratio;
        side["iterations"] = w1.iterations;
        side["residual"] = w1.residual;
        side["certificate"] = cert_json(dd.ctx1->cert);
        st.emit("w1_" + std::to_string(p) + ".json", side.dump(2) + "\n");
        dirs.push_back({{"direction", st.family.directions[p]},
                        {"u_half_aperture", st.family.u_half_aperture[p]},
                        {"level_flag", st.family.level_flags[p]}});
    }
    fam["directions"] = dirs;
    st.emit("family.json", fam.dump(2) + "\n");
}

void stage_accel(State& st) {
    st.require_artifact("family.json", "borel1");
    if (st.dirs.empty()) {
        build_geometry(st);
        for (int p = 0; p < st.family.varsigma(); ++p) build_direction(st, p);
    }
    for (int p = 0; p < st.family.varsigma(); ++p) {
        build_accel(st, p);
        st.emit("psi2_" + std::to_string(p) + ".csv", gridfunction_csv(st.dirs[p].psi2));
    }
}

void stage_borel2(State& st) {
    st.require_artifact("psi2_0.csv", "accel");
    for (int p = 0; p < st.family.varsigma(); ++p) {
        DirectionData& dd = st.dirs[p];
        if (!dd.w1_ref) {
            dd.w1_ref = solve_w(*dd.ctx1, st.cfg.solver.tol, st.cfg.solver.max_iter);
        }
        BorelSolution w2 =
            solve_w2_banded(*dd.ctx2, dd.w1_ref->w, st.cfg.solver.tol, st.cfg.solver.max_iter);
        dd.w2_ref = w2;
        IdentityReport idr = check_accel_identity(st.spec, dd.w1_ref->w, w2.w, 1e-4);
        st.emit("w2_" + std::to_string(p) + ".csv", gridfunction_csv(w2.w));
        json side;
        side["level"] = 2;
        side["direction"] = st.family.directions[p];
        side["eps"] = {w2.eps.real(), w2.eps.imag()};
        side["norm"] = w2.norm;
        side["contraction_ratio"] = w2.contraction_ratio;
        side["iterations"] = w2.iterations;
        side["residual"] = w2.residual;
        side["certificate"] = cert_json(dd.ctx2->cert);
        side["accel_identity"] = {{"sup_rel_diff", idr.sup_rel_diff},
                                  {"nodes", idr.nodes_checked},
                                  {"pass", idr.pass}};
        st.emit("w2_" + std::to_string(p) + ".json", side.dump(2) + "\n");
        if (!idr.pass) throw StageError("borel2: acceleration identity failed for direction " +
                                        std::to_string(p));
    }
}

void stage_sum(State& st) {
    st.require_artifact("w2_0.csv", "borel2");
    std::ostringstream samples;
    samples << "p,re_t,im_t,re_z,im_z,re_eps,im_eps,re_u,im_u,est_err\n";
    json resid;
    json per_dir = json::array();
    for (int p = 0; p < st.family.varsigma(); ++p) {
        DirectionData& dd = st.dirs[p];
        // byte-identical reuse of the persisted level-2 artifact
        GridFunction w2 = gridfunction_from_csv(
            read_text_file(st.out("w2_" + std::to_string(p) + ".csv")), dd.g2, st.spec.mgrid,
            GridKind::borel_k2_domain);
        SectorialSolution sol = make_sectorial(st.spec, p, st.family.directions[p],
                                               eps_ref_for(st.cfg, p), std::move(w2), dd.psi2,
                                               st.cfg.solver.quad_tol);
        for (const auto& [t, z] : st.cfg.verify.probes) {
            cd u = sol.u(t, z);
            samples << p << ',' << fmt_cd(t) << ',' << fmt_cd(z) << ',' << fmt_cd(sol.eps) << ','
                    << fmt_cd(u) << ',' << fmt_double(st.cfg.solver.quad_tol) << '\n';
        }
        const double Tcap = residual_T_cap(st.spec, std::log(dd.g2.radii.back()));
        std::vector<cd> Ts;
        for (int i = 0; i < st.cfg.verify.residual_samples; ++i)
            Ts.push_back(std::polar(
                Tcap * (0.15 + 0.7 * i / std::max(1, st.cfg.verify.residual_samples - 1)),
                st.family.directions[p] + 0.04 * (i - st.cfg.verify.residual_samples / 2)));
        std::vector<double> ms;
        for (int i = 0; i < 10; ++i) ms.push_back(-8.0 + 1.7 * i);
        auto rr = residual_check(sol, Ts, ms);
        auto fault = residual_check(sol, Ts, ms, 0.01);
        per_dir.push_back({{"p", p},
                           {"max_rel_residual", rr.max_rel_residual},
                           {"fault_residual", fault.max_rel_residual}});
    }
    resid["per_direction"] = per_dir;
    st.emit("samples.csv", samples.str());
    st.emit("residual.json", resid.dump(2) + "\n");
}

void stage_verify(State& st) {
    st.require_artifact("w2_0.csv", "borel2");
    const int vs = st.family.varsigma();

    // pre-solve the sweep with the configured thread budget (per-task results
    // are independent; insertion order below is fixed)
    std::vector<std::tuple<int, cd>> jobs;
    for (int p = 0; p < vs; ++p) {
        double bis = st.covering.overlap_bisector(p);
        for (double mag : st.cfg.verify.eps_magnitudes) {
            jobs.emplace_back(p, std::polar(mag, bis));
            jobs.emplace_back((p + 1) % vs, std::polar(mag, bis));
        }
    }
    for (double mag : st.cfg.verify.eps_magnitudes)
        jobs.emplace_back(0, std::polar(mag, 0.0));

    const int nthreads = thread_budget();
    std::vector<std::optional<SectorialSolution>> results(jobs.size());
    std::size_t next = 0;
    while (next < jobs.size()) {
        std::size_t batch = std::min<std::size_t>(nthreads, jobs.size() - next);
        std::vector<std::future<SectorialSolution>> futs;
        for (std::size_t i = 0; i < batch; ++i) {
            auto [p, eps] = jobs[next + i];
            futs.push_back(std::async(std::launch::async,
                                      [&st, p, eps] { return solve_direction(st, p, eps); }));
        }
        for (std::size_t i = 0; i < batch; ++i) results[next + i] = futs[i].get();
        next += batch;
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto [p, eps] = jobs[i];
        auto key = std::make_pair(p, std::make_pair(eps.real(), eps.imag()));
        st.sweep_cache.emplace(key, std::move(*results[i]));
    }

    SectorEval eval = [&st](int p, cd eps, cd t, cd z) {
        return swept_solution(st, p, eps).u(t, z);
    };

    // noise floor: factor x quadrature tolerance x solution scale
    double u_scale = 0.0;
    for (const auto& [t, z] : st.cfg.verify.probes)
        u_scale = std::max(u_scale,
                           std::abs(eval(0, std::polar(st.cfg.verify.eps_magnitudes.front(),
                                                       st.covering.overlap_bisector(0)),
                                         t, z)));
    const double floor =
        st.cfg.verify.noise_floor_factor * st.cfg.solver.quad_tol * std::max(1.0, u_scale);

    auto samples = cocycle_differences(eval, st.covering, st.family, st.cfg.verify.probes,
                                       st.cfg.verify.eps_magnitudes);
    auto part = classify_levels(st.family);
    json flat;
    flat["noise_floor"] = floor;
    flat["I1"] = part.I1;
    flat["I2"] = part.I2;
    json fits = json::array();
    bool flat_ok = true;
    for (const auto& cs : samples) {
        auto fit = fit_flatness_order(cs, st.spec.frame.logq(), floor);
        fits.push_back({{"pair", cs.p},
                        {"k_expected", cs.level_expected},
                        {"k_est", fit.k_est},
                        {"r_squared", fit.r_squared},
                        {"a1", fit.a1},
                        {"n_used", fit.n_used},
                        {"n_floored", fit.n_floored},
                        {"pass", fit.pass}});
        flat_ok = flat_ok && fit.pass;
    }
    flat["fits"] = fits;
    flat["pass"] = flat_ok;
    st.emit("flatness.json", flat.dump(2) + "\n");

    // q-Gevrey envelope on sector 0 against the eps-expansion
    EpsExpansion exp_ = eps_expansion(st.spec, st.cfg.verify.N_max + 1);
    std::vector<cd> env_eps;
    for (double mag : st.cfg.verify.eps_magnitudes) env_eps.push_back(std::polar(mag, 0.0));
    auto u0 = [&st](cd eps, cd t, cd z) { return swept_solution(st, 0, eps).u(t, z); };
    auto env = qgevrey_envelope_check(u0, exp_, st.spec, st.spec.frame.k1, st.cfg.verify.N_min,
                                      st.cfg.verify.N_max, env_eps, st.cfg.verify.probes, floor);
    std::vector<cd> tprobes, zprobes;
    for (const auto& [t, z] : st.cfg.verify.probes) {
        tprobes.push_back(t);
        zprobes.push_back(z);
    }
    double exp_resid = exp_.residual(st.spec, tprobes, zprobes);
    json je;
    je["C"] = env.C;
    je["A"] = env.A;
    je["pass"] = env.pass;
    je["expansion_residual"] = exp_resid;
    json rows = json::array();
    for (const auto& r : env.rows)
        rows.push_back({{"N", r.N}, {"max_EN", r.max_EN}, {"bound", r.bound},
                        {"slack", r.slack}});
    je["rows"] = rows;
    st.emit("envelope.json", je.dump(2) + "\n");

    json v;
    v["flatness_pass"] = flat_ok;
    v["envelope_pass"] = env.pass;
    v["expansion_residual"] = exp_resid;
    v["pass"] = flat_ok && env.pass && exp_resid < 1e-9;
    st.emit("verify.json", v.dump(2) + "\n");
    if (!v["pass"].get<bool>()) throw StageError("verify: verification failed");
}

}  // namespace

RunManifest run_pipeline(const RunConfig& cfg, const std::set<Stage>& stages) {
    State st(cfg);
    st.manifest.config_hash = hex64(fnv1a64(cfg.raw_json));
    write_text_file(st.out("config.echo.json"), cfg.raw_json + "\n");

    // stages needing in-memory geometry rebuilt when resuming mid-pipeline
    auto ensure_geometry = [&st](Stage s) {
        if (s == Stage::accel || s == Stage::borel2 || s == Stage::sum || s == Stage::verify) {
            if (st.dirs.empty()) {
                build_geometry(st);
                for (int p = 0; p < st.family.varsigma(); ++p) build_direction(st, p);
            }
            if (s != Stage::accel && !st.dirs[0].ctx2)
                for (int p = 0; p < st.family.varsigma(); ++p) build_accel(st, p);
        }
    };

    for (Stage s : all_stages()) {
        if (!stages.count(s)) continue;
        StageRecord rec;
        rec.name = stage_name(s);
        auto t0 = std::chrono::steady_clock::now();
        try {
            ensure_geometry(s);
            switch (s) {
                case Stage::validate: stage_validate(st); break;
                case Stage::formal: stage_formal(st); break;
                case Stage::borel1: stage_borel1(st); break;
                case Stage::accel: stage_accel(st); break;
                case Stage::borel2: stage_borel2(st); break;
                case Stage::sum: stage_sum(st); break;
                case Stage::verify: stage_verify(st); break;
            }
            rec.status = "ok";
        } catch (const Error& e) {
            rec.status = "fail";
            rec.detail = e.what();
            st.manifest.ok = false;
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        st.manifest.stages.push_back(rec);
        if (rec.status == "fail") break;
    }
    write_text_file(st.out("manifest.json"), st.manifest.to_json());
    return st.manifest;
}

}  // namespace qsum
