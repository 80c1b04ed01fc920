#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "qsum/config.hpp"
#include "qsum/errors.hpp"
#include "qsum/io.hpp"
#include "qsum/pipeline.hpp"

using namespace qsum;

namespace {

std::set<Stage> parse_stage_list(const std::string& list) {
    std::set<Stage> out;
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto s = stage_from_name(tok);
        if (!s) throw SchemaError("unknown stage '" + tok + "' in --stages");
        out.insert(*s);
    }
    return out;
}

int run(const std::string& cmd, const std::string& config_path, const std::string& out_dir,
        double tol, const std::string& stage_list) {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (tol > 0.0) cfg.solver.tol = tol;

    std::set<Stage> stages;
    if (!stage_list.empty()) {
        stages = parse_stage_list(stage_list);
    } else if (cmd == "all") {
        stages.insert(all_stages().begin(), all_stages().end());
    } else {
        auto s = stage_from_name(cmd);
        if (!s) throw SchemaError("unknown command '" + cmd + "'");
        stages.insert(*s);
    }

    RunManifest m = run_pipeline(cfg, stages);
    for (const auto& rec : m.stages) {
        std::printf("[%s] %-8s %8.0f ms%s%s\n", rec.status == "ok" ? "ok " : "FAIL",
                    rec.name.c_str(), rec.wall_ms, rec.detail.empty() ? "" : "  ",
                    rec.detail.c_str());
    }
    std::printf("manifest: %s\n", (cfg.out_dir / "manifest.json").string().c_str());
    return m.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-level q-Borel-Laplace summation pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, stage_list;
    double tol = 0.0;

    const std::vector<std::string> cmds = {"validate", "formal", "borel1", "accel",
                                           "borel2",   "sum",    "verify", "all"};
    std::vector<CLI::App*> subs;
    for (const auto& c : cmds) {
        CLI::App* sub = app.add_subcommand(c, "run the " + c + " stage" +
                                                  (c == "all" ? "s end to end" : ""));
        sub->add_option("--config", config_path, "run configuration (json)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config out_dir)");
        sub->add_option("--tol", tol, "solver tolerance override");
        sub->add_option("--stages", stage_list, "comma-separated stage subset");
        subs.push_back(sub);
    }
    CLI::App* gen = app.add_subcommand("bundled-config", "print the bundled reference config");
    std::string gen_path;
    gen->add_option("--out", gen_path, "write to file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (gen_path.empty())
                std::cout << bundled_config_json();
            else
                write_text_file(gen_path, bundled_config_json());
            return 0;
        }
        for (std::size_t i = 0; i < cmds.size(); ++i)
            if (subs[i]->parsed()) return run(cmds[i], config_path, out_dir, tol, stage_list);
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const GeometryViolation& e) {
        std::fprintf(stderr, "geometry error: %s\n", e.what());
        return 2;
    } catch (const NoAdmissibleDirection& e) {
        std::fprintf(stderr, "geometry error: %s\n", e.what());
        return 2;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
