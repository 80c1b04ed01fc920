#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qsum/problem.hpp"

namespace qsum {

struct GridsConfig {
    double M_max = 30.0;
    int n_m = 301;
    int L = 0;  // 0 = auto: 16 x problem alignment
    double tau1_s_min = -16.0;
    double tau1_s_max = 26.5;
    double tau2_s_min = -34.0;
};

struct CoveringConfig {
    int varsigma = 4;
    double overlap_frac = 0.2;
    double delta_tilde = 0.1;
    std::vector<double> directions_deg;  // optional overrides
};

struct SolverConfig {
    double tol = 1e-8;
    int max_iter = 40;
    double pi_tol = 1e-14;
    double theta_tol = 1e-12;
    double quad_tol = 1e-10;
};

struct VerifyConfig {
    std::vector<double> eps_magnitudes;
    int N_min = 0, N_max = 8;
    std::vector<std::pair<cd, cd>> probes;  // (t, z)
    double eps_ref_mag = 0.3;
    int n_eps_expansion = 10;
    double noise_floor_factor = 10.0;
    int residual_samples = 10;
};

struct RunConfig {
    ProblemSpec problem;
    GridsConfig grids;
    CoveringConfig covering;
    SolverConfig solver;
    VerifyConfig verify;
    std::filesystem::path out_dir;
    std::string raw_json;  // canonical serialized config (hashed into the manifest)

    int grid_L() const;
};

// Strict schema-validated load: unknown keys rejected, all violations listed.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

// The bundled reference instance as a config document.
std::string bundled_config_json();

}  // namespace qsum
