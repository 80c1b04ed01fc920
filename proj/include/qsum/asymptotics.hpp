#pragma once

#include <functional>
#include <vector>

#include "qsum/formal.hpp"
#include "qsum/geometry.hpp"

namespace qsum {

struct CocycleSample {
    int p = 0;                     // pair index (p, p+1)
    std::vector<cd> eps_samples;   // on the bisecting ray of Z_p
    std::vector<double> diffs;     // max over probes of |u^{d_{p+1}} - u^{d_p}|
    int level_expected = 1;        // from the family's level flags
};

// Evaluator of u^{d_p}(t, z, eps) supplied by the orchestration layer (solutions
// are cached per (p, eps) behind it).
using SectorEval = std::function<cd(int p, cd eps, cd t, cd z)>;

// For each adjacent pair and each magnitude on the bisecting ray of the overlap
// Z_p, the max over probes of the solution difference. DomainError if a
// magnitude exceeds the overlap radius.
std::vector<CocycleSample> cocycle_differences(const SectorEval& eval,
                                               const GoodCovering& covering,
                                               const AssociatedFamily& family,
                                               const std::vector<std::pair<cd, cd>>& probes,
                                               const std::vector<double>& eps_magnitudes);

struct FlatnessFit {
    double a2 = 0.0, a1 = 0.0, a0 = 0.0;  // log diff ~ a2 log^2|eps| + a1 log|eps| + a0
    double k_est = 0.0;                   // -2 a2 log q
    double r_squared = 0.0;
    int n_used = 0, n_floored = 0;
    int level_expected = 1;
    bool pass = false;  // |k_est - expected|/expected <= 0.2 and r^2 >= 0.98
};

// Least-squares quadratic in log|eps| over diffs above the noise floor.
// InsufficientSignal if more than half the samples sit at the floor.
FlatnessFit fit_flatness_order(const CocycleSample& sample, double logq, double noise_floor,
                               double k_tolerance = 0.2);

struct LevelPartition {
    std::vector<int> I1, I2;
};

// Partition of the pair indices by the geometric level flags.
LevelPartition classify_levels(const AssociatedFamily& family);

struct EnvelopeRow {
    int N = 0;
    double max_EN = 0.0;  // max over eps and probes of the order-N remainder
    double bound = 0.0;   // C A^{N+1} q^{N(N+1)/(2k)} max-eps^{N+1} (reported at max eps)
    double slack = 0.0;
};

struct EnvelopeReport {
    double C = 0.0, A = 0.0;
    std::vector<EnvelopeRow> rows;
    bool pass = false;  // finite fitted (C, A) dominates every sample
};

// q-Gevrey envelope check of order 1/k: E_N(eps) = max over probes of
// |u - sum_{m<=N} h_m eps^m/m!| against C A^{N+1} q^{N(N+1)/(2k)} |eps|^{N+1}.
// The fit minimizes the dominating constant on the log scale; remainders at the
// numerical floor are clamped to it (they only make domination easier).
EnvelopeReport qgevrey_envelope_check(const std::function<cd(cd eps, cd t, cd z)>& u_eval,
                                      const EpsExpansion& expansion, const ProblemSpec& spec,
                                      double k, int N_min, int N_max,
                                      const std::vector<cd>& eps_samples,
                                      const std::vector<std::pair<cd, cd>>& probes,
                                      double noise_floor);

// Envelope fit on externally supplied remainders (used by the synthetic
// planted-envelope recovery test): rows indexed [N][eps].
EnvelopeReport fit_envelope_constants(const std::vector<std::vector<double>>& E,
                                      const std::vector<double>& eps_abs, int N_min, double k,
                                      double logq, double noise_floor);

}  // namespace qsum
