#include "qsum/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "qsum/errors.hpp"

namespace qsum {

std::vector<CocycleSample> cocycle_differences(const SectorEval& eval,
                                               const GoodCovering& covering,
                                               const AssociatedFamily& family,
                                               const std::vector<std::pair<cd, cd>>& probes,
                                               const std::vector<double>& eps_magnitudes) {
    const int vs = covering.varsigma();
    std::vector<CocycleSample> out;
    for (int p = 0; p < vs; ++p) {
        CocycleSample cs;
        cs.p = p;
        cs.level_expected = family.level_flags[p];
        const double bis = covering.overlap_bisector(p);
        const double radius = covering.sectors[p].radius;
        for (double mag : eps_magnitudes) {
            if (mag > radius)
                throw DomainError("cocycle_differences: magnitude exceeds the overlap radius");
            cd eps = std::polar(mag, bis);
            double worst = 0.0;
            for (const auto& [t, z] : probes) {
                cd a = eval(p, eps, t, z);
                cd b = eval((p + 1) % vs, eps, t, z);
                worst = std::max(worst, std::abs(b - a));
            }
            cs.eps_samples.push_back(eps);
            cs.diffs.push_back(worst);
        }
        out.push_back(std::move(cs));
    }
    return out;
}

FlatnessFit fit_flatness_order(const CocycleSample& sample, double logq, double noise_floor,
                               double k_tolerance) {
    FlatnessFit fit;
    fit.level_expected = sample.level_expected;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < sample.diffs.size(); ++i) {
        if (sample.diffs[i] <= noise_floor) {
            ++fit.n_floored;
            continue;
        }
        xs.push_back(std::log(std::abs(sample.eps_samples[i])));
        ys.push_back(std::log(sample.diffs[i]));
    }
    fit.n_used = static_cast<int>(xs.size());
    if (fit.n_used < 4 || fit.n_floored > static_cast<int>(sample.diffs.size()) / 2)
        throw InsufficientSignal("fit_flatness_order: too many samples at the noise floor");

    // quadratic least squares in x = log|eps|
    double S[5] = {0, 0, 0, 0, 0}, T[3] = {0, 0, 0};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double p = 1.0;
        for (int k = 0; k < 5; ++k) { S[k] += p; p *= xs[i]; }
        double py = ys[i];
        for (int k = 0; k < 3; ++k) { T[k] += py; py *= xs[i]; }
    }
    double A[3][4] = {{S[0], S[1], S[2], T[0]}, {S[1], S[2], S[3], T[1]}, {S[2], S[3], S[4], T[2]}};
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            double f = A[r][c] / A[c][c];
            for (int j = c; j < 4; ++j) A[r][j] -= f * A[c][j];
        }
    }
    fit.a0 = A[0][3] / A[0][0];
    fit.a1 = A[1][3] / A[1][1];
    fit.a2 = A[2][3] / A[2][2];

    double mean = 0.0;
    for (double y : ys) mean += y / ys.size();
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double model = fit.a0 + fit.a1 * xs[i] + fit.a2 * xs[i] * xs[i];
        ss_res += (ys[i] - model) * (ys[i] - model);
        ss_tot += (ys[i] - mean) * (ys[i] - mean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    fit.k_est = -2.0 * fit.a2 * logq;
    fit.pass = std::abs(fit.k_est - fit.level_expected) <=
                   k_tolerance * fit.level_expected &&
               fit.r_squared >= 0.98;
    return fit;
}

LevelPartition classify_levels(const AssociatedFamily& family) {
    LevelPartition part;
    for (int p = 0; p < family.varsigma(); ++p)
        (family.level_flags[p] == 2 ? part.I2 : part.I1).push_back(p);
    return part;
}

EnvelopeReport fit_envelope_constants(const std::vector<std::vector<double>>& E,
                                      const std::vector<double>& eps_abs, int N_min, double k,
                                      double logq, double noise_floor) {
    // y_{N,eps} := log E_N - N(N+1) logq/(2k) - (N+1) log|eps| must be dominated
    // by log C + (N+1) log A. Entries at the numerical floor are dropped (fewer
    // constraints can only ease the envelope, which keeps the fitted minimal A
    // monotone under a rising floor); A is the slope of the minimal dominating
    // affine majorant of the per-N maxima, C the matching lift.
    std::vector<double> n1s, ymax;
    for (std::size_t i = 0; i < E.size(); ++i) {
        const int N = N_min + static_cast<int>(i);
        double best = -1e300;
        bool any = false;
        for (std::size_t j = 0; j < eps_abs.size(); ++j) {
            if (E[i][j] <= noise_floor) continue;
            any = true;
            double y = std::log(E[i][j]) - N * (N + 1.0) * logq / (2.0 * k) -
                       (N + 1.0) * std::log(eps_abs[j]);
            best = std::max(best, y);
        }
        if (!any) continue;
        n1s.push_back(N + 1.0);
        ymax.push_back(best);
    }

    EnvelopeReport rep;
    double logA = 0.0;  // A = 1 when fewer than two orders carry signal
    if (n1s.size() >= 2) {
        logA = -1e300;
        for (std::size_t i = 0; i < n1s.size(); ++i)
            for (std::size_t j = i + 1; j < n1s.size(); ++j)
                logA = std::max(logA, (ymax[j] - ymax[i]) / (n1s[j] - n1s[i]));
    }
    double logC = -1e300;
    for (std::size_t i = 0; i < n1s.size(); ++i)
        logC = std::max(logC, ymax[i] - logA * n1s[i]);
    if (n1s.empty()) { logC = std::log(std::max(noise_floor, 1e-300)); }

    rep.A = std::exp(logA);
    rep.C = std::exp(logC);
    rep.pass = std::isfinite(rep.A) && std::isfinite(rep.C);
    const double emax = *std::max_element(eps_abs.begin(), eps_abs.end());
    for (std::size_t i = 0; i < E.size(); ++i) {
        const int N = N_min + static_cast<int>(i);
        EnvelopeRow row;
        row.N = N;
        row.max_EN = *std::max_element(E[i].begin(), E[i].end());
        row.bound = rep.C * std::pow(rep.A, N + 1.0) *
                    std::exp(N * (N + 1.0) * logq / (2.0 * k)) * std::pow(emax, N + 1.0);
        double worst = -1e300;
        for (std::size_t j = 0; j < eps_abs.size(); ++j) {
            if (E[i][j] <= noise_floor) continue;
            worst = std::max(worst, std::log(E[i][j]) - N * (N + 1.0) * logq / (2.0 * k) -
                                        (N + 1.0) * std::log(eps_abs[j]));
        }
        row.slack = worst == -1e300 ? 1e300 : (logC + logA * (N + 1.0)) - worst;
        if (row.slack < -1e-9) rep.pass = false;
        rep.rows.push_back(row);
    }
    return rep;
}

EnvelopeReport qgevrey_envelope_check(const std::function<cd(cd eps, cd t, cd z)>& u_eval,
                                      const EpsExpansion& expansion, const ProblemSpec& spec,
                                      double k, int N_min, int N_max,
                                      const std::vector<cd>& eps_samples,
                                      const std::vector<std::pair<cd, cd>>& probes,
                                      double noise_floor) {
    if (static_cast<int>(expansion.A.size()) <= N_max)
        throw InsufficientData("qgevrey_envelope_check: expansion shorter than N_max");
    std::vector<double> fact(N_max + 2, 1.0);
    for (int i = 1; i <= N_max + 1; ++i) fact[i] = fact[i - 1] * i;

    std::vector<std::vector<double>> E(N_max - N_min + 1,
                                       std::vector<double>(eps_samples.size(), 0.0));
    std::vector<double> eps_abs;
    for (std::size_t j = 0; j < eps_samples.size(); ++j) {
        const cd eps = eps_samples[j];
        eps_abs.push_back(std::abs(eps));
        for (const auto& [t, z] : probes) {
            cd u = u_eval(eps, t, z);
            cd partial(0.0, 0.0);
            for (int m = 0; m <= N_max; ++m) {
                partial += expansion.h(spec, m, t, z) * std::pow(eps, m) / fact[m];
                if (m >= N_min) {
                    std::size_t row = m - N_min;
                    E[row][j] = std::max(E[row][j], std::abs(u - partial));
                }
            }
        }
    }
    return fit_envelope_constants(E, eps_abs, N_min, k, spec.frame.logq(), noise_floor);
}

}  // namespace qsum
