#pragma once

#include <vector>

#include "qsum/problem.hpp"

namespace qsum {

// Formal power series in T with m-profile coefficients: U_0..U_N sampled on
// the problem's m-grid, generated at a fixed eps.
struct CoefficientSeries {
    std::vector<Profile> profiles;
    cd eps{0.0, 0.0};
    std::vector<double> norms;  // E_{(beta,mu)} norm per coefficient
    int truncation() const { return static_cast<int>(profiles.size()) - 1; }
};

struct ForcingData {
    double C_F = 0.0, T0 = 0.0;        // fitted growth envelope constants
    bool level1_ok = false;             // (e119)-type envelope dominates
    bool level2_divergent = false;      // order-k2 Borel transform has null radius
    std::vector<double> norms;          // stored ||F_n||_{(beta,mu)}
    std::vector<double> slack;          // envelope slack per stored n
};

// Fits C_F, T0 by log-linear regression of the Borel-normalized norms, lifts
// C_F to dominate every sample, and classifies the two growth regimes.
// InsufficientData with fewer than 6 stored coefficients.
ForcingData build_forcing(const ProblemSpec& spec);

// Coefficients U_0..U_N of the unique formal solution, in index order; terms
// with negative delay indices are dropped (U_j = 0 for j < 0).
CoefficientSeries solve_recursion(const ProblemSpec& spec, cd eps, int N);

// Order-k Borel transform of the coefficient series evaluated at tau: the
// truncated sum over n of U_n tau^n / (q^{1/k})^{n(n-1)/2}.
Profile borel_eval(const CoefficientSeries& series, const ProblemSpec& spec, Rational k, cd tau);
// Same with truncation at the minimal term per m-node (for divergent order-k2 use).
Profile borel_eval_minterm(const CoefficientSeries& series, const ProblemSpec& spec, Rational k,
                           cd tau);

// Epsilon-expansion of the formal solution: h_m(t,z) = sum_j t^j F^{-1}(A_{m,j})(z),
// A_{m,j} the t-power profiles of the order-m Taylor coefficient (times m!).
struct EpsExpansion {
    std::vector<std::vector<Profile>> A;  // [m][j], j = 0..m
    int N_eps = 0;

    // h_m(t,z); dilations of t are exact (polynomial evaluation)
    cd h(const ProblemSpec& spec, int m, cd t, cd z) const;
    // f_m(t,z) = m! t^m F^{-1}(F_m)(z)
    cd f(const ProblemSpec& spec, int m, cd t, cd z) const;
    // max over samples of the recursion residual, relative to the term scale
    double residual(const ProblemSpec& spec, const std::vector<cd>& t_samples,
                    const std::vector<cd>& z_samples) const;
};

// ModeUnsupported if the spec declares eps-dependent coefficient data (the
// pipeline stores eps-frozen profiles, so this is structural here).
EpsExpansion eps_expansion(const ProblemSpec& spec, int N_eps);

// F^{-1}(f)(z) for a profile on the problem grid, |Im z| < beta'.
cd inverse_fourier_profile(const ProblemSpec& spec, const Profile& f, cd z);

}  // namespace qsum
