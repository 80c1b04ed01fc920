#pragma once

// Shared construction of the bundled reference instance for tests: a
// two-level frame with well-separated root loci, gaussian coefficient data,
// and a geometric forcing whose level-1 Borel transform is a rational
// function (exact continuation along every non-real-positive ray).

#include <cmath>

#include "qsum/problem.hpp"
#include "qsum/series.hpp"

namespace testinst {

using namespace qsum;

inline Profile gaussian_profile(const MGrid& g, double amp, double width) {
    Profile p(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        double m = g.nodes[j] / width;
        p[j] = amp * std::exp(-m * m);
    }
    return p;
}

struct Options {
    double q = 32.0;
    int n_m = 301;
    double M_max = 30.0;
    double coeff_amp = 1.0;  // amplitude of the C_{2,0} coupling
    bool with_coeffs = true;
    bool with_RD1 = true;
    bool with_RD2 = true;
};

// Singularity layout of the bundled instance: level-1 obstructions (P_1 roots
// at radius 2.4, angles 52.4 + 72k deg; forcing pole at 2 e^{i 160 deg}) and
// level-2 root lines (radius 2.5, angles 16.36 + 32.73k deg). The direction
// pair (8.16, 24.56) straddles only the 16.36-deg level-2 line (the k2-flat
// cocycle); the remaining pairs straddle level-1 singularities (k1-flat).
inline ProblemSpec bundled(const Options& opt = {}) {
    ProblemSpec s;
    s.frame = QFrame(opt.q, 1, 2);  // kappa = 2
    s.Q = CPoly({cd(4.0, 0.0), cd(1.0, 0.0), cd(1.0, 0.0)});
    const double rho1 = 2.4, rho2 = 2.5;
    const cd c1 = std::polar(s.frame.qpow(Rational(15)) / std::pow(rho1, 5.0),
                             98.0 * M_PI / 180.0);
    const cd c2 = std::polar(s.frame.qpow(Rational(77, 2)) / std::pow(rho2, 11.0), M_PI);
    s.R_D1 = CPoly({c1 * 4.0, c1, c1});
    s.R_D2 = CPoly({c2 * 4.0, c2, c2});
    s.D = 3;
    s.R_ell = {CPoly({cd(1.0, 0.0), cd(1.0, 0.0)}), CPoly({cd(1.0, 0.0), cd(0.0, 0.0), cd(0.5, 0.0)})};
    s.d_D1 = 5;
    s.d_D2 = 11;
    s.d_ell = {1, 2};
    s.delta_ell = {1, 2};
    s.Delta_ell = {2, 2};
    s.p1 = 2;
    s.beta = 1.0;
    s.beta_prime = 0.5;
    s.mu = 4.0;
    s.eps0 = 0.8;
    s.r_T = 0.5;
    s.T_direction = 0.0;
    s.T_half_aperture = 0.3;
    s.alpha = 0.0;
    s.nu = -8.0;
    s.rho = 0.5;
    s.delta = 0.25;
    s.delta_tilde = 0.1;
    s.mgrid = make_mgrid(s.beta, s.mu, opt.M_max, opt.n_m);

    if (opt.with_coeffs) {
        s.C_data.assign(2, std::vector<Profile>(s.p1 + 1));
        s.C_data[1][0] = gaussian_profile(s.mgrid, opt.coeff_amp, 1.0);
    } else {
        s.C_data.assign(2, std::vector<Profile>(s.p1 + 1));
    }

    s.forcing.kind = ForcingSpec::Kind::geometric;
    s.forcing.T0 = std::polar(2.0, 160.0 * M_PI / 180.0);
    s.forcing.g = gaussian_profile(s.mgrid, 1.0, 1.0);
    const int n_stored = 14;
    s.forcing.F.resize(n_stored);
    for (int n = 0; n < n_stored; ++n) {
        cd scale = std::pow(cd(1.0, 0.0) / s.forcing.T0, n) *
                   s.frame.qpow(borel_exponent(n, Rational(s.frame.k1)));
        s.forcing.F[n] = s.forcing.g;
        for (auto& v : s.forcing.F[n]) v *= scale;
    }
    if (!opt.with_RD2) s.R_D2 = CPoly({cd(0.0, 0.0)});
    if (!opt.with_RD1) s.R_D1 = CPoly({cd(0.0, 0.0)});
    return s;
}

// Bundled directions: the pair (8.16, 24.56) straddles the level-2 root line at
// 16.36 deg (level-2 pair); the remaining pairs straddle level-1 singularities.
inline std::vector<double> bundled_directions() {
    auto deg = [](double d) { return d * M_PI / 180.0; };
    return {deg(8.16), deg(24.56), deg(171.0), deg(296.0)};
}

}  // namespace testinst
