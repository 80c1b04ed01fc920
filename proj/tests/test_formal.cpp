#include <cmath>

#include "doctest.h"
#include "instance.hpp"
#include "qsum/errors.hpp"
#include "qsum/formal.hpp"
#include "qsum/mconv.hpp"
#include "qsum/norms.hpp"

using namespace qsum;
using namespace testinst;

namespace {

// Independent direct recursion evaluator: plain nested loops, its own
// convolution quadrature (raw trapezoid-with-ends on the same nodes), no code
// shared with solve_recursion beyond the problem data.
std::vector<Profile> oracle_recursion(const ProblemSpec& s, cd eps, int N) {
    const auto& fr = s.frame;
    const std::size_t nm = s.mgrid.size();
    std::vector<Profile> U(N + 1, Profile(nm, cd(0.0, 0.0)));
    for (int n = 0; n <= N; ++n) {
        for (std::size_t i = 0; i < nm; ++i) {
            const double m = s.mgrid.nodes[i];
            cd rhs(0.0, 0.0);
            if (n < s.forcing.n_stored()) rhs += s.forcing.F[n][i] * std::pow(fr.q, n);
            if (n >= s.d_D1)
                rhs += s.R_D1.eval_im(m) * U[n - s.d_D1][i] *
                       std::pow(fr.q, (static_cast<double>(s.d_D1) / fr.k1 + 1.0) * (n - s.d_D1));
            if (n >= s.d_D2)
                rhs += s.R_D2.eval_im(m) * U[n - s.d_D2][i] *
                       std::pow(fr.q, (static_cast<double>(s.d_D2) / fr.k2 + 1.0) * (n - s.d_D2));
            for (int e = 0; e < s.n_ell(); ++e) {
                const int dl = s.d_ell[e];
                if (n < dl) continue;
                cd sum(0.0, 0.0);
                for (int n1 = 0; n1 <= n - dl; ++n1) {
                    const Profile& c = s.C_profile(e, n1);
                    if (c.empty()) continue;
                    const int n2 = n - dl - n1;
                    // direct convolution integral at this node
                    cd conv(0.0, 0.0);
                    for (std::size_t j = 0; j < nm; ++j) {
                        double m1 = s.mgrid.nodes[j];
                        double diff = m - m1;
                        if (diff < s.mgrid.nodes.front() || diff > s.mgrid.nodes.back()) continue;
                        double t = (diff - s.mgrid.nodes.front()) / s.mgrid.h;
                        auto i0 = static_cast<std::size_t>(t);
                        cd fval = (i0 + 1 < nm)
                                      ? c[i0] * (1.0 - (t - i0)) + c[i0 + 1] * (t - i0)
                                      : c[nm - 1];
                        conv += s.mgrid.smooth_weights[j] * fval * s.R_ell[e].eval_im(m1) *
                                U[n2][j];
                    }
                    sum += conv;
                }
                rhs += std::pow(eps, s.Delta_ell[e] - s.d_ell[e]) *
                       std::pow(fr.q, (n - dl) * static_cast<double>(s.delta_ell[e])) * sum /
                       std::sqrt(2.0 * M_PI);
            }
            U[n][i] = rhs / (s.Q.eval_im(m) * std::pow(fr.q, n));
        }
    }
    return U;
}

}  // namespace

TEST_CASE("build_forcing: exact level-1 data") {
    ProblemSpec s = bundled();
    auto fd = build_forcing(s);
    CHECK(fd.level1_ok);
    CHECK(fd.level2_divergent);
    CHECK(fd.T0 == doctest::Approx(std::abs(s.forcing.T0)).epsilon(1e-8));
    NormSpec ebm = NormSpec::ebm(s.beta, s.mu);
    CHECK(fd.C_F == doctest::Approx(weighted_norm(s.forcing.g, s.mgrid, ebm)).epsilon(1e-8));
    for (double sl : fd.slack) CHECK(sl >= -1e-12);
}

TEST_CASE("build_forcing: polynomial and factorial data") {
    ProblemSpec s = bundled();
    // polynomial: F_n = 0 for n >= 1
    s.forcing.kind = ForcingSpec::Kind::polynomial;
    for (int n = 1; n < s.forcing.n_stored(); ++n)
        s.forcing.F[n].assign(s.mgrid.size(), cd(0.0, 0.0));
    auto fd = build_forcing(s);
    CHECK_FALSE(fd.level2_divergent);
    CHECK(fd.level1_ok);

    // F_n = g / n!: level-1 envelope with any T0, not level-2 divergent
    ProblemSpec s2 = bundled();
    double fact = 1.0;
    for (int n = 0; n < s2.forcing.n_stored(); ++n) {
        if (n > 0) fact *= n;
        s2.forcing.F[n] = s2.forcing.g;
        for (auto& v : s2.forcing.F[n]) v /= fact;
    }
    auto fd2 = build_forcing(s2);
    CHECK(fd2.level1_ok);
    CHECK_FALSE(fd2.level2_divergent);

    // super-level-1 growth must be flagged
    ProblemSpec s3 = bundled();
    for (int n = 0; n < s3.forcing.n_stored(); ++n) {
        double scale = s3.frame.qpow(Rational(static_cast<std::int64_t>(n) * n, 1));  // q^{n^2}
        s3.forcing.F[n] = s3.forcing.g;
        for (auto& v : s3.forcing.F[n]) v *= scale;
    }
    auto fd3 = build_forcing(s3);
    CHECK_FALSE(fd3.level1_ok);

    ProblemSpec s4 = bundled();
    s4.forcing.F.resize(4);
    CHECK_THROWS_AS(build_forcing(s4), InsufficientData);
}

TEST_CASE("solve_recursion: delayed-term structure at low order") {
    ProblemSpec s = bundled({.with_coeffs = false});
    // C == 0 and only F_0 nonzero: U_0 = F_0/Q, U_n = 0 for 0 < n < min(d_D1,d_D2)
    for (int n = 1; n < s.forcing.n_stored(); ++n)
        s.forcing.F[n].assign(s.mgrid.size(), cd(0.0, 0.0));
    auto series = solve_recursion(s, cd(0.2, 0.1), 7);
    for (std::size_t i = 0; i < s.mgrid.size(); i += 17) {
        cd expect = s.forcing.F[0][i] / s.Q.eval_im(s.mgrid.nodes[i]);
        CHECK(std::abs(series.profiles[0][i] - expect) < 1e-14 * (1.0 + std::abs(expect)));
    }
    for (int n = 1; n < std::min(s.d_D1, s.d_D2); ++n)
        CHECK(series.norms[n] == 0.0);
    CHECK(series.norms[s.d_D1] > 0.0);  // first feedback from the R_D1 term
}

TEST_CASE("solve_recursion: linearity in the forcing when C == 0") {
    ProblemSpec s = bundled({.with_coeffs = false});
    auto a = solve_recursion(s, cd(0.1, 0.0), 9);
    ProblemSpec s2 = s;
    for (auto& F : s2.forcing.F)
        for (auto& v : F) v *= cd(0.0, 2.0);
    auto b = solve_recursion(s2, cd(0.1, 0.0), 9);
    for (int n = 0; n <= 9; ++n)
        for (std::size_t i = 0; i < s.mgrid.size(); i += 29)
            CHECK(std::abs(b.profiles[n][i] - cd(0.0, 2.0) * a.profiles[n][i]) <=
                  1e-12 * (1.0 + std::abs(a.profiles[n][i])));
}

TEST_CASE("solve_recursion matches the independent oracle") {
    ProblemSpec s = bundled({.n_m = 301});
    cd eps(0.25, 0.15);
    const int N = 12;
    auto mine = solve_recursion(s, eps, N);
    auto oracle = oracle_recursion(s, eps, N);
    for (int n = 0; n <= N; ++n) {
        double scale = mine.norms[n] + 1e-300;
        for (std::size_t i = 0; i < s.mgrid.size(); i += 7) {
            double weight = std::exp(s.mgrid.nodes[i] >= 0 ? -s.mgrid.nodes[i] : s.mgrid.nodes[i]);
            (void)weight;
            double err = std::abs(mine.profiles[n][i] - oracle[n][i]);
            double ref = std::abs(oracle[n][i]) + scale * 1e-6;
            CHECK(err <= 1e-10 * ref + 1e-10 * scale);
        }
    }
    // determinism: rerun is bitwise identical
    auto again = solve_recursion(s, eps, N);
    for (int n = 0; n <= N; ++n)
        for (std::size_t i = 0; i < s.mgrid.size(); ++i)
            CHECK(again.profiles[n][i] == mine.profiles[n][i]);
    // every coefficient has finite E_{(beta,mu)} norm
    for (double nn : mine.norms) CHECK(std::isfinite(nn));
}

TEST_CASE("inverse Fourier: product rule through convolution") {
    ProblemSpec s = bundled();
    const std::size_t nm = s.mgrid.size();
    Profile f(nm), g(nm);
    for (std::size_t j = 0; j < nm; ++j) {
        double m = s.mgrid.nodes[j];
        f[j] = std::exp(-m * m) * cd(1.0, 0.2);
        g[j] = std::exp(-0.8 * m * m);
    }
    CPoly one({cd(1.0, 0.0)});
    Profile conv = mconvolve(f, g, one, s.mgrid);
    for (auto& v : conv) v /= std::sqrt(2.0 * M_PI);
    for (cd z : {cd(0.3, 0.0), cd(-0.7, 0.2), cd(0.1, -0.4)}) {
        cd lhs = inverse_fourier_profile(s, f, z) * inverse_fourier_profile(s, g, z);
        cd rhs = inverse_fourier_profile(s, conv, z);
        CHECK(std::abs(lhs - rhs) < 1e-9 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("eps_expansion: low orders, zero forcing, residual oracle") {
    ProblemSpec s = bundled();
    const int NE = 8;
    auto exp_ = eps_expansion(s, NE);

    // m below every delay and Delta: h_m = m! t^m F^{-1}(F_m/Q)
    std::vector<cd> zs = {cd(0.2, 0.0), cd(-0.4, 0.1)};
    std::vector<cd> ts = {cd(0.2, 0.05), cd(0.31, -0.02)};
    const std::size_t nm = s.mgrid.size();
    for (int m = 0; m < std::min({s.d_D1, s.d_D2, s.Delta_ell[0], s.Delta_ell[1]}); ++m) {
        double mfact = 1.0;
        for (int i = 2; i <= m; ++i) mfact *= i;
        for (cd t : ts)
            for (cd z : zs) {
                Profile fq(nm);
                for (std::size_t i = 0; i < nm; ++i)
                    fq[i] = s.forcing.F[m][i] / s.Q.eval_im(s.mgrid.nodes[i]);
                cd expect = mfact * std::pow(t, m) * inverse_fourier_profile(s, fq, z);
                cd got = exp_.h(s, m, t, z);
                CHECK(std::abs(got - expect) < 1e-10 * (1.0 + std::abs(expect)));
            }
    }

    // residual of the recursion at samples
    CHECK(exp_.residual(s, ts, zs) < 1e-9);

    // zero forcing -> zero expansion
    ProblemSpec s0 = bundled();
    for (auto& F : s0.forcing.F) F.assign(nm, cd(0.0, 0.0));
    s0.forcing.g.assign(nm, cd(0.0, 0.0));
    auto e0 = eps_expansion(s0, 5);
    for (int m = 0; m <= 5; ++m)
        for (cd t : ts) CHECK(std::abs(e0.h(s0, m, t, zs[0])) == 0.0);
}
