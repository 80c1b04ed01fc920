#include <cmath>
#include <random>

#include "doctest.h"
#include "qsum/errors.hpp"
#include "qsum/gridfun.hpp"
#include "qsum/mconv.hpp"
#include "qsum/norms.hpp"

using namespace qsum;

namespace {

MGrid small_mgrid() { return make_mgrid(1.0, 4.0, 40.0, 401); }

TauGrid small_taugrid(double q = 2.0) { return make_taugrid(0.4, 1.0, 50.0, 6, 30, q); }

GridFunction random_gf(unsigned seed, GridKind kind = GridKind::borel_k1_domain) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridFunction g(small_taugrid(), small_mgrid(), kind);
    for (auto& v : g.values) v = cd(u(rng), u(rng));
    return g;
}

}  // namespace

TEST_CASE("make_mgrid: exponential weight self-test at spec resolution") {
    // closed form: int e^{-|m|} dm = 2
    MGrid g = make_mgrid(1.0, 3.0, 40.0, 801);
    CHECK(g.quad_selftest_error() < 1e-8);
    // nodes symmetric, weights positive
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g.nodes[i] == -g.nodes[g.size() - 1 - i]);
        CHECK(g.weights[i] > 0.0);
    }
}

TEST_CASE("make_mgrid: parameter validation") {
    CHECK_THROWS_AS(make_mgrid(-1.0, 3.0, 40.0, 801), ParameterError);
    CHECK_THROWS_AS(make_mgrid(1.0, 3.0, 40.0, 800), ParameterError);  // even
}

TEST_CASE("make_taugrid: geometric node count and alignment") {
    // rho=1, r_max=q^8, L=6 -> ray nodes j with r in [rho, r_max]: 8L+1 = 49
    TauGrid g = make_taugrid(0.0, 1.0, std::pow(2.0, 8.0), 6, 12, 2.0);
    int ray_nodes = 0;
    for (double r : g.radii)
        if (r >= 1.0 - 1e-12) ++ray_nodes;
    CHECK(ray_nodes == 49);
    CHECK(g.radii[g.n_disc] == doctest::Approx(1.0));
    // exact ratio q^{1/L}
    for (std::size_t j = 1; j < g.size(); ++j)
        CHECK(g.radii[j] / g.radii[j - 1] == doctest::Approx(std::pow(2.0, 1.0 / 6.0)).epsilon(1e-13));
    CHECK_THROWS_AS(make_taugrid(0.0, 2.0, 1.0, 6, 12, 2.0), ParameterError);
}

TEST_CASE("dilate: identity, unit shift, composition, inverse") {
    GridFunction f = random_gf(5);
    auto g0 = dilate(f, Rational(0));
    for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(g0.values[i] == f.values[i]);

    auto g1 = dilate(f, Rational(1, 6));  // one radial index
    for (std::size_t jt = 0; jt + 1 < f.nt(); ++jt)
        for (std::size_t jm = 0; jm < f.nm(); ++jm) CHECK(g1.at(jt, jm) == f.at(jt + 1, jm));

    // composition on the common valid region
    auto a = dilate(dilate(f, Rational(2, 6)), Rational(3, 6));
    auto b = dilate(f, Rational(5, 6));
    for (std::size_t jt = 0; jt < f.nt(); ++jt) {
        if (a.tau_flags[jt] || b.tau_flags[jt]) continue;
        for (std::size_t jm = 0; jm < f.nm(); ++jm) CHECK(a.at(jt, jm) == b.at(jt, jm));
    }

    // inverse on unflagged nodes, exactly
    auto inv = dilate(dilate(f, Rational(4, 6)), Rational(-4, 6));
    for (std::size_t jt = 0; jt < f.nt(); ++jt) {
        if (inv.tau_flags[jt]) continue;
        for (std::size_t jm = 0; jm < f.nm(); ++jm) CHECK(inv.at(jt, jm) == f.at(jt, jm));
    }

    CHECK_THROWS_AS(dilate(f, Rational(1, 5)), AlignmentError);  // 5 does not divide L=6
}

TEST_CASE("weighted_norm: zero, weight cancellation, brute-force oracle, homogeneity") {
    MGrid mg = small_mgrid();
    TauGrid tg = small_taugrid();
    const double logq = std::log(2.0);
    NormSpec spec = NormSpec::exp_alpha(2.0, mg.beta, mg.mu, 0.0, tg.rho, 0.5, logq);

    GridFunction z(tg, mg, GridKind::borel_k1_domain);
    CHECK(weighted_norm(z, spec) == 0.0);

    // f(tau,m) = e^{-beta|m|}(1+|m|)^{-mu}: the m-part cancels, leaving the tau weight sup
    GridFunction f(tg, mg, GridKind::borel_k1_domain);
    for (std::size_t jt = 0; jt < f.nt(); ++jt)
        for (std::size_t jm = 0; jm < f.nm(); ++jm) {
            double m = mg.nodes[jm];
            f.at(jt, jm) = std::exp(-mg.beta * std::abs(m)) * std::pow(1.0 + std::abs(m), -mg.mu);
        }
    double expect = 0.0;
    for (std::size_t jt = 0; jt < f.nt(); ++jt) {
        double s = std::log(std::abs(f.tau.node(jt) + cd(0.5, 0.0)));
        expect = std::max(expect, std::exp(-spec.k * s * s / (2.0 * logq)));
    }
    CHECK(weighted_norm(f, spec) == doctest::Approx(expect).epsilon(1e-12));

    // random f equals the independent double loop
    GridFunction r = random_gf(99);
    double brute = 0.0;
    for (std::size_t jt = 0; jt < r.nt(); ++jt)
        for (std::size_t jm = 0; jm < r.nm(); ++jm) {
            double m = mg.nodes[jm];
            double s = std::log(std::abs(r.tau.node(jt) + cd(0.5, 0.0)));
            double w = std::pow(1.0 + std::abs(m), mg.mu) * std::exp(mg.beta * std::abs(m)) *
                       std::exp(-spec.k * s * s / (2.0 * logq)) * std::abs(r.at(jt, jm));
            brute = std::max(brute, w);
        }
    CHECK(weighted_norm(r, spec) == doctest::Approx(brute).epsilon(1e-12));

    // |alpha f| scales the norm exactly
    GridFunction r2 = r;
    for (auto& v : r2.values) v *= cd(0.0, -2.5);
    CHECK(weighted_norm(r2, spec) == doctest::Approx(2.5 * weighted_norm(r, spec)).epsilon(1e-13));
}

TEST_CASE("norm family / grid kind compatibility") {
    MGrid mg = small_mgrid();
    TauGrid tg = small_taugrid();
    GridFunction f(tg, mg, GridKind::borel_k2_domain);
    NormSpec bad = NormSpec::exp_alpha(2.0, 1.0, 3.0, 0.0, 1.0, 0.5, std::log(2.0));
    CHECK_THROWS_AS(weighted_norm(f, bad), DomainMismatch);
}

TEST_CASE("norm monotonicity in k on |tau| >= 1 nodes") {
    // pointwise weight exp(-k/2 log^2|tau|/log q) is monotone in k when |tau| >= 1
    MGrid mg = small_mgrid();
    TauGrid tg = small_taugrid();
    GridFunction f = random_gf(17, GridKind::borel_k2_domain);
    // zero out sub-unit-modulus nodes so the sup is taken over |tau| >= 1 only
    for (std::size_t jt = 0; jt < f.nt(); ++jt)
        if (f.tau.radii[jt] < 1.0)
            for (std::size_t jm = 0; jm < f.nm(); ++jm) f.at(jt, jm) = cd(0.0, 0.0);
    NormSpec n1 = NormSpec::exp_nu(1.0, mg.beta, mg.mu, 0.0, std::log(2.0));
    NormSpec n2 = NormSpec::exp_nu(2.0, mg.beta, mg.mu, 0.0, std::log(2.0));
    CHECK(weighted_norm(f, n2) <= weighted_norm(f, n1) + 1e-15);
}

TEST_CASE("mconvolve: zero, gaussian closed form, bilinearity") {
    MGrid mg = small_mgrid();
    const std::size_t n = mg.size();
    Profile f(n), g(n), zero(n, cd(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        double m = mg.nodes[j];
        f[j] = std::exp(-m * m);
        g[j] = f[j];
    }
    CPoly one({cd(1.0, 0.0)});

    auto z = mconvolve(f, zero, one, mg);
    for (auto& v : z) CHECK(std::abs(v) == 0.0);

    // gaussian * gaussian = sqrt(pi/2) e^{-m^2/2}
    auto conv = mconvolve(f, g, one, mg);
    for (std::size_t j = 0; j < n; j += 16) {
        double m = mg.nodes[j];
        cd expect = std::sqrt(M_PI / 2.0) * std::exp(-m * m / 2.0);
        CHECK(std::abs(conv[j] - expect) < 1e-10);
    }

    // scaling by a constant polynomial
    CPoly three({cd(3.0, 0.0)});
    auto c3 = mconvolve(f, g, three, mg);
    for (std::size_t j = 0; j < n; j += 32) CHECK(std::abs(c3[j] - 3.0 * conv[j]) < 1e-12);
}

TEST_CASE("mconvolve: banach algebra bound with numeric constant") {
    MGrid mg = small_mgrid();
    const std::size_t n = mg.size();
    Profile f(n), g(n);
    for (std::size_t j = 0; j < n; ++j) {
        double m = mg.nodes[j];
        f[j] = std::exp(-m * m) * cd(1.0, 0.3);
        g[j] = std::exp(-0.7 * m * m);
    }
    CPoly Q({cd(1.0, 0.0), cd(0.5, 0.0)});          // deg 1
    CPoly R({cd(2.0, 0.0), cd(0.0, 0.0), cd(1.0, 0.0)});  // deg 2, R(im) = 2 - m^2 + ... nonzero? 2-m^2 vanishes!
    CPoly Rsafe({cd(2.0, 0.0), cd(0.8, 0.0), cd(1.0, 0.0)});  // R(im) = (2-m^2) + 0.8im, never 0
    double C2 = convolution_bound_constant(Q, Rsafe, mg.mu);
    auto conv = mconvolve(f, g, Q, mg);
    Profile bconv(n);
    for (std::size_t j = 0; j < n; ++j) bconv[j] = conv[j] / Rsafe.eval_im(mg.nodes[j]);
    NormSpec ebm = NormSpec::ebm(mg.beta, mg.mu);
    double lhs = weighted_norm(bconv, mg, ebm);
    double rhs = C2 * weighted_norm(f, mg, ebm) * weighted_norm(g, mg, ebm);
    CHECK(lhs <= rhs);
}

TEST_CASE("mconvolve: boundary mass triggers TruncationError") {
    MGrid mg = small_mgrid();
    Profile f(mg.size(), cd(1.0, 0.0)), g(mg.size(), cd(1.0, 0.0));  // no decay
    CPoly one({cd(1.0, 0.0)});
    CHECK_THROWS_AS(mconvolve(f, g, one, mg), TruncationError);
}

TEST_CASE("inverse_fourier: gaussian closed form and real symmetry") {
    MGrid mg = small_mgrid();
    Profile f(mg.size());
    for (std::size_t j = 0; j < mg.size(); ++j) f[j] = std::exp(-mg.nodes[j] * mg.nodes[j]);
    // F^{-1}(e^{-m^2})(z) = e^{-z^2/4}/sqrt(2)
    for (double z : {0.0, 0.5, 1.3}) {
        cd got = inverse_fourier(f, mg, cd(z, 0.0));
        cd expect = std::exp(-z * z / 4.0) / std::sqrt(2.0);
        CHECK(std::abs(got - expect) < 1e-10);
        CHECK(std::abs(got.imag()) < 1e-12);  // even real profile, real z
    }
}

TEST_CASE("envelope extrapolation tracks a log-quadratic growth law") {
    TauGrid tg = small_taugrid();
    MGrid mg = make_mgrid(1.0, 3.0, 30.0, 301);
    const double logq = std::log(2.0);
    GridFunction f(tg, mg, GridKind::borel_k2_domain);
    f.env_a = 1.0 / (2.0 * logq);  // family curvature declared to the extrapolator
    for (std::size_t jt = 0; jt < f.nt(); ++jt) {
        double s = f.tau.log_radius(jt);
        for (std::size_t jm = 0; jm < f.nm(); ++jm)
            f.at(jt, jm) = std::exp(s * s / (2.0 * logq) - 0.3 * s) *
                           std::exp(-std::abs(mg.nodes[jm]));
    }
    double s_next = f.tau.log_radius(f.nt() - 1) + f.tau.step_log();
    Profile ext = envelope_extend(f, s_next);
    double expect = std::exp(s_next * s_next / (2.0 * logq) - 0.3 * s_next);
    CHECK(std::abs(ext[mg.index_of_zero()] - expect) < 1e-6 * expect);
}
