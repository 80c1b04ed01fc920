#include <cmath>

#include "doctest.h"
#include "instance.hpp"
#include "qsum/borelplane.hpp"
#include "qsum/errors.hpp"
#include "qsum/laplace.hpp"
#include "qsum/series.hpp"
#include "qsum/theta.hpp"

using namespace qsum;
using namespace testinst;

TEST_CASE("round trip: L_{q;1/k} o B_{q;1/k} on monomials") {
    ProblemSpec s = bundled();
    const auto& fr = s.frame;
    TauGrid lattice = make_level_grid(s, 0.9, -25.0, 45.0, 2 * 16);
    for (Rational k : {Rational(fr.k1), fr.kappa, Rational(fr.k2)}) {
        const double r1 = s.laplace_radius(k.value(), 0.0);
        for (int n = 0; n <= 6; ++n) {
            const double scale = fr.qpow(borel_exponent(n, k));
            auto f = [n, scale](cd u) { return std::pow(u, n) / scale; };
            for (double frac : {0.1, 0.35, 0.8}) {
                cd T = std::polar(frac * r1, 0.15);  // inside the lemma radius
                cd got = qlaplace_fn(fr, k, lattice, f, T, 1e-10, s.delta_tilde);
                cd expect = std::pow(T, n);
                CHECK(std::abs(got - expect) <= 1e-6 * std::abs(expect));
            }
        }
    }
}

TEST_CASE("qlaplace: zero function, domain guard, direction mod 2pi") {
    ProblemSpec s = bundled();
    const auto& fr = s.frame;
    TauGrid lattice = make_level_grid(s, 1.0, -8.0, 8.0, 2 * 16);
    auto zero = [](cd) { return cd(0.0, 0.0); };
    CHECK(std::abs(qlaplace_fn(fr, Rational(2), lattice, zero, cd(0.05, 0.02), 1e-10,
                               s.delta_tilde)) == 0.0);

    // T on the antipodal ray of d violates the R-domain margin
    cd bad = std::polar(0.05, 1.0 + M_PI);
    auto one = [](cd) { return cd(1.0, 0.0); };
    CHECK_THROWS_AS(qlaplace_fn(fr, Rational(2), lattice, one, bad, 1e-10, s.delta_tilde),
                    DomainError);

    // d and d + 2pi give the same ray, identical values
    TauGrid lat2 = make_level_grid(s, 1.0 + 2.0 * M_PI, -8.0, 8.0, 2 * 16);
    auto f = [](cd u) { return u / (cd(2.0, 0.0) - u); };
    cd T = std::polar(0.07, 0.8);
    cd a = qlaplace_fn(fr, Rational(2), lattice, f, T, 1e-11, s.delta_tilde);
    cd b = qlaplace_fn(fr, Rational(2), lat2, f, T, 1e-11, s.delta_tilde);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
}

TEST_CASE("qlaplace commutation: T^s sigma_q^j L(f) = L(x^s/(q^{1/k})^{s(s-1)/2} sigma^{j-s/k} f)") {
    ProblemSpec s = bundled();
    const auto& fr = s.frame;
    const Rational k(fr.k2);
    TauGrid lattice = make_level_grid(s, 0.7, -10.0, 9.0, 2 * 16);
    auto f = [](cd u) { return cd(1.0, 0.0) / (cd(3.0, 0.0) - u) + 0.2 * u; };
    const double r1 = s.laplace_radius(fr.k2, 0.0);

    for (int sigma : {1, 2}) {
        for (Rational j : {Rational(0), Rational(1, 2), Rational(1)}) {
            cd T = std::polar(0.02 * r1, 0.25);
            // left: T^sigma L(f)(q^j T)
            cd lhs = std::pow(T, sigma) *
                     qlaplace_fn(fr, k, lattice, f, fr.qpow(j) * T, 1e-11, s.delta_tilde);
            // right: L(x^sigma/(q^{1/k})^{sigma(sigma-1)/2} f(q^{j - sigma/k} x))(T)
            const double scale = fr.qpow(borel_exponent(sigma, k));
            const double dil = fr.qpow(j - Rational(sigma) / k);
            auto g = [&](cd x) { return std::pow(x, sigma) / scale * f(dil * x); };
            cd rhs = qlaplace_fn(fr, k, lattice, g, T, 1e-11, s.delta_tilde);
            CHECK(std::abs(lhs - rhs) <= 1e-8 * (std::abs(lhs) + 1e-12));
        }
    }
}

TEST_CASE("acceleration round trip on Borel monomial data") {
    // L_{q;1/kappa}(B_{q;1/kappa}(T^n)) = T^n within tol for n <= 6
    ProblemSpec s = bundled();
    const auto& fr = s.frame;
    const Rational kap = fr.kappa;
    TauGrid grid1 = make_level_grid(s, 0.9, -12.0, 24.0, 2 * 16);
    GridFunction w1(grid1, s.mgrid, GridKind::borel_k1_domain);
    const double r1 = s.laplace_radius(fr.kappa_val(), s.alpha);
    TauGrid grid2 = make_level_grid(s, 0.9, -6.0, std::log(r1) + 0.5, 2 * 16);

    for (int n = 0; n <= 6; ++n) {
        const double scale = fr.qpow(borel_exponent(n, kap));
        for (std::size_t jt = 0; jt < w1.nt(); ++jt) {
            cd v = std::pow(grid1.node(jt), n) / scale;
            for (std::size_t jm = 0; jm < w1.nm(); ++jm) w1.at(jt, jm) = v;
        }
        AccelReport rep;
        GridFunction acc = accelerate(s, w1, grid2, 1e-10, &rep);
        for (std::size_t jt = 0; jt < acc.nt(); ++jt) {
            if (acc.tau_flags[jt]) continue;
            if (grid2.radii[jt] > 0.9 * r1 || grid2.radii[jt] < 0.05) continue;
            cd expect = std::pow(grid2.node(jt), n);
            CHECK(std::abs(acc.at(jt, 0) - expect) <= 2e-6 * std::abs(expect));
        }
    }
}

TEST_CASE("acceleration growth envelope matches the level-2 rate") {
    // input with exact k1-regime growth: Theta_{q^{1/k1}}(u/rho0); output envelope
    // must fit exp(k2 log^2|tau|/(2 log q) + ...)
    ProblemSpec s = bundled();
    const auto& fr = s.frame;
    TauGrid grid1 = make_level_grid(s, 0.9, -12.0, 16.0, 2 * 16);
    GridFunction w1(grid1, s.mgrid, GridKind::borel_k1_domain);
    for (std::size_t jt = 0; jt < w1.nt(); ++jt) {
        cd v = theta_eval(fr, Rational(fr.k1), grid1.node(jt) / 0.7, 1e-12);
        for (std::size_t jm = 0; jm < w1.nm(); ++jm) w1.at(jt, jm) = v;
    }
    const double r1 = s.laplace_radius(fr.kappa_val(), s.alpha);
    TauGrid grid2 = make_level_grid(s, 0.9, -3.0, std::log(r1) - 0.1, 2 * 16);
    AccelReport rep;
    GridFunction acc = accelerate(s, w1, grid2, 1e-9, &rep);
    const double target = fr.k2 / (2.0 * fr.logq());
    CHECK(rep.envelope_a2 == doctest::Approx(target).epsilon(0.1));
}
