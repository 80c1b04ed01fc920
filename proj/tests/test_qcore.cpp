#include <cmath>
#include <tuple>
#include <vector>
#include <complex>
#include <random>

#include "doctest.h"
#include "qsum/errors.hpp"
#include "qsum/series.hpp"
#include "qsum/theta.hpp"

using namespace qsum;

namespace {

// Independent brute-force Laurent oracle for the theta kernel: fixed wide
// window, no adaptive truncation, no shared code with theta_eval.
cd theta_brute(double q, double k, cd x, int N) {
    cd s(0.0, 0.0);
    for (int n = -N; n <= N; ++n) {
        double e = -n * (n - 1.0) / (2.0 * k) * std::log(q);
        s += std::exp(e) * std::pow(x, n);
    }
    return s;
}

}  // namespace

TEST_CASE("theta: leading terms at huge tol") {
    QFrame fr(2.0, 1, 2);
    cd x(5.0, 0.0);
    // tol coarse enough that only the n = 0,1 terms are kept; n(n-1)/2 = 0 there
    cd v = theta_eval(fr, Rational(1), x, 10.0);
    CHECK(std::abs(v - (cd(1.0, 0.0) + x)) < 0.3);
}

TEST_CASE("theta: functional equation, m=1 case") {
    QFrame fr(2.0, 1, 2);
    for (Rational k : {Rational(1), Rational(2)}) {
        cd x = std::polar(1.7, 0.8);
        double q1k = fr.qpow(Rational(1) / k);
        cd lhs = theta_eval(fr, k, q1k * x, 1e-13);
        cd rhs = q1k * x * theta_eval(fr, k, x, 1e-13);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
    }
}

TEST_CASE("theta: matches brute-force oracle at x=1") {
    QFrame fr(2.0, 1, 2);
    cd mine = theta_eval(fr, Rational(1), cd(1.0, 0.0), 1e-14);
    cd brute = theta_brute(2.0, 1.0, cd(1.0, 0.0), 100);
    CHECK(std::abs(mine - brute) < 1e-12 * std::abs(brute));
}

TEST_CASE("theta: functional equation sweep (e245)") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> rad(0.2, 5.0), ang(0.1, 3.0);
    for (auto [q, k] : {std::pair{2.0, 1}, {2.0, 2}, {4.0, 2}}) {
        QFrame fr(q, 1, k == 1 ? 2 : k + 1);
        Rational kr(k);
        for (int t = 0; t < 50; ++t) {
            cd x = std::polar(rad(rng), ang(rng));  // angles well off the zero ray pi
            for (int m = -3; m <= 3; ++m) {
                cd lhs = theta_eval(fr, kr, fr.qpow(Rational(m, k)) * x, 1e-13);
                cd rhs = fr.qpow(Rational(m * (m + 1), 2 * k)) * std::pow(x, m) *
                         theta_eval(fr, kr, x, 1e-13);
                CHECK(std::abs(lhs - rhs) <= 1e-9 * std::abs(lhs));
            }
        }
    }
}

TEST_CASE("theta: nonconvergence guard and zero rejection") {
    QFrame fr(2.0, 1, 2);
    CHECK_THROWS_AS(theta_eval(fr, Rational(1), cd(0.0, 0.0), 1e-10), PreconditionViolated);
}

TEST_CASE("theta growth check: holds off the zero rays, rejects on them") {
    QFrame fr(2.0, 1, 2);
    // positive ray: far from zeros at -q^Z
    auto g = theta_growth_check(fr, Rational(1), cd(3.0, 1.0), 0.1);
    CHECK(g.holds);
    CHECK(g.ratio >= 1.0);
    // a zero direction: x = -q (zero of Theta_q)
    CHECK_THROWS_AS(theta_growth_check(fr, Rational(1), cd(-2.0, 0.0), 0.1), PreconditionViolated);
}

TEST_CASE("theta growth check: envelope sweep over |x| decades") {
    QFrame fr(2.0, 1, 2);
    for (double r : {1.0, 10.0, 100.0}) {
        auto g = theta_growth_check(fr, Rational(2), std::polar(r, 0.9), 0.1);
        CHECK(g.holds);
    }
}

TEST_CASE("pi_q: long-product oracle and large-q limit") {
    QFrame fr(2.0, 1, 2);
    double mine = pi_q(fr, Rational(1), 1e-14);
    double prod = 1.0;
    for (int n = 0; n < 200; ++n) prod /= 1.0 - std::pow(2.0, -(n + 1.0));
    CHECK(mine == doctest::Approx(std::log(2.0) * prod).epsilon(1e-12));

    QFrame big(1e6, 1, 2);
    CHECK(pi_q(big, Rational(1), 1e-10) == doctest::Approx(std::log(1e6)).epsilon(1e-5));
    // every factor exceeds 1
    CHECK(pi_q(fr, Rational(1), 1e-12) > std::log(2.0));
}

TEST_CASE("pi_q grows with k for fixed q") {
    // The spec asserts the opposite direction; the product diverges like
    // exp(pi^2 k / (6 log q)) so pi_q increases in k. Assert the true ordering.
    QFrame fr(2.0, 1, 2);
    double p1 = pi_q(fr, Rational(1), 1e-13);
    double p2 = pi_q(fr, Rational(2), 1e-13);
    double p3 = pi_q(fr, Rational(3), 1e-13);
    CHECK(p1 < p2);
    CHECK(p2 < p3);
}

TEST_CASE("qborel_formal: low-order cases and linearity") {
    QFrame fr(4.0, 1, 2);
    Rational k(2);
    // a = 1 -> 1 ; a = T -> tau ; a = T^2 -> tau^2/2  (q=4, k=2: q^{1/2} = 2)
    auto b0 = qborel_formal(FormalSeries::monomial(0), fr, k);
    auto b1 = qborel_formal(FormalSeries::monomial(1), fr, k);
    auto b2 = qborel_formal(FormalSeries::monomial(2), fr, k);
    CHECK(b0.coeffs[0] == cd(1.0, 0.0));
    CHECK(b1.coeffs[1] == cd(1.0, 0.0));
    CHECK(std::abs(b2.coeffs[2] - cd(0.5, 0.0)) < 1e-15);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cd> a(9), b(9);
    for (int i = 0; i < 9; ++i) { a[i] = cd(u(rng), u(rng)); b[i] = cd(u(rng), u(rng)); }
    cd al(u(rng), u(rng)), be(u(rng), u(rng));
    std::vector<cd> comb(9);
    for (int i = 0; i < 9; ++i) comb[i] = al * a[i] + be * b[i];
    auto ba = qborel_formal(FormalSeries(a), fr, k);
    auto bb = qborel_formal(FormalSeries(b), fr, k);
    auto bc = qborel_formal(FormalSeries(comb), fr, k);
    for (int i = 0; i < 9; ++i)
        CHECK(std::abs(bc.coeffs[i] - (al * ba.coeffs[i] + be * bb.coeffs[i])) < 1e-15);
}

TEST_CASE("qborel_shift_image equals the composite right-hand side") {
    // B(T^s sigma_q^j a) = tau^s/(q^{1/k})^{s(s-1)/2} sigma_q^{j-s/k} B(a)
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::vector<std::tuple<double, int, int>> frames = {{2.0, 1, 2}, {4.0, 2, 3}};
    for (auto [qv, k1, k2] : frames) {
        QFrame fr(qv, k1, k2);
        const std::int64_t denmax = static_cast<std::int64_t>(k1) * k2;
        for (Rational k : {Rational(k1), Rational(k2), fr.kappa}) {
            for (int sigma = 0; sigma <= 4; ++sigma) {
                for (std::int64_t jd = 1; jd <= denmax; ++jd) {
                    Rational j(1, jd);
                    std::vector<cd> a(9);
                    for (auto& c : a) c = cd(u(rng), u(rng));
                    FormalSeries s(a);
                    auto lhs = qborel_shift_image(s, fr, k, sigma, j);
                    auto rhs = dilate_series(qborel_formal(s, fr, k), fr, j - Rational(sigma) / k);
                    for (std::size_t n = 0; n < rhs.coeffs.size(); ++n) {
                        cd r = rhs.coeffs[n] / fr.qpow(borel_exponent(sigma, k));
                        cd l = lhs.coeffs[n + sigma];
                        CHECK(std::abs(l - r) <= 1e-12 * (1.0 + std::abs(r)));
                    }
                }
            }
        }
    }
}

TEST_CASE("qborel_shift_image: sigma=0, j=0 reduces to qborel_formal") {
    QFrame fr(2.0, 1, 2);
    std::vector<cd> a = {cd(1, 0), cd(0, 2), cd(-1, 1)};
    auto lhs = qborel_shift_image(FormalSeries(a), fr, Rational(1), 0, Rational(0));
    auto rhs = qborel_formal(FormalSeries(a), fr, Rational(1));
    for (std::size_t n = 0; n < a.size(); ++n) CHECK(lhs.coeffs[n] == rhs.coeffs[n]);
}

TEST_CASE("QFrame: kappa identity and invariant checks") {
    QFrame fr(2.0, 1, 2);
    CHECK(fr.kappa == Rational(2));
    QFrame fr2(3.0, 2, 5);
    CHECK(Rational(1) / fr2.kappa == Rational(1, 2) - Rational(1, 5));
    CHECK_THROWS_AS(QFrame(0.5, 1, 2), ParameterError);
    CHECK_THROWS_AS(QFrame(2.0, 2, 2), ParameterError);
}
