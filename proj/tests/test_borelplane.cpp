#include <cmath>
#include <random>

#include "doctest.h"
#include "instance.hpp"
#include "qsum/borelplane.hpp"
#include "qsum/errors.hpp"
#include "qsum/formal.hpp"
#include "qsum/mconv.hpp"

using namespace qsum;
using namespace testinst;

namespace {

constexpr int kL = 2 * 16;  // grid alignment x resolution
const double kDir = 88.0 * M_PI / 180.0;

TauGrid grid1(const ProblemSpec& s, double dir = kDir) {
    return make_level_grid(s, dir, -16.0, 12.0, kL);
}
TauGrid grid2(const ProblemSpec& s, double dir = kDir) {
    return make_level2_grid(s, dir, -24.0, kL);
}

BorelContext ctx1(const ProblemSpec& s, cd eps, double dir = kDir) {
    TauGrid g = grid1(s, dir);
    return make_context(s, 1, g, build_psi_k1(s, g), eps);
}

}  // namespace

TEST_CASE("qconvolve_phi: single-term case equals plain mconvolve, zero in -> zero out") {
    ProblemSpec s = bundled();
    // strip to p1 = 0: only C_{1,0} present
    s.C_data.assign(2, std::vector<Profile>(1));
    s.C_data[0][0] = gaussian_profile(s.mgrid, 0.4, 1.0);
    s.p1 = 0;
    TauGrid g = grid1(s);
    GridFunction f(g, s.mgrid, GridKind::borel_k1_domain);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t jt = 0; jt < f.nt(); ++jt)
        for (std::size_t jm = 0; jm < f.nm(); ++jm) {
            double m = s.mgrid.nodes[jm];
            f.at(jt, jm) = cd(u(rng), u(rng)) * std::exp(-0.2 * m * m);
        }

    GridFunction out = qconvolve_phi(s, 1, 0, f);
    for (std::size_t jt = 0; jt < f.nt(); jt += 41) {
        Profile direct = mconvolve(s.C_data[0][0], f.profile_at(jt), s.R_ell[0], s.mgrid);
        for (std::size_t jm = 0; jm < f.nm(); jm += 23)
            CHECK(std::abs(out.at(jt, jm) - direct[jm]) <= 1e-14 * (1.0 + std::abs(direct[jm])));
    }

    GridFunction zero(g, s.mgrid, GridKind::borel_k1_domain);
    GridFunction zout = qconvolve_phi(s, 1, 0, zero);
    for (const cd& v : zout.values) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("qconvolve_phi: unrolled-sum oracle at p1 = 2") {
    ProblemSpec s = bundled({.coeff_amp = 0.4});
    TauGrid g = grid1(s);
    GridFunction f(g, s.mgrid, GridKind::borel_k1_domain);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t jt = 0; jt < f.nt(); ++jt)
        for (std::size_t jm = 0; jm < f.nm(); ++jm) {
            double m = s.mgrid.nodes[jm];
            f.at(jt, jm) = cd(u(rng), u(rng)) * std::exp(-0.2 * m * m);
        }

    const int k = s.frame.k1;
    GridFunction out = qconvolve_phi(s, 1, 0, f);
    // independent term-by-term evaluation
    for (std::size_t jt = 160; jt + 160 < f.nt(); jt += 37) {
        for (std::size_t jm = 0; jm < f.nm(); jm += 29) {
            cd acc(0.0, 0.0);
            for (int h = 0; h <= s.p1; ++h) {
                const Profile& c = s.C_profile(0, h);
                if (c.empty()) continue;
                // sigma^{-h/k} f at node jt has index jt - h*L/k
                const int src = static_cast<int>(jt) - h * (kL / k);
                REQUIRE(src >= 0);
                cd conv = mconvolve_at(c, f.profile_at(src), s.R_ell[0], s.mgrid,
                                       s.mgrid.nodes[jm]);
                acc += std::pow(g.node(jt), h) /
                       s.frame.qpow(borel_exponent(h, Rational(k))) * conv;
            }
            CHECK(std::abs(out.at(jt, jm) - acc) <= 1e-11 * (1.0 + std::abs(acc)));
        }
    }
}

TEST_CASE("h_apply: w = 0 leaves only the forcing term") {
    ProblemSpec s = bundled();
    cd eps(0.3, 0.1);
    BorelContext ctx = ctx1(s, eps);
    GridFunction zero(ctx.grid, s.mgrid, GridKind::borel_k1_domain);
    GridFunction out = h_apply(ctx, zero);
    const double pre = s.frame.qpow(Rational(s.frame.k1 * (s.frame.k1 - 1), 2 * s.frame.k1));
    for (std::size_t jt = 0; jt < out.nt(); jt += 53)
        for (std::size_t jm = 0; jm < out.nm(); jm += 31) {
            cd expect = ctx.Psi.at(jt, jm) / (ctx.Pat(jt, jm) * pre);
            CHECK(std::abs(out.at(jt, jm) - expect) <= 1e-13 * (1.0 + std::abs(expect)));
        }
}

TEST_CASE("h_apply: pointwise three-term oracle at sample nodes") {
    ProblemSpec s = bundled({.coeff_amp = 0.4});
    cd eps(0.25, -0.1);
    BorelContext ctx = ctx1(s, eps);
    GridFunction w(ctx.grid, s.mgrid, GridKind::borel_k1_domain);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t jt = 0; jt < w.nt(); ++jt)
        for (std::size_t jm = 0; jm < w.nm(); ++jm) {
            double m = s.mgrid.nodes[jm];
            w.at(jt, jm) = cd(u(rng), u(rng)) * std::exp(-0.2 * m * m);
        }

    GridFunction out = h_apply(ctx, w);
    const auto& fr = s.frame;
    const int k = fr.k1;
    const int shift_d2 = ctx.grid.shift_of(s.dil_dD2_level1());
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t jt = 180 + 2 * static_cast<std::size_t>(trial);
        REQUIRE(jt < w.nt());
        REQUIRE(static_cast<int>(jt) + shift_d2 >= 0);
        std::size_t jm = static_cast<std::size_t>((u(rng) + 1.0) * 0.5 * (w.nm() - 1));
        const double m = s.mgrid.nodes[jm];
        const cd tau = ctx.grid.node(jt);
        const cd P = divisor_eval(s, 1, m, tau);
        // term 1: R_D2 tau^{d_D2} sigma^{d_D2(1/k2-1/k1)} w / (P q-prefactor)
        cd t1 = s.R_D2.eval_im(m) * std::pow(tau, s.d_D2) /
                fr.qpow(Rational(static_cast<std::int64_t>(s.d_D2 + k) * (s.d_D2 + k - 1), 2 * k)) *
                w.at(jt + shift_d2, jm) / P;
        // term 2: the ell-sum with dilated q-convolutions
        cd t2(0.0, 0.0);
        for (int e = 0; e < s.n_ell(); ++e) {
            GridFunction conv = qconvolve_phi(s, 1, e, w);
            const int sh = ctx.grid.shift_of(s.dil_ell(e, 1));
            cd epsw = std::pow(eps, s.Delta_ell[e] - s.d_ell[e]);
            t2 += epsw * std::pow(tau, s.d_ell[e]) /
                  fr.qpow(Rational(static_cast<std::int64_t>(s.d_ell[e] + k) *
                                       (s.d_ell[e] + k - 1), 2 * k)) *
                  conv.at(jt + sh, jm) / (P * std::sqrt(2.0 * M_PI));
        }
        // term 3: forcing
        cd t3 = ctx.Psi.at(jt, jm) /
                (P * fr.qpow(Rational(static_cast<std::int64_t>(k) * (k - 1), 2 * k)));
        cd expect = t1 + t2 + t3;
        CHECK(std::abs(out.at(jt, jm) - expect) <= 1e-11 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("solve_w level 1: constant map when C == 0 and R_D2 == 0") {
    ProblemSpec s = bundled({.with_coeffs = false, .with_RD2 = false});
    BorelContext ctx = ctx1(s, cd(0.2, 0.0));
    BorelSolution sol = solve_w(ctx, 1e-12, 10);
    CHECK(sol.iterations <= 2);
    const double pre = s.frame.qpow(Rational(s.frame.k1 * (s.frame.k1 - 1), 2 * s.frame.k1));
    for (std::size_t jt = 0; jt < sol.w.nt(); jt += 61)
        for (std::size_t jm = 0; jm < sol.w.nm(); jm += 37) {
            cd expect = ctx.Psi.at(jt, jm) / (ctx.Pat(jt, jm) * pre);
            CHECK(std::abs(sol.w.at(jt, jm) - expect) <= 1e-12 * (1.0 + std::abs(expect)));
        }
}

TEST_CASE("solve_w level 1: certified contraction and uniqueness probe") {
    ProblemSpec s = bundled();
    BorelContext ctx = ctx1(s, cd(0.3, 0.12));
    const double tol = 1e-11;
    BorelSolution sol = solve_w(ctx, tol, 40);
    CHECK(sol.contraction_ratio <= 0.5);
    CHECK(sol.residual < 2.0 * tol * std::max(1.0, sol.norm));
    CHECK(std::isfinite(sol.norm));

    // start from the forcing term instead of zero: same fixed point within 10 tol
    GridFunction seed = h_apply(ctx, GridFunction(ctx.grid, s.mgrid, GridKind::borel_k1_domain));
    BorelSolution sol2 = solve_w(ctx, tol, 40, &seed);
    GridFunction diff = sol.w;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= sol2.w.values[i];
    for (std::size_t j = 0; j < diff.tau_flags.size(); ++j)
        diff.tau_flags[j] = std::max(sol.w.tau_flags[j], sol2.w.tau_flags[j]);
    CHECK(weighted_norm(diff, ctx.norm_spec) < 10.0 * tol * std::max(1.0, sol.norm));
}

TEST_CASE("operator bounds ledger on the level-1 fixed point") {
    ProblemSpec s = bundled();
    BorelContext ctx = ctx1(s, cd(0.3, 0.12));
    BorelSolution sol = solve_w(ctx, 1e-11, 40);
    OperatorBounds ob = operator_bounds(ctx, sol.w);
    for (const auto& item : ob.items) {
        INFO(item.name, " lhs=", item.lhs, " rhs=", item.rhs);
        CHECK(item.pass(0.05));
    }
    CHECK(ob.contraction_coeff <= 0.5 * 0.9);  // (e341)-type with 10% slack
    CHECK(ob.smallness_slack >= 0.10);
    CHECK(sol.norm <= ob.ball_radius);
    CHECK(sol.contraction_ratio <= ob.contraction_coeff * 1.5 + 1e-6);
}

TEST_CASE("level 2: one-step fixed point when C == 0 and R_D1 == 0") {
    ProblemSpec s = bundled({.with_coeffs = false, .with_RD1 = false});
    TauGrid g1 = grid1(s);
    TauGrid g2 = make_level_grid(s, kDir, -24.0, 8.0, kL);  // no outward term, no band needed
    GridFunction psi2 = build_psi_k2(s, g1, g2, 1e-11);
    BorelContext ctx = make_context(s, 2, g2, psi2, cd(0.2, 0.0));
    BorelSolution sol = solve_w(ctx, 1e-12, 10);
    CHECK(sol.iterations <= 2);
    const int k2 = s.frame.k2;
    const double pre = s.frame.qpow(Rational(static_cast<std::int64_t>(k2) * (k2 - 1), 2 * k2));
    for (std::size_t jt = 0; jt < sol.w.nt(); jt += 67)
        for (std::size_t jm = 0; jm < sol.w.nm(); jm += 41) {
            cd expect = ctx.Psi.at(jt, jm) / (ctx.Pat(jt, jm) * pre);
            CHECK(std::abs(sol.w.at(jt, jm) - expect) <= 1e-12 * (1.0 + std::abs(expect)));
        }
}

TEST_CASE("exchange identity: acceleration commutes with the q-convolution") {
    // on a polynomial truncation of w (degree <= 4 in tau):
    // L_kappa(phi_{k1} *_{q;1/k1} w) = phi_{k2} *_{q;1/k2} L_kappa(w)
    ProblemSpec s = bundled({.coeff_amp = 0.4});
    const auto& fr = s.frame;
    TauGrid g1 = make_level_grid(s, kDir, -16.0, 24.0, kL);
    const double r1 = s.laplace_radius(fr.kappa_val(), s.alpha);
    TauGrid g2 = make_level_grid(s, kDir, -8.0, std::log(0.45 * r1), kL);

    // w = sum_{n<=4} P_n(m) tau^n with gaussian profiles
    std::vector<Profile> pn(5);
    for (int n = 0; n <= 4; ++n) pn[n] = gaussian_profile(s.mgrid, 0.3 / (n + 1.0), 1.0 + 0.2 * n);
    GridFunction w(g1, s.mgrid, GridKind::borel_k1_domain);
    for (std::size_t jt = 0; jt < w.nt(); ++jt) {
        cd tau = g1.node(jt);
        for (std::size_t jm = 0; jm < w.nm(); ++jm) {
            cd acc(0.0, 0.0);
            for (int n = 4; n >= 0; --n) acc = acc * tau + pn[n][jm];
            w.at(jt, jm) = acc;
        }
    }

    GridFunction lhs_pre = qconvolve_phi(s, 1, 0, w);  // phi_{k1,1} * w on g1
    GridFunction lhs = accelerate(s, lhs_pre, g2, 1e-10);
    GridFunction w_acc = accelerate(s, w, g2, 1e-10);
    GridFunction rhs = qconvolve_phi(s, 2, 0, w_acc);

    int checked = 0;
    for (std::size_t jt = 0; jt < g2.size(); ++jt) {
        if (lhs.tau_flags[jt] || rhs.tau_flags[jt]) continue;
        if (g2.radii[jt] < 0.02) continue;
        for (std::size_t jm = 0; jm < w.nm(); jm += 19) {
            double scale = 1.0 + std::abs(rhs.at(jt, jm));
            CHECK(std::abs(lhs.at(jt, jm) - rhs.at(jt, jm)) <= 2e-6 * scale);
        }
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("full level-1 -> acceleration -> level-2 chain with identity check") {
    ProblemSpec s = bundled();
    cd eps(0.3, 0.12);
    TauGrid g1 = grid1(s);
    TauGrid g2 = grid2(s);

    BorelContext c1 = make_context(s, 1, g1, build_psi_k1(s, g1), eps);
    BorelSolution w1 = solve_w(c1, 1e-11, 40);

    GridFunction psi2 = build_psi_k2(s, g1, g2, 1e-11);
    BorelContext c2 = make_context(s, 2, g2, psi2, eps);
    BorelSolution w2 = solve_w2_banded(c2, w1.w, 1e-11, 40);
    CHECK(w2.contraction_ratio <= 0.5);

    IdentityReport rep = check_accel_identity(s, w1.w, w2.w, 1e-4);
    INFO("sup rel diff = ", rep.sup_rel_diff, " over ", rep.nodes_checked, " nodes");
    CHECK(rep.pass);

    // fault injection: a 1% perturbation of w2 must trip the detector
    GridFunction w2bad = w2.w;
    for (auto& v : w2bad.values) v *= 1.01;
    IdentityReport bad = check_accel_identity(s, w1.w, w2bad, 1e-4);
    CHECK_FALSE(bad.pass);
    CHECK(bad.sup_rel_diff >= 1e-3);

    // level-2 ledger
    OperatorBounds ob2 = operator_bounds(c2, w2.w);
    for (const auto& item : ob2.items) {
        INFO(item.name, " lhs=", item.lhs, " rhs=", item.rhs);
        CHECK(item.pass(0.05));
    }
    CHECK(ob2.contraction_coeff <= 0.5 * 0.9);
}

TEST_CASE("recursion/fixed-point consistency on the Borel disc") {
    ProblemSpec s = bundled();
    cd eps(0.3, 0.12);
    BorelContext c1 = ctx1(s, eps);
    BorelSolution w1 = solve_w(c1, 1e-12, 40);
    CoefficientSeries series = solve_recursion(s, eps, 12);

    double worst = 0.0;
    int checked = 0;
    for (std::size_t jt = 0; jt < c1.grid.size(); ++jt) {
        const double r = c1.grid.radii[jt];
        if (r > 0.8 * s.rho || r < 0.02 * s.rho) continue;
        if (w1.w.tau_flags[jt]) continue;
        Profile bor = borel_eval(series, s, Rational(s.frame.k1), c1.grid.node(jt));
        for (std::size_t jm = 0; jm < w1.w.nm(); ++jm) {
            double scale = 1.0 + std::abs(bor[jm]);
            worst = std::max(worst, std::abs(bor[jm] - w1.w.at(jt, jm)) / scale);
        }
        ++checked;
    }
    INFO("disc consistency sup rel diff = ", worst, " over ", checked, " nodes");
    CHECK(checked > 10);
    CHECK(worst < 1e-5);
}
