#pragma once

#include <vector>

#include "qsum/geometry.hpp"
#include "qsum/laplace.hpp"
#include "qsum/norms.hpp"
#include "qsum/problem.hpp"

namespace qsum {

// Borel transforms of the coefficient polynomials and the forcing on one ray.
struct PhiData {
    GridFunction Psi_k1;  // level-1 grid, order-k1 Borel transform of the forcing
    GridFunction Psi_k2;  // level-2 grid, its order-kappa acceleration
    double C_psi1 = 0.0;  // ||Psi_k1||_{(kappa,beta,mu,alpha,rho)}
    double C_psi2 = 0.0;  // ||Psi_k2||_{(k2,beta,mu,nu)}
};

struct BorelSolution {
    GridFunction w;
    int level = 1;
    double direction = 0.0;
    cd eps{0.0, 0.0};
    double norm = 0.0;
    double contraction_ratio = 0.0;
    int iterations = 0;
    double residual = 0.0;  // ||w - H(w)|| after acceptance
};

// Solver context for one (direction, level): grids, divisor values, forcing.
struct BorelContext {
    const ProblemSpec* spec = nullptr;
    int level = 1;
    TauGrid grid;
    GridFunction Psi;          // forcing term on this grid
    std::vector<cd> P;         // divisor P_{m,level}(tau) per (jt, jm), row-major
    std::vector<double> P_over_R;  // per tau node: min_m |P(tau,m)|/|R_level(im)|
    BoundCertificate cert;
    cd eps{0.0, 0.0};
    NormSpec norm_spec;

    const cd& Pat(std::size_t jt, std::size_t jm) const { return P[jt * Psi.nm() + jm]; }
};

// Tau ladder along `direction` spanning [exp(s_min), exp(s_max)], alignment L
// (must be a multiple of the problem's dilation alignment).
TauGrid make_level_grid(const ProblemSpec& spec, double direction, double s_min, double s_max,
                        int L);

// Largest log-radius on which the level-2 operator stays pointwise contractive:
// the outward-dilated R_D1 term has gain sup_m |R_D1 tau^{d_D1}/(q^{..} P_{m,2})|,
// which grows with |tau| until the divisor turns over; nodes beyond the radius
// where the gain reaches `gain_cap` belong to the flagged buffer band.
double level2_contraction_smax(const ProblemSpec& spec, double gain_cap = 0.2);

// Level-2 ladder: body up to min(level2_contraction_smax, s_max_cap) plus the
// flagged buffer of one outward-shift width and quadrature headroom.
TauGrid make_level2_grid(const ProblemSpec& spec, double direction, double s_min, int L,
                         double s_max_cap = 10.0, double gain_cap = 0.2);

// Psi_{k1} sampled on a level-1 grid (from the forcing generator).
GridFunction build_psi_k1(const ProblemSpec& spec, const TauGrid& grid1);

// Psi_{k2} = L_{q;1/kappa}(Psi_k1) on a level-2 grid, computed componentwise
// from the forcing generator (profile x scalar-transform structure).
GridFunction build_psi_k2(const ProblemSpec& spec, const TauGrid& grid1, const TauGrid& grid2,
                          double tol);

BorelContext make_context(const ProblemSpec& spec, int level, const TauGrid& grid,
                          GridFunction psi, cd eps, double cert_floor = 1e-3);

// q-convolution phi_{k,l} *^{R_l}_{q;1/k} f = sum_h tau^h/(q^{1/k})^{h(h-1)/2}
// c_h *^{R_l} (sigma^{-h/k} f); dilation exact by grid shift.
GridFunction qconvolve_phi(const ProblemSpec& spec, int level, int ell_index,
                           const GridFunction& f);

// One application of the fixed-point operator H^level_eps.
GridFunction h_apply(const BorelContext& ctx, const GridFunction& w);

// Picard iteration from w0 (default 0) until the successive-iterate norm falls
// below tol * max(1, ||w||). NonContraction if the empirical ratio stays above
// 0.95 for 5 consecutive iterations. When band_start >= 0, rows >= band_start
// are held fixed at w0's values (the level-2 outer band, filled from the
// acceleration of the level-1 solution) and only the body is iterated.
BorelSolution solve_w(const BorelContext& ctx, double tol, int max_iter,
                      const GridFunction* w0 = nullptr, int band_start = -1);

struct AccelReport {
    double envelope_a2 = 0.0;    // fitted coefficient of log^2|tau| (target k2/(2 log q))
    double max_tail_log = -1e300;
};

// Acceleration L_{q;1/kappa} of a level-1 solution onto a level-2 grid; ray
// quadrature on the level-1 ladder, kernels shared across m. Targets beyond the
// worst-case radius q^{(1/2-alpha)/kappa}/2 are flagged and skipped unless
// bounded_input is set (valid when the level-1 data decays; the adaptive window
// itself rejects non-convergent tails).
GridFunction accelerate(const ProblemSpec& spec, const GridFunction& w1, const TauGrid& grid2,
                        double tol, AccelReport* report = nullptr, bool bounded_input = false);

// Level-2 solve: Picard on the contractive body of the ladder with the outer
// band held at accelerate(w1) values (the continuation identity).
BorelSolution solve_w2_banded(const BorelContext& ctx, const GridFunction& w1, double tol,
                              int max_iter);

struct IdentityReport {
    double sup_rel_diff = 0.0;
    int nodes_checked = 0;
    bool pass = false;
};

// (accelerate(w1) vs w2) on the overlap sector |tau| <= r1(kappa, alpha)/safety.
IdentityReport check_accel_identity(const ProblemSpec& spec, const GridFunction& w1,
                                    const GridFunction& w2, double tol);

struct BoundItem {
    std::string name;
    double lhs = 0.0, rhs = 0.0;
    double slack() const { return rhs > 0.0 ? 1.0 - lhs / rhs : -1.0; }
    bool pass(double tol = 0.05) const { return lhs <= rhs * (1.0 + tol); }
};

struct OperatorBounds {
    std::vector<BoundItem> items;       // per-term norm bounds on the fixed point
    double contraction_coeff = 0.0;     // certified Lipschitz coefficient
    double smallness_slack = 0.0;       // slack of the (e292)-type self-map bound
    double ball_radius = 0.0;           // the varpi used
};

// Per-term norm-bound ledger with grid-certified constants, evaluated on the
// actual fixed point.
OperatorBounds operator_bounds(const BorelContext& ctx, const GridFunction& w);

}  // namespace qsum
