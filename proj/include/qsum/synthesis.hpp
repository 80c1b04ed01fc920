#pragma once

#include "qsum/borelplane.hpp"
#include "qsum/formal.hpp"

namespace qsum {

// One directional solution: the level-2 Borel data plus everything needed to
// evaluate U^{d_p}(T, m), u^{d_p}(t, z, eps) and the forcing transforms.
struct SectorialSolution {
    const ProblemSpec* spec = nullptr;
    int p = 0;                  // direction index
    double direction = 0.0;
    cd eps{0.0, 0.0};
    GridFunction w2;            // level-2 Borel solution (body + continuation band)
    GridFunction psi2;          // Psi_{k2} on the same ladder
    double quad_tol = 1e-10;
    double delta_tilde = 0.1;

    // U^{d_p}(T, m-profile): q-Laplace of order k2 of w2 along the ray.
    Profile U(cd T) const;
    // F^{d_p}(T, m-profile): same transform applied to Psi_{k2}.
    Profile F(cd T) const;

    // u^{d_p}(t,z,eps) and f^{d_p}(t,z,eps); enforces t in T-sector, |Im z| < beta',
    // eps*t in R^b_{d_p}.
    cd u(cd t, cd z) const;
    cd f(cd t, cd z) const;

    void check_point(cd t, cd z) const;
};

SectorialSolution make_sectorial(const ProblemSpec& spec, int p, double direction, cd eps,
                                 GridFunction w2, GridFunction psi2, double quad_tol);

struct ResidualReport {
    double max_rel_residual = 0.0;
    int samples = 0;
    std::vector<double> per_sample;
};

// Fourier-side residual of the main functional equation at (T, m) samples:
// every dilation is exact (sigma_q^gamma U(T) = U(q^gamma T)) and the
// coefficient term uses the m-convolution; no numerical differentiation.
// perturb scales the w2 data by (1 + perturb) for fault injection.
ResidualReport residual_check(const SectorialSolution& sol, const std::vector<cd>& T_samples,
                              const std::vector<double>& m_samples, double perturb = 0.0);

// Largest |T| for which every dilation in the residual stays inside the
// evaluable Laplace domain; s_top is the log-radius of the level-2 ladder end
// (the quadrature window must close below it).
double residual_T_cap(const ProblemSpec& spec, double s_top);

}  // namespace qsum
