#include "qsum/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "qsum/errors.hpp"
#include "qsum/geometry.hpp"
#include "qsum/laplace.hpp"
#include "qsum/mconv.hpp"

namespace qsum {

Profile SectorialSolution::U(cd T) const {
    return qlaplace_grid(w2, Rational(spec->frame.k2), T, quad_tol, delta_tilde);
}

Profile SectorialSolution::F(cd T) const {
    return qlaplace_grid(psi2, Rational(spec->frame.k2), T, quad_tol, delta_tilde);
}

void SectorialSolution::check_point(cd t, cd z) const {
    const ProblemSpec& s = *spec;
    if (!(std::abs(t) > 0.0) || std::abs(t) > s.r_T)
        throw DomainError("sectorial evaluation: t outside the time sector radius");
    double da = std::arg(t) - s.T_direction;
    while (da > M_PI) da -= 2.0 * M_PI;
    while (da < -M_PI) da += 2.0 * M_PI;
    if (std::abs(da) > s.T_half_aperture)
        throw DomainError("sectorial evaluation: t outside the time sector aperture");
    if (!(std::abs(z.imag()) < s.beta_prime))
        throw DomainError("sectorial evaluation: |Im z| must stay below beta'");
    cd T = eps * t;
    if (!(std::abs(T) <= s.eps0 * s.r_T * (1.0 + 1e-12)))
        throw DomainError("sectorial evaluation: |eps t| exceeds eps0 r_T");
    if (!in_R_domain(T, direction, delta_tilde))
        throw DomainError("sectorial evaluation: eps t outside R_{d,delta_tilde}");
}

cd SectorialSolution::u(cd t, cd z) const {
    check_point(t, z);
    Profile prof = U(eps * t);
    return inverse_fourier(prof, spec->mgrid, z);
}

cd SectorialSolution::f(cd t, cd z) const {
    check_point(t, z);
    Profile prof = F(eps * t);
    return inverse_fourier(prof, spec->mgrid, z);
}

SectorialSolution make_sectorial(const ProblemSpec& spec, int p, double direction, cd eps,
                                 GridFunction w2, GridFunction psi2, double quad_tol) {
    SectorialSolution s;
    s.spec = &spec;
    s.p = p;
    s.direction = direction;
    s.eps = eps;
    s.w2 = std::move(w2);
    s.psi2 = std::move(psi2);
    s.quad_tol = quad_tol;
    s.delta_tilde = spec.delta_tilde;
    return s;
}

double residual_T_cap(const ProblemSpec& spec, double s_top) {
    const auto& fr = spec.frame;
    double gmax = 1.0;
    gmax = std::max(gmax, static_cast<double>(spec.d_D1) / fr.k1 + 1.0);
    gmax = std::max(gmax, static_cast<double>(spec.d_D2) / fr.k2 + 1.0);
    for (int e = 0; e < spec.n_ell(); ++e)
        gmax = std::max(gmax, static_cast<double>(spec.delta_ell[e]));
    const double r1b = spec.laplace_radius(fr.k2, spec.nu);
    // the outer quadrature window (~11.5 in log radius at tol 1e-10) of the
    // most-dilated argument must close below the ladder end
    const double ladder_cap = std::exp(s_top - 11.5);
    return std::min(0.5 * r1b, ladder_cap) / fr.qpow(gmax);
}

ResidualReport residual_check(const SectorialSolution& sol, const std::vector<cd>& T_samples,
                              const std::vector<double>& m_samples, double perturb) {
    const ProblemSpec& s = *sol.spec;
    const auto& fr = s.frame;
    const std::size_t nm = s.mgrid.size();
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);

    SectorialSolution work = sol;
    if (perturb != 0.0)
        for (auto& v : work.w2.values) v *= 1.0 + perturb;

    // snap requested m samples to grid nodes
    std::vector<std::size_t> midx;
    for (double m : m_samples) {
        double t = (m - s.mgrid.nodes.front()) / s.mgrid.h;
        auto i = static_cast<std::size_t>(std::clamp(std::lround(t), 0L,
                                                     static_cast<long>(nm - 1)));
        midx.push_back(i);
    }

    const Rational g1 = Rational(s.d_D1, fr.k1) + Rational(1);
    const Rational g2 = Rational(s.d_D2, fr.k2) + Rational(1);

    const bool has_RD1 = !s.R_D1.is_zero();
    const bool has_RD2 = !s.R_D2.is_zero();
    ResidualReport rep;
    for (cd T : T_samples) {
        Profile U_q = work.U(fr.q * T);
        Profile U_g1 = has_RD1 ? work.U(fr.qpow(g1) * T) : Profile(nm, cd(0.0, 0.0));
        Profile U_g2 = has_RD2 ? work.U(fr.qpow(g2) * T) : Profile(nm, cd(0.0, 0.0));
        Profile F_q = work.F(fr.q * T);

        // coefficient terms need full profiles at the delta_l-dilated arguments
        std::vector<Profile> conv_terms(s.n_ell());
        for (int e = 0; e < s.n_ell(); ++e) {
            const cd epsw = std::pow(work.eps, s.Delta_ell[e] - s.d_ell[e]);
            if (epsw == cd(0.0, 0.0)) continue;
            bool has_c = false;
            for (int j = 0; j <= s.p1; ++j)
                if (!s.C_profile(e, j).empty()) has_c = true;
            if (!has_c) continue;
            const cd Td = fr.qpow(Rational(s.delta_ell[e])) * T;
            Profile U_d = work.U(Td);
            // C_l(Td, m) profile
            Profile c_of_T(nm, cd(0.0, 0.0));
            for (int j = s.p1; j >= 0; --j) {
                const Profile& c = s.C_profile(e, j);
                for (std::size_t jm = 0; jm < nm; ++jm)
                    c_of_T[jm] = c_of_T[jm] * Td + (c.empty() ? cd(0.0, 0.0) : c[jm]);
            }
            conv_terms[e] = mconvolve(c_of_T, U_d, s.R_ell[e], s.mgrid);
        }

        double worst = 0.0;
        for (std::size_t i : midx) {
            const double m = s.mgrid.nodes[i];
            cd lhs = s.Q.eval_im(m) * U_q[i];
            cd t1 = std::pow(T, s.d_D1) * s.R_D1.eval_im(m) * U_g1[i];
            cd t2 = std::pow(T, s.d_D2) * s.R_D2.eval_im(m) * U_g2[i];
            cd t3(0.0, 0.0);
            for (int e = 0; e < s.n_ell(); ++e) {
                if (conv_terms[e].empty()) continue;
                t3 += std::pow(work.eps, s.Delta_ell[e] - s.d_ell[e]) *
                      std::pow(T, s.d_ell[e]) * inv_sqrt2pi * conv_terms[e][i];
            }
            cd t4 = F_q[i];
            cd rhs = t1 + t2 + t3 + t4;
            double scale = std::max({std::abs(lhs), std::abs(t1), std::abs(t2), std::abs(t3),
                                     std::abs(t4), 1e-30});
            worst = std::max(worst, std::abs(lhs - rhs) / scale);
        }
        rep.per_sample.push_back(worst);
        rep.max_rel_residual = std::max(rep.max_rel_residual, worst);
        ++rep.samples;
    }
    return rep;
}

}  // namespace qsum
