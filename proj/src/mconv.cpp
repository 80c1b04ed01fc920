#include "qsum/mconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsum/errors.hpp"

namespace qsum {

namespace {

// f sampled on the grid, evaluated at arbitrary x by linear interpolation,
// zero outside [-M_max, M_max].
cd interp_profile(const Profile& f, const MGrid& g, double x) {
    if (x < g.nodes.front() || x > g.nodes.back()) return cd(0.0, 0.0);
    double t = (x - g.nodes.front()) / g.h;
    auto i = static_cast<std::size_t>(t);
    if (i >= f.size() - 1) return f.back();
    double w = t - static_cast<double>(i);
    return f[i] * (1.0 - w) + f[i + 1] * w;
}

double end_mass(const Profile& f) {
    return std::abs(f.front()) + std::abs(f.back());
}

}  // namespace

Profile mconvolve(const Profile& f, const Profile& g, const CPoly& Q, const MGrid& grid,
                  double boundary_tol) {
    const std::size_t n = grid.size();
    if (f.size() != n || g.size() != n) throw DomainMismatch("mconvolve: profile size mismatch");

    std::vector<cd> qg(n);
    double sum_abs_qg = 0.0, sum_abs_f = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        qg[j] = Q.eval_im(grid.nodes[j]) * g[j];
        sum_abs_qg += grid.smooth_weights[j] * std::abs(qg[j]);
        sum_abs_f += grid.smooth_weights[j] * std::abs(f[j]);
    }
    // Truncation monitor: mass sitting at the grid ends on either factor.
    const double bnd = end_mass(f) * sum_abs_qg + (std::abs(qg.front()) + std::abs(qg.back())) * sum_abs_f;
    if (bnd > boundary_tol * (1.0 + sum_abs_f * sum_abs_qg))
        throw TruncationError("mconvolve: boundary mass exceeds tolerance (enlarge M_max)");

    // support of the kernel factor: terms below 1e-22 of its peak contribute
    // under the rounding noise of the sum and are skipped
    double fmax = 0.0;
    for (const cd& v : f) fmax = std::max(fmax, std::abs(v));
    const double cut = 1e-22 * fmax;
    int s_lo = 0, s_hi = static_cast<int>(n) - 1;
    while (s_lo < static_cast<int>(n) && std::abs(f[s_lo]) <= cut) ++s_lo;
    while (s_hi >= 0 && std::abs(f[s_hi]) <= cut) --s_hi;

    Profile out(n, cd(0.0, 0.0));
    const int half = static_cast<int>((n - 1) / 2);
    for (int i = 0; i < static_cast<int>(n); ++i) {
        cd acc(0.0, 0.0);
        // m_i - m_j lands exactly on the lattice: f index = i - j + half
        const int lo = std::max(0, i + half - s_hi);
        const int hi = std::min(static_cast<int>(n) - 1, i + half - s_lo);
        for (int j = lo; j <= hi; ++j) {
            const int fi = i - j + half;
            acc += grid.smooth_weights[j] * f[fi] * qg[j];
        }
        out[i] = acc;
    }
    return out;
}

cd mconvolve_at(const Profile& f, const Profile& g, const CPoly& Q, const MGrid& grid, double m) {
    const std::size_t n = grid.size();
    if (f.size() != n || g.size() != n) throw DomainMismatch("mconvolve_at: profile size mismatch");
    cd acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        acc += grid.smooth_weights[j] * interp_profile(f, grid, m - grid.nodes[j]) *
               Q.eval_im(grid.nodes[j]) * g[j];
    return acc;
}

cd inverse_fourier(const Profile& f, const MGrid& grid, cd z, double boundary_tol) {
    const std::size_t n = grid.size();
    if (f.size() != n) throw DomainMismatch("inverse_fourier: profile size mismatch");
    cd acc(0.0, 0.0);
    double sum_abs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        cd term = f[j] * std::exp(cd(0.0, 1.0) * z * grid.nodes[j]);
        acc += grid.smooth_weights[j] * term;
        sum_abs += grid.smooth_weights[j] * std::abs(term);
    }
    const double izf = std::abs(z.imag());
    const double endw = std::exp(izf * grid.M_max);
    const double bnd = (std::abs(f.front()) + std::abs(f.back())) * endw;
    if (bnd > boundary_tol * (1.0 + sum_abs))
        throw TruncationError("inverse_fourier: boundary mass exceeds tolerance");
    return acc / std::sqrt(2.0 * M_PI);
}

double convolution_bound_constant(const CPoly& Q, const CPoly& R, double mu) {
    const int dq = Q.degree(), dr = R.degree();
    if (!(mu > dq + 1)) throw ParameterError("convolution_bound_constant: need mu > deg(Q)+1");

    // Polynomial envelopes: Qbar >= |Q(im)|/(1+|m|)^dq, Rbar <= |R(im)|/(1+|m|)^dr.
    double Qbar = 0.0, Rbar = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 40000; ++i) {
        double m = 0.01 * i;
        double wq = std::abs(Q.eval_im(m)) / std::pow(1.0 + m, dq);
        double wr = std::abs(R.eval_im(m)) / std::pow(1.0 + m, dr);
        double wqn = std::abs(Q.eval_im(-m)) / std::pow(1.0 + m, dq);
        double wrn = std::abs(R.eval_im(-m)) / std::pow(1.0 + m, dr);
        Qbar = std::max({Qbar, wq, wqn});
        Rbar = std::min({Rbar, wr, wrn});
    }
    Qbar *= 1.001;
    Rbar *= 0.999;
    if (!(Rbar > 0.0)) throw DivisorDegenerate("convolution_bound_constant: R(im) vanishes");

    // sup_m (1+|m|)^{mu-dr} * int (1+|m-m1|)^{-mu} (1+|m1|)^{dq-mu} dm1; the sup
    // is attained at moderate m since the integral decays faster than the weight grows.
    const double Mint = 400.0, hint = 0.02;
    auto inner = [&](double m) {
        double s = 0.0;
        for (double m1 = -Mint; m1 <= Mint; m1 += hint)
            s += hint * std::pow(1.0 + std::abs(m - m1), -mu) * std::pow(1.0 + std::abs(m1), dq - mu);
        // analytic tail: for |m1| > Mint >= 2|m|, (1+|m1-m|) >= (1+|m1|/2)
        s += 2.0 * std::pow(2.0, mu) * std::pow(1.0 + Mint, dq - 2.0 * mu + 1.0) / (2.0 * mu - dq - 1.0);
        return s;
    };
    double sup = 0.0;
    for (double m = 0.0; m <= 120.0; m += 0.5)
        sup = std::max(sup, std::pow(1.0 + m, mu - dr) * inner(m));
    return (Qbar / Rbar) * sup * 1.02;  // small padding over the lattice sup
}

}  // namespace qsum
