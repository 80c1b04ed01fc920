#include "qsum/formal.hpp"

#include <algorithm>
#include <cmath>

#include "qsum/errors.hpp"
#include "qsum/mconv.hpp"
#include "qsum/norms.hpp"
#include "qsum/series.hpp"

namespace qsum {

namespace {

// least-squares line y ~ a + b n over the given points
std::pair<double, double> fit_line(const std::vector<double>& n, const std::vector<double>& y) {
    double S0 = n.size(), S1 = 0, S2 = 0, T0 = 0, T1 = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        S1 += n[i]; S2 += n[i] * n[i]; T0 += y[i]; T1 += n[i] * y[i];
    }
    double det = S0 * S2 - S1 * S1;
    double a = (S2 * T0 - S1 * T1) / det;
    double b = (S0 * T1 - S1 * T0) / det;
    return {a, b};
}

// least-squares quadratic y ~ a + b n + c n^2; returns (a, b, c)
std::array<double, 3> fit_quadratic(const std::vector<double>& n, const std::vector<double>& y) {
    double S[5] = {0, 0, 0, 0, 0}, T[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n.size(); ++i) {
        double p = 1.0;
        for (int k = 0; k < 5; ++k) { S[k] += p; p *= n[i]; }
        double py = y[i];
        for (int k = 0; k < 3; ++k) { T[k] += py; py *= n[i]; }
    }
    double A[3][4] = {{S[0], S[1], S[2], T[0]}, {S[1], S[2], S[3], T[1]}, {S[2], S[3], S[4], T[2]}};
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            double f = A[r][c] / A[c][c];
            for (int j = c; j < 4; ++j) A[r][j] -= f * A[c][j];
        }
    }
    return {A[0][3] / A[0][0], A[1][3] / A[1][1], A[2][3] / A[2][2]};
}

}  // namespace

ForcingData build_forcing(const ProblemSpec& spec) {
    const auto& F = spec.forcing.F;
    if (static_cast<int>(F.size()) < 6)
        throw InsufficientData("build_forcing: need at least 6 stored F_n");
    const auto& fr = spec.frame;
    NormSpec ebm = NormSpec::ebm(spec.beta, spec.mu);

    ForcingData out;
    std::vector<double> ns, ys;  // Borel-normalized log-norms at order k1
    for (std::size_t n = 0; n < F.size(); ++n) {
        double norm = weighted_norm(F[n], spec.mgrid, ebm);
        out.norms.push_back(norm);
        if (norm > 0.0) {
            ns.push_back(static_cast<double>(n));
            ys.push_back(std::log(norm) -
                         borel_exponent(n, Rational(fr.k1)).value() * fr.logq());
        }
    }
    if (ns.size() < 6) {
        // effectively polynomial forcing: any envelope works
        out.C_F = out.norms.empty() ? 0.0 : *std::max_element(out.norms.begin(), out.norms.end());
        out.T0 = 1.0;
        out.level1_ok = true;
        out.level2_divergent = false;
        out.slack.assign(out.norms.size(), 0.0);
        return out;
    }

    auto [a, b] = fit_line(ns, ys);
    out.T0 = std::exp(-b);
    // lift the intercept so the envelope dominates every sample
    double amax = -1e300;
    for (std::size_t i = 0; i < ns.size(); ++i) amax = std::max(amax, ys[i] - b * ns[i]);
    out.C_F = std::exp(amax);
    for (std::size_t i = 0; i < ns.size(); ++i)
        out.slack.push_back(amax + b * ns[i] - ys[i]);

    // growth faster than level k1 shows as upward convexity of y_n
    double conv = 0.0;
    int cnt = 0;
    for (std::size_t i = 2; i < ys.size(); ++i) {
        conv += ys[i] - 2.0 * ys[i - 1] + ys[i - 2];
        ++cnt;
    }
    out.level1_ok = (cnt == 0) || (conv / cnt <= 0.02 * fr.logq());

    // level-2 divergence: Borel-normalized norms at order k2 grow without bound
    std::vector<double> zs;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        auto n = static_cast<std::int64_t>(ns[i]);
        zs.push_back(ys[i] + borel_exponent(n, Rational(fr.k1)).value() * fr.logq() -
                     borel_exponent(n, Rational(fr.k2)).value() * fr.logq());
    }
    auto quad = fit_quadratic(ns, zs);
    out.level2_divergent = quad[2] > 1e-9 || (std::abs(quad[2]) <= 1e-9 && quad[1] > 1e-9);
    return out;
}

CoefficientSeries solve_recursion(const ProblemSpec& spec, cd eps, int N) {
    if (!(std::abs(eps) < spec.eps0))
        throw DomainError("solve_recursion: |eps| must be below eps0");
    const auto& fr = spec.frame;
    const std::size_t nm = spec.mgrid.size();
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);

    CoefficientSeries out;
    out.eps = eps;
    out.profiles.assign(N + 1, Profile(nm, cd(0.0, 0.0)));
    NormSpec ebm = NormSpec::ebm(spec.beta, spec.mu);

    // eps^{Delta_l - d_l} weights
    std::vector<cd> epsw(spec.n_ell());
    for (int e = 0; e < spec.n_ell(); ++e)
        epsw[e] = std::pow(eps, spec.Delta_ell[e] - spec.d_ell[e]);

    const Rational g1 = Rational(spec.d_D1, fr.k1) + Rational(1);
    const Rational g2 = Rational(spec.d_D2, fr.k2) + Rational(1);

    for (int n = 0; n <= N; ++n) {
        Profile rhs(nm, cd(0.0, 0.0));
        // forcing term F_n q^n
        if (n < spec.forcing.n_stored()) {
            const double qn = fr.qpow(Rational(n));
            for (std::size_t jm = 0; jm < nm; ++jm) rhs[jm] += spec.forcing.F[n][jm] * qn;
        }
        // delayed linear terms
        if (n >= spec.d_D1) {
            const double w = fr.qpow(g1 * Rational(n - spec.d_D1));
            for (std::size_t jm = 0; jm < nm; ++jm)
                rhs[jm] += spec.R_D1.eval_im(spec.mgrid.nodes[jm]) *
                           out.profiles[n - spec.d_D1][jm] * w;
        }
        if (n >= spec.d_D2) {
            const double w = fr.qpow(g2 * Rational(n - spec.d_D2));
            for (std::size_t jm = 0; jm < nm; ++jm)
                rhs[jm] += spec.R_D2.eval_im(spec.mgrid.nodes[jm]) *
                           out.profiles[n - spec.d_D2][jm] * w;
        }
        // convolution terms
        for (int e = 0; e < spec.n_ell(); ++e) {
            const int dl = spec.d_ell[e];
            if (n < dl || epsw[e] == cd(0.0, 0.0)) continue;
            const double w = fr.qpow(Rational(static_cast<std::int64_t>(n - dl) *
                                              spec.delta_ell[e]));
            for (int n1 = 0; n1 <= std::min(n - dl, spec.p1); ++n1) {
                const Profile& c = spec.C_profile(e, n1);
                if (c.empty()) continue;
                const int n2 = n - dl - n1;
                Profile conv = mconvolve(c, out.profiles[n2], spec.R_ell[e], spec.mgrid);
                const cd s = epsw[e] * w * inv_sqrt2pi;
                for (std::size_t jm = 0; jm < nm; ++jm) rhs[jm] += s * conv[jm];
            }
        }
        // divide by Q(im) q^n
        const double qn = fr.qpow(Rational(n));
        for (std::size_t jm = 0; jm < nm; ++jm)
            out.profiles[n][jm] = rhs[jm] / (spec.Q.eval_im(spec.mgrid.nodes[jm]) * qn);
        out.norms.push_back(weighted_norm(out.profiles[n], spec.mgrid, ebm));
        if (!std::isfinite(out.norms.back()))
            throw NonConvergence("solve_recursion: coefficient norm blew up at n=" +
                                 std::to_string(n));
    }
    return out;
}

Profile borel_eval(const CoefficientSeries& series, const ProblemSpec& spec, Rational k, cd tau) {
    const std::size_t nm = spec.mgrid.size();
    Profile acc(nm, cd(0.0, 0.0));
    for (int n = series.truncation(); n >= 0; --n) {
        const double scale = spec.frame.qpow(borel_exponent(n, k));
        for (std::size_t jm = 0; jm < nm; ++jm)
            acc[jm] = acc[jm] * tau + series.profiles[n][jm] / scale;
    }
    return acc;
}

Profile borel_eval_minterm(const CoefficientSeries& series, const ProblemSpec& spec, Rational k,
                           cd tau) {
    const std::size_t nm = spec.mgrid.size();
    // truncate at the minimal term of the norm majorant sequence
    int best_n = series.truncation();
    double best = 1e300;
    for (int n = 0; n <= series.truncation(); ++n) {
        double t = series.norms[n] * std::pow(std::abs(tau), n) /
                   spec.frame.qpow(borel_exponent(n, k));
        if (t < best) { best = t; best_n = n; }
    }
    Profile acc(nm, cd(0.0, 0.0));
    for (int n = best_n; n >= 0; --n) {
        const double scale = spec.frame.qpow(borel_exponent(n, k));
        for (std::size_t jm = 0; jm < nm; ++jm)
            acc[jm] = acc[jm] * tau + series.profiles[n][jm] / scale;
    }
    return acc;
}

cd inverse_fourier_profile(const ProblemSpec& spec, const Profile& f, cd z) {
    if (!(std::abs(z.imag()) < spec.beta_prime))
        throw DomainError("inverse_fourier_profile: |Im z| must stay below beta'");
    return inverse_fourier(f, spec.mgrid, z);
}

cd EpsExpansion::h(const ProblemSpec& spec, int m, cd t, cd z) const {
    cd acc(0.0, 0.0);
    for (int j = static_cast<int>(A[m].size()) - 1; j >= 0; --j)
        acc = acc * t + inverse_fourier_profile(spec, A[m][j], z);
    return acc;
}

cd EpsExpansion::f(const ProblemSpec& spec, int m, cd t, cd z) const {
    if (m >= spec.forcing.n_stored()) return cd(0.0, 0.0);
    double mfact = 1.0;
    for (int i = 2; i <= m; ++i) mfact *= i;
    return mfact * std::pow(t, m) * inverse_fourier_profile(spec, spec.forcing.F[m], z);
}

EpsExpansion eps_expansion(const ProblemSpec& spec, int N_eps) {
    const auto& fr = spec.frame;
    const std::size_t nm = spec.mgrid.size();
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);

    EpsExpansion out;
    out.N_eps = N_eps;
    out.A.resize(N_eps + 1);
    std::vector<double> fact(N_eps + 1, 1.0);
    for (int i = 1; i <= N_eps; ++i) fact[i] = fact[i - 1] * i;

    const Rational g1 = Rational(spec.d_D1, fr.k1) + Rational(1);
    const Rational g2 = Rational(spec.d_D2, fr.k2) + Rational(1);

    for (int m = 0; m <= N_eps; ++m) {
        out.A[m].assign(m + 1, Profile(nm, cd(0.0, 0.0)));
        for (int j = 0; j <= m; ++j) {
            Profile rhs(nm, cd(0.0, 0.0));
            // forcing: m! q^j [j == m] F_m
            if (j == m && m < spec.forcing.n_stored()) {
                const double w = fact[m] * fr.qpow(Rational(j));
                for (std::size_t jm = 0; jm < nm; ++jm) rhs[jm] += w * spec.forcing.F[m][jm];
            }
            if (m >= spec.d_D1 && j >= spec.d_D1) {
                const double w = fact[m] / fact[m - spec.d_D1] * fr.qpow(g1 * Rational(j - spec.d_D1));
                const auto& src = out.A[m - spec.d_D1][j - spec.d_D1];
                for (std::size_t jm = 0; jm < nm; ++jm)
                    rhs[jm] += w * spec.R_D1.eval_im(spec.mgrid.nodes[jm]) * src[jm];
            }
            if (m >= spec.d_D2 && j >= spec.d_D2) {
                const double w = fact[m] / fact[m - spec.d_D2] * fr.qpow(g2 * Rational(j - spec.d_D2));
                const auto& src = out.A[m - spec.d_D2][j - spec.d_D2];
                for (std::size_t jm = 0; jm < nm; ++jm)
                    rhs[jm] += w * spec.R_D2.eval_im(spec.mgrid.nodes[jm]) * src[jm];
            }
            for (int e = 0; e < spec.n_ell(); ++e) {
                const int dl = spec.d_ell[e], De = spec.Delta_ell[e];
                if (m < De) continue;
                const double wd = fr.qpow(Rational(static_cast<std::int64_t>(spec.delta_ell[e]) *
                                                   (j - dl)));
                for (int m2 = 0; m2 <= std::min(m - De, spec.p1); ++m2) {
                    const int m3 = m - De - m2;
                    const int j3 = j - dl - m2;
                    if (j3 < 0 || j3 > m3) continue;
                    const Profile& c = spec.C_profile(e, m2);
                    if (c.empty()) continue;
                    Profile conv = mconvolve(c, out.A[m3][j3], spec.R_ell[e], spec.mgrid);
                    const double s = fact[m] / fact[m3] * wd * inv_sqrt2pi;
                    for (std::size_t jm = 0; jm < nm; ++jm) rhs[jm] += s * conv[jm];
                }
            }
            const double qj = fr.qpow(Rational(j));
            for (std::size_t jm = 0; jm < nm; ++jm)
                out.A[m][j][jm] = rhs[jm] / (spec.Q.eval_im(spec.mgrid.nodes[jm]) * qj);
        }
    }
    return out;
}

double EpsExpansion::residual(const ProblemSpec& spec, const std::vector<cd>& t_samples,
                              const std::vector<cd>& z_samples) const {
    const auto& fr = spec.frame;
    const std::size_t nm = spec.mgrid.size();
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
    std::vector<double> fact(N_eps + 1, 1.0);
    for (int i = 1; i <= N_eps; ++i) fact[i] = fact[i - 1] * i;

    const Rational g1 = Rational(spec.d_D1, fr.k1) + Rational(1);
    const Rational g2 = Rational(spec.d_D2, fr.k2) + Rational(1);
    double worst = 0.0;

    // profile of h_m at fixed t (Fourier side): sum_j t^j A_{m,j}
    auto fourier_profile = [&](int m, cd t) {
        Profile p(nm, cd(0.0, 0.0));
        for (int j = static_cast<int>(A[m].size()) - 1; j >= 0; --j)
            for (std::size_t jm = 0; jm < nm; ++jm) p[jm] = p[jm] * t + A[m][j][jm];
        return p;
    };

    for (cd t : t_samples) {
        for (int m = 0; m <= N_eps; ++m) {
            // LHS: Q(im) Hhat_m(q t); RHS assembled per the recursion
            Profile lhs = fourier_profile(m, fr.q * t);
            for (std::size_t jm = 0; jm < nm; ++jm) lhs[jm] *= spec.Q.eval_im(spec.mgrid.nodes[jm]);
            Profile rhs(nm, cd(0.0, 0.0));
            if (m < spec.forcing.n_stored()) {
                const cd w = fact[m] * std::pow(fr.q * t, m);
                for (std::size_t jm = 0; jm < nm; ++jm) rhs[jm] += w * spec.forcing.F[m][jm];
            }
            if (m >= spec.d_D1) {
                Profile src = fourier_profile(m - spec.d_D1, fr.qpow(g1) * t);
                const cd w = fact[m] / fact[m - spec.d_D1] * std::pow(t, spec.d_D1);
                for (std::size_t jm = 0; jm < nm; ++jm)
                    rhs[jm] += w * spec.R_D1.eval_im(spec.mgrid.nodes[jm]) * src[jm];
            }
            if (m >= spec.d_D2) {
                Profile src = fourier_profile(m - spec.d_D2, fr.qpow(g2) * t);
                const cd w = fact[m] / fact[m - spec.d_D2] * std::pow(t, spec.d_D2);
                for (std::size_t jm = 0; jm < nm; ++jm)
                    rhs[jm] += w * spec.R_D2.eval_im(spec.mgrid.nodes[jm]) * src[jm];
            }
            for (int e = 0; e < spec.n_ell(); ++e) {
                const int dl = spec.d_ell[e], De = spec.Delta_ell[e];
                if (m < De) continue;
                const cd td = std::pow(t, dl);
                const cd qdt = fr.qpow(Rational(spec.delta_ell[e])) * t;
                for (int m2 = 0; m2 <= std::min(m - De, spec.p1); ++m2) {
                    const int m3 = m - De - m2;
                    const Profile& c = spec.C_profile(e, m2);
                    if (c.empty()) continue;
                    Profile src = fourier_profile(m3, qdt);
                    Profile conv = mconvolve(c, src, spec.R_ell[e], spec.mgrid);
                    const cd s = fact[m] / fact[m3] * td * std::pow(qdt, m2) * inv_sqrt2pi;
                    for (std::size_t jm = 0; jm < nm; ++jm) rhs[jm] += s * conv[jm];
                }
            }
            for (cd z : z_samples) {
                cd L = inverse_fourier_profile(spec, lhs, z);
                cd R = inverse_fourier_profile(spec, rhs, z);
                double scale = std::max({std::abs(L), std::abs(R), 1e-30});
                worst = std::max(worst, std::abs(L - R) / scale);
            }
        }
    }
    return worst;
}

}  // namespace qsum
