#include "qsum/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsum/errors.hpp"
#include "qsum/series.hpp"

namespace qsum {

cd ForcingSpec::psi_k1(cd tau, std::size_t jm, const QFrame& fr) const {
    if (kind == Kind::geometric) {
        return g[jm] * T0 / (T0 - tau);
    }
    cd acc(0.0, 0.0);
    for (int n = n_stored() - 1; n >= 0; --n)
        acc = acc * tau + F[n][jm] / fr.qpow(borel_exponent(n, Rational(fr.k1)));
    return acc;
}

Rational ProblemSpec::dil_dD2_level1() const {
    return Rational(d_D2) * (Rational(1, frame.k2) - Rational(1, frame.k1));
}

Rational ProblemSpec::dil_dD1_level2() const {
    return Rational(d_D1) * (Rational(1, frame.k1) - Rational(1, frame.k2));
}

Rational ProblemSpec::dil_ell(int ell_index, int level) const {
    int k = k_of_level(level);
    return Rational(delta_ell[ell_index]) - Rational(d_ell[ell_index], k) - Rational(1);
}

int ProblemSpec::grid_alignment() const {
    std::int64_t L = lcm64(frame.k1, frame.k2);
    L = lcm64(L, frame.kappa.den);
    L = lcm64(L, dil_dD2_level1().den);
    L = lcm64(L, dil_dD1_level2().den);
    for (int e = 0; e < n_ell(); ++e) {
        L = lcm64(L, dil_ell(e, 1).den);
        L = lcm64(L, dil_ell(e, 2).den);
    }
    return static_cast<int>(L);
}

double ProblemSpec::laplace_radius(double k, double a) const {
    return frame.qpow((0.5 - a) / k) / 2.0;
}

const Profile& ProblemSpec::C_profile(int ell_index, int j) const {
    static const Profile empty;
    if (ell_index >= static_cast<int>(C_data.size())) return empty;
    if (j >= static_cast<int>(C_data[ell_index].size())) return empty;
    return C_data[ell_index][j];
}

bool ProblemSpec::C_all_zero() const {
    for (const auto& row : C_data)
        for (const auto& p : row)
            for (const cd& v : p)
                if (v != cd(0.0, 0.0)) return false;
    return true;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& it : items)
        os << (it.pass ? "  ok   " : "  FAIL ") << it.name << "  slack=" << it.slack << "\n";
    return os.str();
}

namespace {

void add(ValidationReport& r, const std::string& name, double slack) {
    r.items.push_back({name, slack, slack >= 0.0});
}

}  // namespace

ValidationReport validate_assumptions(const ProblemSpec& spec) {
    ValidationReport r;
    const auto& fr = spec.frame;
    const double kappa = fr.kappa_val();
    const int nl = spec.n_ell();

    if (static_cast<int>(spec.d_ell.size()) != nl || static_cast<int>(spec.delta_ell.size()) != nl ||
        static_cast<int>(spec.Delta_ell.size()) != nl || static_cast<int>(spec.R_ell.size()) != nl)
        throw ParameterError("validate_assumptions: ell-indexed arrays must have length D-1");

    // Assumption (A)
    add(r, "A: delta_1 == 1", spec.delta_ell[0] == 1 ? 0.0 : -1.0);
    for (int e = 0; e + 1 < nl; ++e)
        add(r, "A: delta_" + std::to_string(e + 1) + " < delta_" + std::to_string(e + 2),
            spec.delta_ell[e + 1] - spec.delta_ell[e] - 1);

    // Assumption (B)
    for (int e = 0; e < nl; ++e) {
        const std::string t = std::to_string(e + 1);
        add(r, "B: Delta_" + t + " >= d_" + t, spec.Delta_ell[e] - spec.d_ell[e]);
        add(r, "B: d_" + t + "/k2 + 1 >= delta_" + t,
            static_cast<double>(spec.d_ell[e]) / fr.k2 + 1.0 - spec.delta_ell[e]);
        add(r, "B: (d_D1-1)/kappa - d_" + t + "/k2 >= delta_" + t + " - 1",
            (spec.d_D1 - 1.0) / kappa - static_cast<double>(spec.d_ell[e]) / fr.k2 -
                (spec.delta_ell[e] - 1.0));
        add(r, "B: (d_D2-1)/k2 >= delta_" + t + " - 1",
            (spec.d_D2 - 1.0) / fr.k2 - (spec.delta_ell[e] - 1.0));
    }
    add(r, "B: k1 d_D2 > k2 d_D1", fr.k1 * spec.d_D2 - fr.k2 * spec.d_D1 - 1e-12);

    // Assumption (C)
    add(r, "C: deg R_D2 == deg R_D1", spec.R_D2.degree() == spec.R_D1.degree() ? 0.0 : -1.0);
    add(r, "C: deg Q >= deg R_D1", spec.Q.degree() - spec.R_D1.degree());
    for (int e = 0; e < nl; ++e)
        add(r, "C: deg R_D1 >= deg R_" + std::to_string(e + 1),
            spec.R_D1.degree() - spec.R_ell[e].degree());
    double qmin = 1e300, r1min = 1e300, r2min = 1e300;
    for (double m : spec.mgrid.nodes) {
        qmin = std::min(qmin, std::abs(spec.Q.eval_im(m)));
        r1min = std::min(r1min, std::abs(spec.R_D1.eval_im(m)));
        r2min = std::min(r2min, std::abs(spec.R_D2.eval_im(m)));
    }
    add(r, "C: Q(im) != 0 on grid (min modulus)", qmin - 1e-9);
    add(r, "C: R_D1(im) != 0 on grid (min modulus)", r1min - 1e-9);
    add(r, "C: R_D2(im) != 0 on grid (min modulus)", r2min - 1e-9);
    add(r, "C: mu > deg R_Dj + 1", spec.mu - spec.R_D1.degree() - 1.0 - 1e-12);
    add(r, "C: mu > deg Q + 1 (convolution bound)", spec.mu - spec.Q.degree() - 1.0 - 1e-12);

    // Sector/radius constraints of the associated-family definition.
    add(r, "def: 0 < eps0 < 1", std::min(spec.eps0, 1.0 - spec.eps0));
    add(r, "def: 0 < r_T < 1", std::min(spec.r_T, 1.0 - spec.r_T));
    add(r, "def: nu + k2 log(r_T)/log q < 0",
        -(spec.nu + fr.k2 * std::log(spec.r_T) / fr.logq()));
    add(r, "def: alpha + kappa log(eps0 r_T)/log q < 0",
        -(spec.alpha + kappa * std::log(spec.eps0 * spec.r_T) / fr.logq()));
    add(r, "def: eps0 r_T <= q^{(1/2-nu)/k2}/2",
        fr.qpow((0.5 - spec.nu) / fr.k2) / 2.0 - spec.eps0 * spec.r_T);
    add(r, "def: beta' < beta", spec.beta - spec.beta_prime - 1e-12);
    add(r, "def: delta_tilde in (0,1)", std::min(spec.delta_tilde, 1.0 - spec.delta_tilde));
    return r;
}

cd divisor_eval(const ProblemSpec& spec, int j, double m, cd tau) {
    const auto& fr = spec.frame;
    const int k = spec.k_of_level(j);
    const int d = spec.d_Dj(j);
    const cd qm = spec.Q.eval_im(m);
    const cd rm = spec.R_Dj(j).eval_im(m);
    const double pre1 = fr.qpow(Rational(static_cast<std::int64_t>(k) * (k - 1), 2 * k));
    const double pre2 =
        fr.qpow(Rational(static_cast<std::int64_t>(d + k) * (d + k - 1), 2 * k));
    return qm / pre1 - rm / pre2 * std::pow(tau, d);
}

namespace {

// Unwrapped argument of Q(im)/R_Dj(im), continuous toward the hint.
double ratio_arg(const ProblemSpec& spec, int j, double m, std::optional<double> hint) {
    const cd rm = spec.R_Dj(j).eval_im(m);
    if (std::abs(rm) < 1e-14)
        throw DivisorDegenerate("roots_qell: R_Dj(im) vanishes at m=" + std::to_string(m));
    double a = std::arg(spec.Q.eval_im(m) / rm);
    if (hint) {
        while (a - *hint > M_PI) a -= 2.0 * M_PI;
        while (a - *hint < -M_PI) a += 2.0 * M_PI;
    }
    return a;
}

std::vector<cd> roots_from_arg(const ProblemSpec& spec, int j, double m, double arg0) {
    const auto& fr = spec.frame;
    const int k = spec.k_of_level(j);
    const int d = spec.d_Dj(j);
    const double mag = std::pow(std::abs(spec.Q.eval_im(m) / spec.R_Dj(j).eval_im(m)), 1.0 / d);
    const double scale = fr.qpow(Rational(d + 2 * k - 1, 2 * k));
    std::vector<cd> roots(d);
    for (int l = 0; l < d; ++l)
        roots[l] = std::polar(mag * scale, arg0 / d + 2.0 * M_PI * l / d);
    return roots;
}

}  // namespace

std::vector<cd> roots_qell(const ProblemSpec& spec, int j, double m,
                           std::optional<double> arg_hint) {
    return roots_from_arg(spec, j, m, ratio_arg(spec, j, m, arg_hint));
}

RootSet build_rootset(const ProblemSpec& spec, int j) {
    RootSet rs;
    rs.j = j;
    const std::size_t nm = spec.mgrid.size();
    rs.roots.resize(nm);
    std::optional<double> hint;
    double rmin = 1e300, amin = 1e300, amax = -1e300;
    for (std::size_t jm = 0; jm < nm; ++jm) {
        const double m = spec.mgrid.nodes[jm];
        const double a = ratio_arg(spec, j, m, hint);
        rs.roots[jm] = roots_from_arg(spec, j, m, a);
        hint = a;
        rmin = std::min(rmin, std::abs(spec.Q.eval_im(m) / spec.R_Dj(j).eval_im(m)));
        amin = std::min(amin, a);
        amax = std::max(amax, a);
    }
    rs.r_QR = rmin;
    rs.d_QR = 0.5 * (amin + amax);
    rs.nu_QR = 0.5 * (amax - amin) + 1e-9;

    // paper's root-size condition |q_l(m)| > 2 rho
    for (std::size_t jm = 0; jm < nm; ++jm)
        for (const cd& root : rs.roots[jm])
            if (!(std::abs(root) > 2.0 * spec.rho))
                throw GeometryViolation("build_rootset: |q_l(m)| <= 2 rho (shrink rho or rescale)");
    return rs;
}

double BoundCertificate::lower_bound(double abs_R, double abs_tau, int d) const {
    return C_P * std::pow(r_QR, 1.0 / d) * abs_R * std::pow(1.0 + abs_tau, d - 1);
}

BoundCertificate certify_lower_bound(const ProblemSpec& spec, int j, const TauGrid& taugrid,
                                     const RootSet& roots, double floor) {
    const auto& fr = spec.frame;
    const int d = spec.d_Dj(j);
    const int k = spec.k_of_level(j);
    const std::size_t nm = spec.mgrid.size();
    BoundCertificate cert;
    cert.r_QR = roots.r_QR;

    double M1 = 1e300;
    for (std::size_t jt = 0; jt < taugrid.size(); ++jt) {
        const cd tau = taugrid.node(jt);
        const double denom = 1.0 + std::abs(tau);
        for (std::size_t jm = 0; jm < nm; ++jm) {
            for (const cd& root : roots.roots[jm]) {
                double v = std::abs(tau - root) / denom;
                if (v < M1) {
                    M1 = v;
                    cert.worst_tau = jt;
                    cert.worst_m = jm;
                }
            }
        }
    }
    double M2 = 0.0;
    for (int l0 = 0; l0 < d; ++l0) {
        double worst = 1e300;
        for (std::size_t jt = 0; jt < taugrid.size(); ++jt) {
            const cd tau = taugrid.node(jt);
            for (std::size_t jm = 0; jm < nm; ++jm) {
                const cd root = roots.roots[jm][l0];
                worst = std::min(worst, std::abs(tau - root) / std::abs(root));
            }
        }
        M2 = std::max(M2, worst);
    }
    cert.M1 = M1;
    cert.M2 = M2;
    if (!(M1 > floor) || !(M2 > floor))
        throw GeometryViolation("certify_lower_bound: direction passes too near a root locus (M1=" +
                                std::to_string(M1) + ", M2=" + std::to_string(M2) + ")");

    // C_P per the displayed divisor bound; the (e113) chain gives
    // C_P = M1^{d-1} M2 q^{(d+2k-1)/(2k)} / (q^{1/k})^{(d+k)(d+k-1)/2}.
    cert.C_P = std::pow(M1, d - 1) * M2 * fr.qpow(Rational(d + 2 * k - 1, 2 * k)) /
               fr.qpow(Rational(static_cast<std::int64_t>(d + k) * (d + k - 1), 2 * k));

    // pointwise re-check of the certified inequality on every node
    for (std::size_t jt = 0; jt < taugrid.size(); ++jt) {
        const cd tau = taugrid.node(jt);
        for (std::size_t jm = 0; jm < nm; ++jm) {
            const double m = spec.mgrid.nodes[jm];
            const double lhs = std::abs(divisor_eval(spec, j, m, tau));
            const double rhs =
                cert.lower_bound(std::abs(spec.R_Dj(j).eval_im(m)), std::abs(tau), d);
            if (lhs < rhs * (1.0 - 1e-9))
                throw GeometryViolation("certify_lower_bound: pointwise (e113)-type recheck failed");
        }
    }
    return cert;
}

}  // namespace qsum
