#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsum/mgrid.hpp"
#include "qsum/polynomial.hpp"
#include "qsum/qframe.hpp"
#include "qsum/taugrid.hpp"

namespace qsum {

// Forcing data F_n(m): stored profiles plus the generator that carries the
// analytic continuation of the level-1 Borel transform.
struct ForcingSpec {
    enum class Kind { geometric, polynomial } kind = Kind::geometric;
    cd T0{1.0, 0.0};          // geometric: F_n = g T0^{-n} (q^{1/k1})^{n(n-1)/2}
    Profile g;                // geometric base profile on the m-grid
    std::vector<Profile> F;   // stored F_n profiles, n = 0..n_stored-1
    int n_stored() const { return static_cast<int>(F.size()); }

    // Psi_{k1}(tau, m_index): the order-k1 Borel transform of the forcing,
    // analytically continued (geometric: g T0/(T0 - tau); polynomial: finite sum).
    cd psi_k1(cd tau, std::size_t jm, const QFrame& fr) const;
};

struct ProblemSpec {
    QFrame frame;
    CPoly Q, R_D1, R_D2;
    std::vector<CPoly> R_ell;        // ell = 1..D-1 (index 0 is ell=1)
    int d_D1 = 1, d_D2 = 2;
    std::vector<int> d_ell, delta_ell, Delta_ell;
    int p1 = 0;
    // C_{ell,j} profiles indexed [ell-1][j], j = 0..p1 (empty profile = identically 0)
    std::vector<std::vector<Profile>> C_data;
    ForcingSpec forcing;
    MGrid mgrid;
    double beta = 1.0, beta_prime = 0.5, mu = 4.0;
    double eps0 = 0.5, r_T = 0.5;
    double T_direction = 0.0, T_half_aperture = 0.3;  // the time sector
    double alpha = 0.0, nu = -1.0;
    double rho = 0.5, delta = 0.25, delta_tilde = 0.1;
    int D = 3;

    int n_ell() const { return D - 1; }
    const CPoly& R_Dj(int j) const { return j == 1 ? R_D1 : R_D2; }
    int d_Dj(int j) const { return j == 1 ? d_D1 : d_D2; }
    int k_of_level(int level) const { return level == 1 ? frame.k1 : frame.k2; }

    // Dilation exponents appearing in the two Borel-plane operators.
    Rational dil_dD2_level1() const;                  // d_D2 (1/k2 - 1/k1) < 0
    Rational dil_dD1_level2() const;                  // d_D1 (1/k1 - 1/k2) > 0
    Rational dil_ell(int ell_index, int level) const; // delta_ell - d_ell/k - 1 <= 0

    // Smallest L such that every dilation exponent of the instance has
    // denominator dividing L (also divisible by k1, k2, den(kappa)).
    int grid_alignment() const;

    // r1 bound of the Laplace lemma, the /k form: q^{(1/2 - a)/k} / 2.
    double laplace_radius(double k, double a) const;

    // C_{ell,j} profile or the zero profile.
    const Profile& C_profile(int ell_index, int j) const;
    bool C_all_zero() const;
};

struct ValidationItem {
    std::string name;
    double slack = 0.0;  // >= 0 means pass; numeric distance to violation
    bool pass = false;
};

struct ValidationReport {
    std::vector<ValidationItem> items;
    bool pass() const {
        for (const auto& it : items)
            if (!it.pass) return false;
        return true;
    }
    std::string summary() const;
};

// Itemized check of Assumptions (A), (B), (C) and the sector/radius
// constraints; every inequality reported with its numeric slack.
ValidationReport validate_assumptions(const ProblemSpec& spec);

// Divisor polynomial P_{m,j}(tau), evaluated from the two-term formula.
cd divisor_eval(const ProblemSpec& spec, int j, double m, cd tau);

// Roots q_l(m) of P_{m,j} via the closed formula, principal branch. arg_hint,
// when given, selects the branch continuous with a neighbouring m-node.
std::vector<cd> roots_qell(const ProblemSpec& spec, int j, double m,
                           std::optional<double> arg_hint = std::nullopt);

struct RootSet {
    int j = 1;
    std::vector<std::vector<cd>> roots;  // [m-node][l], branch-continuous in m
    double r_QR = 0.0;                   // fitted sector of Q/R_{Dj}
    double d_QR = 0.0;
    double nu_QR = 0.0;
};

// Branch-continuous root curves over the whole m-grid plus the fitted
// S_{Q,R_{Dj}} sector data; checks |q_l(m)| > 2 rho.
RootSet build_rootset(const ProblemSpec& spec, int j);

struct BoundCertificate {
    double M1 = 0.0;   // min |tau - q_l(m)| / (1 + |tau|)
    double M2 = 0.0;   // max_l0 min |tau - q_l0(m)| / |q_l0(m)|
    double C_P = 0.0;  // assembled constant of the divisor lower bound
    double r_QR = 0.0;
    std::size_t worst_tau = 0, worst_m = 0;  // node achieving the M1 minimum

    // The certified pointwise bound |P_{m,j}| >= C_P r_QR^{1/d} |R_Dj(im)| (1+|tau|)^{d-1}.
    double lower_bound(double abs_R, double abs_tau, int d) const;
};

// Grid minimization of the divisor margins along one ray; GeometryViolation if
// a margin falls below `floor` (the ray passes too near a root locus). The
// certificate is re-verified pointwise against |P_{m,j}| on every node.
BoundCertificate certify_lower_bound(const ProblemSpec& spec, int j, const TauGrid& taugrid,
                                     const RootSet& roots, double floor = 1e-3);

}  // namespace qsum
