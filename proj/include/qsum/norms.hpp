#pragma once

#include "qsum/gridfun.hpp"
#include "qsum/qframe.hpp"

namespace qsum {

enum class NormFamily {
    exp_q_alpha_rho,  // sup (1+|m|)^mu e^{beta|m|} exp(-k/2 log^2|tau+delta|/log q - alpha log|tau+delta|) |h|
    exp_q_nu,         // sup (1+|m|)^mu e^{beta|m|} exp(-k/2 log^2|tau|/log q - nu log|tau|) |h|
    e_beta_mu         // sup (1+|m|)^mu e^{beta|m|} |h(m)|
};

struct NormSpec {
    NormFamily family = NormFamily::e_beta_mu;
    double k = 1.0;      // growth order (kappa or k2)
    double beta = 0.0;
    double mu = 0.0;
    double alpha = 0.0;  // exp_q_alpha_rho linear exponent
    double nu = 0.0;     // exp_q_nu linear exponent
    double rho = 0.0;
    double delta = 0.0;  // the shift in log|tau+delta|
    double logq = 0.0;

    static NormSpec exp_alpha(double k, double beta, double mu, double alpha, double rho,
                              double delta, double logq);
    static NormSpec exp_nu(double k, double beta, double mu, double nu, double logq);
    static NormSpec ebm(double beta, double mu);

    // log of the multiplicative weight applied to |h| at (tau, m).
    double log_weight(cd tau, double m) const;
    double log_weight_m(double m) const;
};

// Discrete sup over unflagged grid nodes of weight * |h|. Deterministic (fixed
// traversal). DomainMismatch if the grid kind is incompatible with the family.
double weighted_norm(const GridFunction& f, const NormSpec& spec);

// E_{(beta,mu)} norm of a single m-profile.
double weighted_norm(const Profile& f, const MGrid& grid, const NormSpec& spec);

}  // namespace qsum
