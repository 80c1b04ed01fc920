#include "qsum/norms.hpp"

#include <cmath>

namespace qsum {

NormSpec NormSpec::exp_alpha(double k, double beta, double mu, double alpha, double rho,
                             double delta, double logq) {
    NormSpec s;
    s.family = NormFamily::exp_q_alpha_rho;
    s.k = k; s.beta = beta; s.mu = mu; s.alpha = alpha; s.rho = rho; s.delta = delta; s.logq = logq;
    return s;
}

NormSpec NormSpec::exp_nu(double k, double beta, double mu, double nu, double logq) {
    NormSpec s;
    s.family = NormFamily::exp_q_nu;
    s.k = k; s.beta = beta; s.mu = mu; s.nu = nu; s.logq = logq;
    return s;
}

NormSpec NormSpec::ebm(double beta, double mu) {
    NormSpec s;
    s.family = NormFamily::e_beta_mu;
    s.beta = beta; s.mu = mu;
    return s;
}

double NormSpec::log_weight_m(double m) const {
    return mu * std::log1p(std::abs(m)) + beta * std::abs(m);
}

double NormSpec::log_weight(cd tau, double m) const {
    double w = log_weight_m(m);
    switch (family) {
        case NormFamily::exp_q_alpha_rho: {
            double s = std::log(std::abs(tau + cd(delta, 0.0)));
            w += -k * s * s / (2.0 * logq) - alpha * s;
            break;
        }
        case NormFamily::exp_q_nu: {
            double s = std::log(std::abs(tau));
            w += -k * s * s / (2.0 * logq) - nu * s;
            break;
        }
        case NormFamily::e_beta_mu:
            break;
    }
    return w;
}

double weighted_norm(const GridFunction& f, const NormSpec& spec) {
    if (spec.family == NormFamily::e_beta_mu)
        throw DomainMismatch("weighted_norm: e_beta_mu applies to m-profiles, not grid functions");
    if (spec.family == NormFamily::exp_q_alpha_rho && f.kind == GridKind::borel_k2_domain)
        throw DomainMismatch("weighted_norm: exp_q_alpha_rho norm on a level-2 grid function");
    if (spec.family == NormFamily::exp_q_nu && f.kind == GridKind::borel_k1_domain)
        throw DomainMismatch("weighted_norm: exp_q_nu norm on a level-1 grid function");

    double best = 0.0;
    for (std::size_t jt = 0; jt < f.nt(); ++jt) {
        if (f.tau_flags[jt]) continue;
        cd tau = f.tau.node(jt);
        for (std::size_t jm = 0; jm < f.nm(); ++jm) {
            double a = std::abs(f.at(jt, jm));
            if (a == 0.0) continue;
            double v = std::exp(spec.log_weight(tau, f.m.nodes[jm]) + std::log(a));
            if (v > best) best = v;
        }
    }
    return best;
}

double weighted_norm(const Profile& f, const MGrid& grid, const NormSpec& spec) {
    if (spec.family != NormFamily::e_beta_mu)
        throw DomainMismatch("weighted_norm(profile): spec must be the e_beta_mu family");
    if (f.size() != grid.size()) throw DomainMismatch("weighted_norm(profile): size mismatch");
    double best = 0.0;
    for (std::size_t jm = 0; jm < f.size(); ++jm) {
        double a = std::abs(f[jm]);
        if (a == 0.0) continue;
        double v = std::exp(spec.log_weight_m(grid.nodes[jm]) + std::log(a));
        if (v > best) best = v;
    }
    return best;
}

}  // namespace qsum
