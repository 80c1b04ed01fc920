#pragma once

#include <complex>

#include "qsum/qframe.hpp"
#include "qsum/rational.hpp"

namespace qsum {

using cd = std::complex<double>;

struct ThetaResult {
    cd value;
    int truncation_index;  // largest |n| summed on either side
};

// Jacobi theta kernel of order k: Theta_{q^{1/k}}(x) = sum_{n in Z} q^{-n(n-1)/(2k)} x^n.
// Laurent sum truncated once the first omitted term on each side is below
// tol * |partial sum|. Throws NonConvergence past the configured cap.
ThetaResult theta_eval_full(const QFrame& fr, Rational k, cd x, double tol, int cap = 10000);
cd theta_eval(const QFrame& fr, Rational k, cd x, double tol);

// Distance from x to the theta zero set, inf_m |1 + x q^{m/k}| scanned over a
// window of integers m covering the attainable minimum.
double theta_zero_distance(const QFrame& fr, Rational k, cd x, int scan_cap = 400);

// log of the q-Gevrey growth envelope exp(k log^2|x| / (2 log q)) |x|^{1/2}.
double theta_log_envelope(const QFrame& fr, Rational k, double abs_x);

// Calibrated constant C_{q,k} with |Theta(x)| >= C_{q,k} * dist(x) * envelope(x);
// minimized over a dense log-radius x angle sample. Deterministic, cached per (q,k).
double theta_growth_constant(const QFrame& fr, Rational k);

struct GrowthCheck {
    bool holds;
    double ratio;  // |Theta(x)| / (C_{q,k} * delta_tilde * envelope)
};

// Verifies the lower bound |Theta(x)| >= C_{q,k} delta_tilde envelope(x) with the
// calibrated constant. PreconditionViolated if x sits delta_tilde-close to a zero.
GrowthCheck theta_growth_check(const QFrame& fr, Rational k, cd x, double delta_tilde);

// pi_{q^{1/k}} = (log q / k) prod_{n>=0} (1 - q^{-(n+1)/k})^{-1}, truncated when the
// factor differs from 1 by less than tol.
double pi_q(const QFrame& fr, Rational k, double tol);

}  // namespace qsum
