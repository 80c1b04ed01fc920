#pragma once

#include <functional>

#include "qsum/gridfun.hpp"
#include "qsum/qframe.hpp"

namespace qsum {

// Ray integrals (1/pi_{q^{1/k}}) int_{L_d} f(u)/Theta_{q^{1/k}}(u/T) du/u in the
// log-radius variable: uniform trapezoid on the tau-ladder lattice, window
// selected adaptively from the Gaussian decay of the kernel envelope on both
// sides of |u| = |T|. Quadrature nodes are exactly the ladder lattice, so
// dilation commutation identities hold on the lattice by index shift.

struct RayWindow {
    int j_lo = 0, j_hi = -1;   // inclusive lattice window actually summed
    double tail_log = -1e300;  // log of the first omitted term relative to peak
};

// q-Laplace transform of one m-row of a grid function along its own ray.
// DomainError if T violates the R_{d,delta_tilde} margin; QuadratureError if
// the ladder ends before the integrand has decayed below tol.
cd qlaplace_grid_row(const GridFunction& w, Rational k, std::size_t jm, cd T, double tol,
                     double delta_tilde, RayWindow* win = nullptr);

// All m-rows at once (kernel shared across rows).
Profile qlaplace_grid(const GridFunction& w, Rational k, cd T, double tol, double delta_tilde);

// Closed-form integrand version on the (conceptually infinite) lattice aligned
// with `lattice`; used for forcing transforms and round-trip tests.
cd qlaplace_fn(const QFrame& fr, Rational k, const TauGrid& lattice,
               const std::function<cd(cd)>& f, cd T, double tol, double delta_tilde,
               RayWindow* win = nullptr);

// log |Theta_{q^{1/k}}(x)| growth envelope used for window selection.
double kernel_log_envelope(const QFrame& fr, Rational k, double abs_x);

// Normalization of the ray transforms: the kernel moment constant log(q)/k
// (the value that makes L_{q;1/k} invert the formal q-Borel transform on
// monomials; see the round-trip tests).
double pi_norm(const QFrame& fr, Rational k);

}  // namespace qsum
