#pragma once

#include "qsum/mgrid.hpp"
#include "qsum/polynomial.hpp"

namespace qsum {

// Weighted Fourier-side convolution (f *^Q g)(m) = int f(m-m1) Q(i m1) g(m1) dm1
// on the m-grid. Off-grid arguments of f use linear interpolation (zero beyond
// the grid). TruncationError if the boundary mass exceeds tol.
Profile mconvolve(const Profile& f, const Profile& g, const CPoly& Q, const MGrid& grid,
                  double boundary_tol = 1e-8);

// Single output value at an arbitrary m.
cd mconvolve_at(const Profile& f, const Profile& g, const CPoly& Q, const MGrid& grid, double m);

// Inverse Fourier transform F^{-1}(f)(z) = (2 pi)^{-1/2} int f(m) e^{izm} dm,
// valid for |Im z| < beta' < beta. Boundary-mass checked like mconvolve.
cd inverse_fourier(const Profile& f, const MGrid& grid, cd z, double boundary_tol = 1e-8);

// Numerical Banach-algebra constant: sup over m of
// (Qbar/Rbar) (1+|m|)^{mu-deg R} int (1+|m-m1|)^{-mu} (1+|m1|)^{deg Q - mu} dm1,
// evaluated on a wide internal lattice with an analytic tail bound added, so the
// returned value is a certified upper bound. Used by the operator-bound ledger.
double convolution_bound_constant(const CPoly& Q, const CPoly& R, double mu);

}  // namespace qsum
