#pragma once

#include <complex>
#include <vector>

#include "qsum/errors.hpp"

namespace qsum {

using cd = std::complex<double>;
using Profile = std::vector<cd>;  // values on the m-grid nodes

// Uniform symmetric grid on [-M_max, M_max] for the Fourier variable m, with
// quadrature weights. Weights are trapezoidal with Euler-Maclaurin end
// corrections on the two panels [-M_max,0] and [0,M_max], so integrands with a
// kink at 0 (the e^{-beta|m|} family) integrate to high order.
struct MGrid {
    std::vector<double> nodes;    // ascending, symmetric about 0, 0 is a node
    std::vector<double> weights;  // positive weights, kink-corrected at m=0
    // End-corrected-only weights for smooth integrands (convolutions, Fourier):
    // the m=0 corrections that fix the |m|-kink family would otherwise leak an
    // O(h^8) stencil error into smooth products.
    std::vector<double> smooth_weights;
    double beta = 0.0;            // decay rate of the norm family
    double mu = 0.0;              // polynomial weight exponent
    double M_max = 0.0;
    double h = 0.0;

    std::size_t size() const { return nodes.size(); }
    int index_of_zero() const { return static_cast<int>(nodes.size() / 2); }

    double quad_selftest_error() const;  // |sum w e^{-beta|m|} - 2/beta|

    // Quadrature of a sampled profile with the kink-corrected weights.
    cd integrate(const Profile& f) const;
};

// n_points must be odd (symmetric grid with 0 as a node). Verifies the
// exponential-weight self-test to 1e-8 and throws ParameterError otherwise.
MGrid make_mgrid(double beta, double mu, double M_max, int n_points);

}  // namespace qsum
