#pragma once

#include <complex>
#include <vector>

#include "qsum/errors.hpp"
#include "qsum/qframe.hpp"
#include "qsum/rational.hpp"

namespace qsum {

using cd = std::complex<double>;

// Geometric ladder of radii along one Borel ray, ratio exactly q^{1/L}, so
// sigma_q^{p/L} is a pure index shift. Node j sits at rho * q^{(j - n_disc)/L};
// node n_disc is exactly rho. Nodes with r <= rho are the disc nodes, the rest
// the ray nodes; both live on the same lattice so dilations never interpolate.
struct TauGrid {
    double direction = 0.0;  // radians
    double rho = 0.0;        // Borel disc radius
    int L = 1;               // alignment integer; dilation denominators divide L
    int n_disc = 0;          // nodes strictly inside r < rho plus the rho node index
    double q = 2.0;
    std::vector<double> radii;  // ascending geometric ladder

    std::size_t size() const { return radii.size(); }
    double step_log() const { return std::log(q) / L; }
    cd node(std::size_t j) const { return std::polar(radii[j], direction); }
    double log_radius(std::size_t j) const;

    // Index shift of sigma_q^gamma; AlignmentError if gamma.den does not divide L.
    int shift_of(Rational gamma) const;

    // First index with radius >= rho (the disc/ray boundary).
    int rho_index() const { return n_disc; }
};

// rho > 0, r_max > rho; n_disc inner nodes below rho. Ladder spans
// [rho q^{-n_disc/L}, >= r_max].
TauGrid make_taugrid(double direction, double rho, double r_max, int L, int n_disc, double q);

}  // namespace qsum
