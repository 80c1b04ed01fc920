#include "qsum/taugrid.hpp"

#include <cmath>

namespace qsum {

double TauGrid::log_radius(std::size_t j) const {
    return std::log(rho) + (static_cast<double>(j) - n_disc) * step_log();
}

int TauGrid::shift_of(Rational gamma) const {
    if (L % gamma.den != 0)
        throw AlignmentError("dilation exponent " + gamma.str() + " is not aligned to grid L=" +
                             std::to_string(L));
    return static_cast<int>(gamma.num * (L / gamma.den));
}

TauGrid make_taugrid(double direction, double rho, double r_max, int L, int n_disc, double q) {
    if (!(rho > 0.0)) throw ParameterError("make_taugrid: rho must be positive");
    if (!(r_max > rho)) throw ParameterError("make_taugrid: r_max must exceed rho");
    if (L < 1) throw ParameterError("make_taugrid: L must be a positive integer");
    if (n_disc < 1) throw ParameterError("make_taugrid: n_disc must be positive");
    if (!(q > 1.0)) throw ParameterError("make_taugrid: q must exceed 1");

    TauGrid g;
    g.direction = direction;
    g.rho = rho;
    g.L = L;
    g.n_disc = n_disc;
    g.q = q;

    const double h = std::log(q) / L;
    const int n_ray = static_cast<int>(std::ceil(std::log(r_max / rho) / h - 1e-12));
    g.radii.resize(n_disc + n_ray + 1);
    for (int j = 0; j < static_cast<int>(g.radii.size()); ++j)
        g.radii[j] = rho * std::exp((j - n_disc) * h);
    return g;
}

}  // namespace qsum
