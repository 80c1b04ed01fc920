#include "qsum/mgrid.hpp"

#include <array>
#include <cmath>

namespace qsum {

namespace {

// Endpoint corrections delta_0..delta_{P-1} (in units of h) turning the
// trapezoidal rule into a Gregory-type rule of order P at a panel edge.
// Derived from the Euler-Maclaurin moment conditions:
//   sum_i delta_i i^{2j-1} = B_{2j}/(2j),  sum_i delta_i i^{even} = 0.
std::vector<double> gregory_corrections() {
    constexpr int P = 8;
    // Bernoulli numbers B_2, B_4, B_6, B_8.
    const std::array<double, 4> B = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0};
    // Solve the P x P Vandermonde system sum_i delta_i i^k = rhs_k, k = 0..P-1.
    std::array<std::array<double, P + 1>, P> A{};
    for (int k = 0; k < P; ++k) {
        for (int i = 0; i < P; ++i) A[k][i] = std::pow(static_cast<double>(i), k);
        A[k][0] = (k == 0) ? 1.0 : 0.0;  // 0^0 = 1, 0^k = 0
        A[k][P] = (k % 2 == 1) ? B[(k - 1) / 2] / (k + 1) : 0.0;
    }
    // Gaussian elimination with partial pivoting.
    for (int c = 0; c < P; ++c) {
        int piv = c;
        for (int r = c + 1; r < P; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (int r = 0; r < P; ++r) {
            if (r == c) continue;
            double f = A[r][c] / A[c][c];
            for (int j = c; j <= P; ++j) A[r][j] -= f * A[c][j];
        }
    }
    std::vector<double> delta(P);
    for (int i = 0; i < P; ++i) delta[i] = A[i][P] / A[i][i];
    return delta;
}

}  // namespace

double MGrid::quad_selftest_error() const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * std::exp(-beta * std::abs(nodes[i]));
    return std::abs(s - 2.0 / beta);
}

cd MGrid::integrate(const Profile& f) const {
    if (f.size() != nodes.size()) throw DomainMismatch("MGrid::integrate: profile size mismatch");
    cd s(0.0, 0.0);
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f[i];
    return s;
}

MGrid make_mgrid(double beta, double mu, double M_max, int n_points) {
    if (!(beta > 0.0) || !(M_max > 0.0)) throw ParameterError("make_mgrid: beta, M_max must be positive");
    if (!(mu > 0.0)) throw ParameterError("make_mgrid: mu must be positive");
    if (n_points < 9 || n_points % 2 == 0)
        throw ParameterError("make_mgrid: n_points must be odd and at least 9");

    MGrid g;
    g.beta = beta;
    g.mu = mu;
    g.M_max = M_max;
    const int n = n_points;
    const int half = (n - 1) / 2;
    g.h = M_max / half;
    g.nodes.resize(n);
    for (int i = 0; i < n; ++i) g.nodes[i] = (i - half) * g.h;
    g.nodes[half] = 0.0;

    // Trapezoid base weights, panel edges at indices 0, half, n-1.
    g.weights.assign(n, g.h);
    g.weights[0] = g.weights[n - 1] = 0.5 * g.h;
    // 0 is an interior edge of two panels: 0.5 h from each side.

    const std::vector<double> delta = gregory_corrections();
    const int P = static_cast<int>(delta.size());
    if (half + 1 < 2 * P) throw ParameterError("make_mgrid: too few points per panel for end corrections");
    g.smooth_weights = g.weights;
    for (int i = 0; i < P; ++i) {
        const double c = delta[i] * g.h;
        g.weights[i] += c;             // left edge of [-M, 0]
        g.weights[n - 1 - i] += c;     // right edge of [0, M]
        g.weights[half - i] += c;      // right edge of [-M, 0] (approached from inside)
        g.weights[half + i] += c;      // left edge of [0, M]
        g.smooth_weights[i] += c;
        g.smooth_weights[n - 1 - i] += c;
    }

    for (double w : g.weights)
        if (!(w > 0.0)) throw ParameterError("make_mgrid: nonpositive corrected weight (grid too coarse)");

    if (g.quad_selftest_error() > 1e-8)
        throw ParameterError("make_mgrid: quadrature self-test failed (refine n_points)");
    return g;
}

}  // namespace qsum
