#include "qsum/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "qsum/errors.hpp"

namespace qsum {

namespace {

double wrap_pi(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

double circ_dist(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace

bool Sector::contains_angle(double theta) const {
    return circ_dist(theta, direction) < half_aperture;
}

double GoodCovering::overlap_bisector(int p) const {
    const Sector& a = sectors[p];
    const Sector& b = sectors[(p + 1) % varsigma()];
    double lo = wrap_pi(b.direction - b.half_aperture);
    double hi = wrap_pi(a.direction + a.half_aperture);
    return wrap_pi(lo + 0.5 * wrap_pi(hi - lo));
}

double GoodCovering::overlap_half_width(int p) const {
    const Sector& a = sectors[p];
    const Sector& b = sectors[(p + 1) % varsigma()];
    double width = a.half_aperture + b.half_aperture - circ_dist(a.direction, b.direction);
    return 0.5 * std::max(width, 0.0);
}

GoodCovering build_good_covering(int varsigma, double eps0, double overlap_frac) {
    if (varsigma < 2) throw ParameterError("build_good_covering: varsigma must be >= 2");
    if (!(overlap_frac > 0.0 && overlap_frac < 0.5))
        throw ParameterError("build_good_covering: overlap_frac must lie in (0, 1/2)");
    if (!(eps0 > 0.0)) throw ParameterError("build_good_covering: eps0 must be positive");

    GoodCovering cov;
    const double step = 2.0 * M_PI / varsigma;
    const double half = 0.5 * step * (1.0 + overlap_frac);
    for (int p = 0; p < varsigma; ++p) cov.sectors.push_back({step * p, half, eps0});

    // re-verify: consecutive overlap, non-consecutive disjoint, union covers
    for (int p = 0; p < varsigma; ++p) {
        for (int r = 0; r < varsigma; ++r) {
            double dist = circ_dist(cov.sectors[p].direction, cov.sectors[r].direction);
            bool overlap = dist < 2.0 * half - 1e-12;
            int dj = std::min((p - r + varsigma) % varsigma, (r - p + varsigma) % varsigma);
            bool should = dj <= 1;
            if (varsigma == 2 && dj == 1) should = true;  // both pairs adjacent
            if (overlap != should)
                throw ParameterError("build_good_covering: overlap pattern violated");
        }
    }
    if (2.0 * half * varsigma < 2.0 * M_PI)
        throw ParameterError("build_good_covering: union does not cover the punctured disc");
    return cov;
}

double r_domain_margin(cd T, double d) {
    const double th = wrap_pi(d - std::arg(T));
    return std::cos(th) >= 0.0 ? 1.0 : std::abs(std::sin(th));
}

bool in_R_domain(cd T, double d, double delta_tilde) {
    if (T == cd(0.0, 0.0)) throw PreconditionViolated("in_R_domain: T must be nonzero");
    return r_domain_margin(T, d) > delta_tilde;
}

std::vector<double> root_locus_angles(const std::vector<RootSet>& rootsets) {
    std::vector<double> angles;
    for (const auto& rs : rootsets)
        for (const auto& row : rs.roots)
            for (const cd& root : row) angles.push_back(wrap_pi(std::arg(root)));
    std::sort(angles.begin(), angles.end());
    return angles;
}

double angular_distance_to_set(double a, const std::vector<double>& sorted_angles) {
    if (sorted_angles.empty()) return M_PI;
    a = wrap_pi(a);
    auto it = std::lower_bound(sorted_angles.begin(), sorted_angles.end(), a);
    double best = M_PI;
    auto consider = [&](double b) { best = std::min(best, circ_dist(a, b)); };
    if (it != sorted_angles.end()) consider(*it);
    if (it != sorted_angles.begin()) consider(*(it - 1));
    consider(sorted_angles.front());
    consider(sorted_angles.back());
    return best;
}

namespace {

// eps*t membership of R^b_{d} = R_{d,delta~} cap D(0, eps0 r_T), sampled on the
// Cartesian product of sector-boundary extremes (8 x 8 per the design choice).
bool membership_holds(const ProblemSpec& spec, const Sector& eps_sector, double direction) {
    const Sector tsec{spec.T_direction, spec.T_half_aperture, spec.r_T};
    for (int ie = 0; ie < 8; ++ie) {
        double ae = eps_sector.direction + eps_sector.half_aperture * (ie / 3.5 - 1.0);
        double re = (ie % 2 == 0) ? eps_sector.radius : 1e-3 * eps_sector.radius;
        for (int it = 0; it < 8; ++it) {
            double at = tsec.direction + tsec.half_aperture * (it / 3.5 - 1.0);
            double rt = (it % 2 == 0) ? tsec.radius : 1e-3 * tsec.radius;
            cd T = std::polar(re * rt, ae + at);
            if (!(std::abs(T) <= spec.eps0 * spec.r_T * (1.0 + 1e-12))) return false;
            if (!in_R_domain(T, direction, spec.delta_tilde)) return false;
        }
    }
    return true;
}

}  // namespace

AssociatedFamily choose_directions(const ProblemSpec& spec, const GoodCovering& covering,
                                   const std::vector<RootSet>& rootsets,
                                   const DirectionOptions& opts) {
    const int vs = covering.varsigma();
    const std::vector<double> loci = root_locus_angles(rootsets);
    // U-sector apertures are constrained by level-1 obstructions only: the
    // P_{m,1} root angles and the forcing-pole direction. Level-2 roots do not
    // obstruct the continuation of w_{k1}, and the spanning-sector containment
    // behind the level-2 flags is unreachable otherwise.
    std::vector<RootSet> level1_sets;
    for (const auto& rs : rootsets)
        if (rs.j == 1) level1_sets.push_back(rs);
    std::vector<double> level1_angles = root_locus_angles(level1_sets);
    if (spec.forcing.kind == ForcingSpec::Kind::geometric)
        level1_angles.push_back(wrap_pi(std::arg(spec.forcing.T0)));
    std::sort(level1_angles.begin(), level1_angles.end());
    AssociatedFamily fam;
    fam.delta_tilde = spec.delta_tilde;
    fam.time_sector = {spec.T_direction, spec.T_half_aperture, spec.r_T};
    fam.eps0 = spec.eps0;
    fam.r_T = spec.r_T;
    const double ap_cap = M_PI / 2.5;

    if (opts.overrides) {
        if (static_cast<int>(opts.overrides->size()) != vs)
            throw ParameterError("choose_directions: overrides size != varsigma");
        fam.directions = *opts.overrides;
    } else {
        // per sector, the admissible direction with the widest root gap
        for (int p = 0; p < vs; ++p) {
            double best_dir = 0.0, best_gap = -1.0;
            for (int i = 0; i < 2880; ++i) {
                double th = -M_PI + (i + 0.5) * (2.0 * M_PI / 2880.0);
                double gap = angular_distance_to_set(th, loci);
                if (gap <= best_gap) continue;
                if (!membership_holds(spec, covering.sectors[p], th)) continue;
                best_dir = th;
                best_gap = gap;
            }
            if (best_gap < opts.min_gap)
                throw NoAdmissibleDirection("choose_directions: no direction clears the root loci");
            fam.directions.push_back(best_dir);
        }
    }

    for (int p = 0; p < vs; ++p) {
        double gap = angular_distance_to_set(fam.directions[p], loci);
        if (gap < opts.min_gap)
            throw NoAdmissibleDirection("choose_directions: direction " + std::to_string(p) +
                                        " sits " + std::to_string(gap) + " rad from a root locus");
        if (!membership_holds(spec, covering.sectors[p], fam.directions[p]))
            throw NoAdmissibleDirection("choose_directions: eps*t membership fails for sector " +
                                        std::to_string(p));
        double gap1 = angular_distance_to_set(fam.directions[p], level1_angles);
        fam.u_half_aperture.push_back(std::min(ap_cap, 0.8 * gap1));
    }

    // level flags: spanning-sector containment -> level 2; empty intersection ->
    // level 1; partial overlap classified 1 (the weaker bound is the safe claim)
    for (int p = 0; p < vs; ++p) {
        int pn = (p + 1) % vs;
        double gap = circ_dist(fam.directions[p], fam.directions[pn]);
        bool contains = fam.u_half_aperture[p] >= gap && fam.u_half_aperture[pn] >= gap;
        bool disjoint = fam.u_half_aperture[p] + fam.u_half_aperture[pn] <= gap;
        fam.level_flags.push_back(contains ? 2 : (disjoint ? 1 : 1));
        // consecutive R^b domains must intersect: sweep a circle for a common point
        bool meet = false;
        for (int i = 0; i < 720 && !meet; ++i) {
            cd T = std::polar(0.5 * spec.eps0 * spec.r_T, -M_PI + i * (2.0 * M_PI / 720.0));
            meet = in_R_domain(T, fam.directions[p], spec.delta_tilde) &&
                   in_R_domain(T, fam.directions[pn], spec.delta_tilde);
        }
        if (!meet)
            throw GeometryViolation("choose_directions: consecutive R^b domains do not intersect");
    }
    return fam;
}

}  // namespace qsum
