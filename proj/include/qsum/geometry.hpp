#pragma once

#include <optional>
#include <vector>

#include "qsum/problem.hpp"

namespace qsum {

struct Sector {
    double direction = 0.0;      // bisecting direction, radians
    double half_aperture = 0.0;  // in (0, pi)
    double radius = 0.0;         // <= 0 means unbounded

    bool contains_angle(double theta) const;
};

struct GoodCovering {
    std::vector<Sector> sectors;  // E_0..E_{varsigma-1}, all radius eps0
    int varsigma() const { return static_cast<int>(sectors.size()); }

    // overlap arc of consecutive sectors p and p+1 (mod varsigma)
    double overlap_bisector(int p) const;
    double overlap_half_width(int p) const;
};

// varsigma equal sectors of aperture (2 pi / varsigma)(1 + overlap_frac),
// directions 2 pi p / varsigma; consecutive sectors overlap, non-consecutive
// stay disjoint. Invariants re-verified after construction.
GoodCovering build_good_covering(int varsigma, double eps0, double overlap_frac);

// Membership in R_{d,delta_tilde}: inf_{r>=0} |1 + r e^{id}/T| > delta_tilde.
// Closed form: the infimum is |sin(d - arg T)| if cos(d - arg T) < 0, else 1.
bool in_R_domain(cd T, double d, double delta_tilde);
double r_domain_margin(cd T, double d);  // the infimum itself

struct AssociatedFamily {
    std::vector<double> directions;       // frak{d}_p
    std::vector<double> u_half_aperture;  // aperture of U_{frak{d}_p}
    std::vector<int> level_flags;         // per pair p (p, p+1): 1 or 2
    double delta_tilde = 0.1;
    Sector time_sector;                   // T
    double eps0 = 0.0, r_T = 0.0;

    int varsigma() const { return static_cast<int>(directions.size()); }
};

struct DirectionOptions {
    std::optional<std::vector<double>> overrides;  // explicit directions, validated
    double min_gap = 0.02;  // smallest admissible angular distance to root loci
};

// Directions maximizing angular distance to the root loci of both divisors,
// subject to the eps*t-membership invariant (checked on 64 boundary samples per
// pair); U-sector apertures min(pi/(4 d_D2), half the root gap); level flags by
// spanning-sector containment / empty intersection of consecutive U-sectors.
AssociatedFamily choose_directions(const ProblemSpec& spec, const GoodCovering& covering,
                                   const std::vector<RootSet>& rootsets,
                                   const DirectionOptions& opts = {});

// All root-locus directions (arg q_l(m) over the grid), sorted.
std::vector<double> root_locus_angles(const std::vector<RootSet>& rootsets);

// Smallest circular distance from angle a to any of the sorted angles.
double angular_distance_to_set(double a, const std::vector<double>& sorted_angles);

}  // namespace qsum
