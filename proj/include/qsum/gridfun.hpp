#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "qsum/errors.hpp"
#include "qsum/mgrid.hpp"
#include "qsum/taugrid.hpp"

namespace qsum {

enum class GridKind { borel_k1_domain, borel_k2_domain, m_only };

// Complex values sampled on (tau-node, m-node), row-major over tau. Immutable
// by convention after construction; NaN/Inf anywhere is a hard error.
// tau_flags marks nodes filled by extrapolation; flagged nodes are excluded
// from norms.
struct GridFunction {
    TauGrid tau;
    MGrid m;
    GridKind kind = GridKind::borel_k1_domain;
    // log-quadratic growth coefficient of the norm family this function lives
    // in (k/(2 log q)); outer-ray extrapolation holds this curvature fixed and
    // fits only the linear/constant parts. 0 = linear extension.
    double env_a = 0.0;
    std::vector<cd> values;          // size tau.size() * m.size()
    std::vector<std::uint8_t> tau_flags;  // size tau.size(); 1 = extrapolated

    GridFunction() = default;
    GridFunction(TauGrid t, MGrid mg, GridKind k);

    std::size_t nt() const { return tau.size(); }
    std::size_t nm() const { return m.size(); }
    cd& at(std::size_t jt, std::size_t jm) { return values[jt * nm() + jm]; }
    const cd& at(std::size_t jt, std::size_t jm) const { return values[jt * nm() + jm]; }

    void check_finite() const;
    Profile profile_at(std::size_t jt) const;
    // max_m |value| per tau node, used for quadrature window estimates.
    std::vector<double> tau_envelope() const;

    static GridFunction build(TauGrid t, MGrid mg, GridKind k,
                              const std::function<cd(cd, double)>& f);
};

// sigma_q^gamma by exact index shift along the ladder. Nodes shifted past the
// outer end are filled by a log-quadratic envelope fit on the last fit_nodes
// unflagged nodes and flagged; nodes shifted below the inner end are filled by
// the innermost value (analytic-at-0 regime) and flagged. Reading a flagged
// source node propagates the flag. The Borel-plane operators pass
// flag_inner = false: their inner fills are suppressed by tau^{d_l} factors
// and excluding them would empty the disc region from every norm.
GridFunction dilate(const GridFunction& f, Rational gamma, int fit_nodes = 5,
                    bool flag_inner = true);

// Refresh values at flagged outer nodes from the envelope fit of the unflagged
// interior; used by the level-2 Picard sweep so the buffer tracks the iterate.
void refresh_outer_extrapolation(GridFunction& f, int fit_nodes = 5);

// Envelope extension helper: log-quadratic fit of |f| (and linear phase) on the
// last fit_nodes unflagged tau rows; returns values for the row at log-radius s.
Profile envelope_extend(const GridFunction& f, double s, int fit_nodes = 5);

}  // namespace qsum
