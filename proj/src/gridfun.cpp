#include "qsum/gridfun.hpp"

#include <algorithm>
#include <cmath>

namespace qsum {

GridFunction::GridFunction(TauGrid t, MGrid mg, GridKind k)
    : tau(std::move(t)), m(std::move(mg)), kind(k) {
    values.assign(tau.size() * m.size(), cd(0.0, 0.0));
    tau_flags.assign(tau.size(), 0);
}

void GridFunction::check_finite() const {
    for (const cd& v : values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ParameterError("GridFunction: non-finite value");
}

Profile GridFunction::profile_at(std::size_t jt) const {
    Profile p(nm());
    for (std::size_t jm = 0; jm < nm(); ++jm) p[jm] = at(jt, jm);
    return p;
}

std::vector<double> GridFunction::tau_envelope() const {
    std::vector<double> env(nt(), 0.0);
    for (std::size_t jt = 0; jt < nt(); ++jt) {
        double mx = 0.0;
        for (std::size_t jm = 0; jm < nm(); ++jm) mx = std::max(mx, std::abs(at(jt, jm)));
        env[jt] = mx;
    }
    return env;
}

GridFunction GridFunction::build(TauGrid t, MGrid mg, GridKind k,
                                 const std::function<cd(cd, double)>& f) {
    GridFunction g(std::move(t), std::move(mg), k);
    for (std::size_t jt = 0; jt < g.nt(); ++jt) {
        cd taunode = g.tau.node(jt);
        for (std::size_t jm = 0; jm < g.nm(); ++jm) g.at(jt, jm) = f(taunode, g.m.nodes[jm]);
    }
    g.check_finite();
    return g;
}

namespace {

// Least-squares log-quadratic magnitude + linear phase fit over rows
// [j0, j0+count). Returns a row evaluator at log-radius s.
struct EnvelopeFit {
    // per m-node: |f| model exp(a u^2 + b u + c_m), phase p_m + d_m u, u = s - s0;
    // a is the norm family's growth coefficient, held fixed by the fit
    double a = 0.0, b = 0.0, s0 = 0.0;
    std::vector<double> c, p, d;
};

EnvelopeFit fit_envelope(const GridFunction& f, std::size_t j0, std::size_t count) {
    EnvelopeFit fit;
    const std::size_t nm = f.nm();
    fit.a = f.env_a;
    fit.c.assign(nm, 0.0);
    fit.p.assign(nm, 0.0);
    fit.d.assign(nm, 0.0);

    // Fixed family curvature; fit the linear and constant parts of the
    // tau-envelope (max over m) in centered coordinates, then per-m offsets.
    double s_center = 0.0;
    for (std::size_t i = 0; i < count; ++i)
        s_center += f.tau.log_radius(j0 + i) / static_cast<double>(count);
    fit.s0 = s_center;
    double S0 = 0, S1 = 0, S2 = 0, T0 = 0, T1 = 0;
    for (std::size_t i = 0; i < count; ++i) {
        double u = f.tau.log_radius(j0 + i) - s_center;
        double mx = 0.0;
        for (std::size_t jm = 0; jm < nm; ++jm) mx = std::max(mx, std::abs(f.at(j0 + i, jm)));
        double y = std::log(std::max(mx, 1e-300)) - fit.a * u * u;
        S0 += 1; S1 += u; S2 += u * u; T0 += y; T1 += u * y;
    }
    const double det = S0 * S2 - S1 * S1;
    const double c0 = det != 0.0 ? (S2 * T0 - S1 * T1) / det : T0 / S0;
    fit.b = det != 0.0 ? (S0 * T1 - S1 * T0) / det : 0.0;

    // Per-m magnitude offset and linear phase from the last two rows.
    const std::size_t jA = j0 + count - 2, jB = j0 + count - 1;
    const double sA = f.tau.log_radius(jA) - s_center, sB = f.tau.log_radius(jB) - s_center;
    for (std::size_t jm = 0; jm < nm; ++jm) {
        cd vA = f.at(jA, jm), vB = f.at(jB, jm);
        double mA = std::abs(vA), mB = std::abs(vB);
        if (mB < 1e-300) {
            fit.c[jm] = -745.0;  // effectively zero row
            continue;
        }
        double model_B = fit.a * sB * sB + fit.b * sB + c0;
        fit.c[jm] = c0 + (std::log(mB) - model_B);
        double phA = std::arg(vA), phB = std::arg(vB);
        double dph = phB - phA;
        while (dph > M_PI) dph -= 2 * M_PI;
        while (dph < -M_PI) dph += 2 * M_PI;
        fit.d[jm] = (mA < 1e-300) ? 0.0 : dph / (sB - sA);
        fit.p[jm] = phB;
        fit.p[jm] -= fit.d[jm] * sB;
    }
    return fit;
}

Profile eval_envelope(const EnvelopeFit& fit, double s_abs, std::size_t nm) {
    const double s = s_abs - fit.s0;
    Profile row(nm);
    for (std::size_t jm = 0; jm < nm; ++jm) {
        double lm = fit.a * s * s + fit.b * s + fit.c[jm];
        if (lm < -700.0) {
            row[jm] = cd(0.0, 0.0);
        } else {
            // extrapolated rows live in the flagged buffer; cap them well below
            // overflow so downstream prefactors stay finite
            row[jm] = std::polar(std::exp(std::min(lm, 400.0)), fit.p[jm] + fit.d[jm] * s);
        }
    }
    return row;
}

std::size_t last_unflagged(const GridFunction& f) {
    std::size_t j = f.nt();
    while (j > 0 && f.tau_flags[j - 1]) --j;
    if (j == 0) throw TruncationError("no unflagged tau nodes to extrapolate from");
    return j;  // one past the last unflagged index
}

}  // namespace

Profile envelope_extend(const GridFunction& f, double s, int fit_nodes) {
    const std::size_t jend = last_unflagged(f);
    const std::size_t count = std::min<std::size_t>(fit_nodes, jend);
    if (count < 3) throw TruncationError("envelope_extend: too few nodes for a fit");
    EnvelopeFit fit = fit_envelope(f, jend - count, count);
    return eval_envelope(fit, s, f.nm());
}

GridFunction dilate(const GridFunction& f, Rational gamma, int fit_nodes, bool flag_inner) {
    const int shift = f.tau.shift_of(gamma);
    GridFunction out(f.tau, f.m, f.kind);
    out.env_a = f.env_a;
    const int n = static_cast<int>(f.nt());

    EnvelopeFit fit;
    bool have_fit = false;
    std::size_t jend = 0;
    if (shift > 0) {
        jend = last_unflagged(f);
        const std::size_t count = std::min<std::size_t>(fit_nodes, jend);
        if (count >= 3) {
            fit = fit_envelope(f, jend - count, count);
            have_fit = true;
        }
    }

    for (int j = 0; j < n; ++j) {
        const int src = j + shift;
        if (src < 0) {
            // below the inner end: analytic at 0, hold the innermost value
            for (std::size_t jm = 0; jm < f.nm(); ++jm) out.at(j, jm) = f.at(0, jm);
            out.tau_flags[j] = flag_inner ? 1 : 0;
        } else if (src >= n || f.tau_flags[src]) {
            const double s = f.tau.log_radius(0) + (src)*f.tau.step_log();
            Profile row = have_fit ? eval_envelope(fit, s, f.nm())
                                   : Profile(f.nm(), cd(0.0, 0.0));
            if (src < n && f.tau_flags[src]) {
                // source itself was extrapolated; keep its values, keep the flag
                for (std::size_t jm = 0; jm < f.nm(); ++jm) out.at(j, jm) = f.at(src, jm);
            } else {
                for (std::size_t jm = 0; jm < f.nm(); ++jm) out.at(j, jm) = row[jm];
            }
            out.tau_flags[j] = 1;
        } else {
            for (std::size_t jm = 0; jm < f.nm(); ++jm) out.at(j, jm) = f.at(src, jm);
            out.tau_flags[j] = 0;
        }
    }
    return out;
}

void refresh_outer_extrapolation(GridFunction& f, int fit_nodes) {
    const std::size_t jend = last_unflagged(f);
    if (jend == f.nt()) return;
    const std::size_t count = std::min<std::size_t>(fit_nodes, jend);
    if (count < 3) return;
    EnvelopeFit fit = fit_envelope(f, jend - count, count);
    for (std::size_t j = jend; j < f.nt(); ++j) {
        Profile row = eval_envelope(fit, f.tau.log_radius(j), f.nm());
        for (std::size_t jm = 0; jm < f.nm(); ++jm) f.at(j, jm) = row[jm];
        f.tau_flags[j] = 1;
    }
}

}  // namespace qsum
