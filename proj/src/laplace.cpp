#include "qsum/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "qsum/errors.hpp"
#include "qsum/geometry.hpp"
#include "qsum/theta.hpp"

namespace qsum {

double kernel_log_envelope(const QFrame& fr, Rational k, double abs_x) {
    return theta_log_envelope(fr, k, abs_x);
}

namespace {

std::map<std::pair<double, std::pair<std::int64_t, std::int64_t>>, double> g_pi_cache;
std::mutex g_pi_mutex;

constexpr double kNegInf = -1e300;
constexpr double kCutoffMargin = 6.0;  // extra nats beyond -log(tol)
constexpr int kDecayRun = 8;           // consecutive sub-cutoff nodes ending a scan

struct TermEval {
    std::function<double(int)> log_mag;  // log|f(u_j)|, kNegInf for zero
    std::function<cd(int)> value;
    int j_min, j_max;  // hard lattice bounds
};

struct Scan {
    int lo, hi;
    bool lo_decayed, hi_decayed;
    double peak;
    int argmax;
};

// Outward scan from jc tracking the running peak of log-terms.
Scan scan_window(const std::function<double(int)>& term_log, int jc, int j_min, int j_max,
                 double width, double peak0) {
    Scan sc{jc, jc, false, false, std::max(peak0, term_log(jc)), jc};
    if (term_log(jc) >= sc.peak) sc.argmax = jc;
    int run = 0;
    for (int j = jc + 1; j <= j_max; ++j) {
        double t = term_log(j);
        if (t > sc.peak) { sc.peak = t; sc.argmax = j; }
        sc.hi = j;
        if (t < sc.peak - width) {
            if (++run >= kDecayRun) break;
        } else {
            run = 0;
        }
    }
    sc.hi_decayed = run >= kDecayRun || term_log(sc.hi) < sc.peak - width ||
                    term_log(sc.hi) == kNegInf;
    run = 0;
    for (int j = jc - 1; j >= j_min; --j) {
        double t = term_log(j);
        if (t > sc.peak) { sc.peak = t; sc.argmax = j; }
        sc.lo = j;
        if (t < sc.peak - width) {
            if (++run >= kDecayRun) break;
        } else {
            run = 0;
        }
    }
    sc.lo_decayed = run >= kDecayRun || term_log(sc.lo) < sc.peak - width ||
                    term_log(sc.lo) == kNegInf;
    return sc;
}

// Windowed-trapezoid core: sum of h * f_j / Theta(u_j/T); caller divides by pi.
cd windowed_sum(const QFrame& fr, Rational k, const TauGrid& lattice, cd T, double tol,
                double delta_tilde, const TermEval& f, RayWindow* win) {
    if (!in_R_domain(T, lattice.direction, delta_tilde))
        throw DomainError("qlaplace: T outside R_{d,delta_tilde}");
    const double h = lattice.step_log();
    const double s0 = lattice.log_radius(0);
    const double sT = std::log(std::abs(T));
    int jc = static_cast<int>(std::lround((sT - s0) / h));
    jc = std::clamp(jc, f.j_min, f.j_max);

    auto term_log = [&](int j) {
        double lm = f.log_mag(j);
        if (lm == kNegInf) return kNegInf;
        double t = lm - kernel_log_envelope(fr, k, std::exp(s0 + j * h - sT));
        // a non-finite f this far out sits beyond the kernel's Gaussian peak,
        // where the true term has long since decayed
        if (!std::isfinite(t)) return kNegInf;
        return t;
    };

    const double width = -std::log(tol) + kCutoffMargin;
    // iterate the outward scan from the running argmax until the window is
    // anchored at the true peak (the kernel center is only a first guess)
    Scan sc = scan_window(term_log, jc, f.j_min, f.j_max, width, kNegInf);
    for (int pass = 0; pass < 4 && sc.argmax != jc; ++pass) {
        jc = sc.argmax;
        sc = scan_window(term_log, jc, f.j_min, f.j_max, width, sc.peak);
    }
    if (sc.peak == kNegInf) {
        if (win) *win = RayWindow{jc, jc, kNegInf};
        return cd(0.0, 0.0);
    }
    if (!sc.hi_decayed)
        throw QuadratureError("qlaplace: outer tail not decayed at the lattice end (|T|=" +
                              std::to_string(std::abs(T)) + ", window [" +
                              std::to_string(sc.lo) + "," + std::to_string(sc.hi) + "] of [" +
                              std::to_string(f.j_min) + "," + std::to_string(f.j_max) +
                              "], edge/peak=" +
                              std::to_string(term_log(sc.hi) - sc.peak) + ")");
    if (!sc.lo_decayed)
        throw QuadratureError("qlaplace: inner tail not decayed at the lattice end (|T|=" +
                              std::to_string(std::abs(T)) + ")");

    cd acc(0.0, 0.0);
    const double ang = lattice.direction - std::arg(T);
    for (int j = sc.lo; j <= sc.hi; ++j) {
        if (term_log(j) < sc.peak - width - 14.0) continue;  // negligible, skip theta
        const double r = std::exp(s0 + j * h - sT);
        const cd x = std::polar(r, ang);
        const cd th = theta_eval(fr, k, x, std::min(1e-3 * tol, 1e-12));
        acc += f.value(j) / th;
    }
    if (win) {
        win->j_lo = sc.lo;
        win->j_hi = sc.hi;
        win->tail_log = std::max(term_log(sc.lo), term_log(sc.hi)) - sc.peak;
    }
    return acc * h;
}

}  // namespace

double pi_norm(const QFrame& fr, Rational k) {
    // Moment-true normalization for the series kernel: the n-th kernel moment
    // is q^{n(n-1)/(2k)} log(q)/k, so this constant makes the transform invert
    // the formal q-Borel rescaling exactly.
    return fr.logq() / k.value();
}

cd qlaplace_grid_row(const GridFunction& w, Rational k, std::size_t jm, cd T, double tol,
                     double delta_tilde, RayWindow* win) {
    QFrame fr;
    fr.q = w.tau.q;
    TermEval f;
    f.j_min = 0;
    f.j_max = static_cast<int>(w.nt()) - 1;
    f.log_mag = [&w, jm](int j) {
        double a = std::abs(w.at(j, jm));
        return a > 0.0 ? std::log(a) : kNegInf;
    };
    f.value = [&w, jm](int j) { return w.at(j, jm); };
    cd s = windowed_sum(fr, k, w.tau, T, tol, delta_tilde, f, win);
    return s / pi_norm(fr, k);
}

Profile qlaplace_grid(const GridFunction& w, Rational k, cd T, double tol, double delta_tilde) {
    Profile out(w.nm());
    for (std::size_t jm = 0; jm < w.nm(); ++jm)
        out[jm] = qlaplace_grid_row(w, k, jm, T, tol, delta_tilde);
    return out;
}

cd qlaplace_fn(const QFrame& fr, Rational k, const TauGrid& lattice,
               const std::function<cd(cd)>& f, cd T, double tol, double delta_tilde,
               RayWindow* win) {
    TermEval te;
    const double h = lattice.step_log();
    const double s0 = lattice.log_radius(0);
    // closed-form integrands: lattice capped at |log r| = 250, far beyond any
    // admissible kernel window, guarding overflow and runaway scans
    te.j_min = static_cast<int>((-250.0 - s0) / h);
    te.j_max = static_cast<int>((250.0 - s0) / h);
    const double dir = lattice.direction;
    auto node = [s0, h, dir](int j) { return std::polar(std::exp(s0 + j * h), dir); };
    te.log_mag = [&f, node](int j) {
        double a = std::abs(f(node(j)));
        return a > 0.0 ? std::log(a) : kNegInf;
    };
    te.value = [&f, node](int j) { return f(node(j)); };
    cd s = windowed_sum(fr, k, lattice, T, tol, delta_tilde, te, win);
    return s / pi_norm(fr, k);
}

}  // namespace qsum
