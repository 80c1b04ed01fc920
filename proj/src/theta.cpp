#include "qsum/theta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "qsum/errors.hpp"

namespace qsum {

ThetaResult theta_eval_full(const QFrame& fr, Rational k, cd x, double tol, int cap) {
    if (x == cd(0.0, 0.0)) throw PreconditionViolated("theta_eval: x must be nonzero");
    if (!(tol > 0.0)) throw PreconditionViolated("theta_eval: tol must be positive");

    const double lq = fr.logq() / k.value();  // log of q^{1/k}
    // Term n: exp(-n(n-1)/2 * lq + n log x). Gaussian decay on both sides.
    cd sum(1.0, 0.0);  // n = 0 term
    int reached = 0;

    // Positive side: t_{n+1} = t_n * x * q^{-n/k}.
    cd term(1.0, 0.0);
    for (int n = 1;; ++n) {
        term *= x * std::exp(-lq * (n - 1));
        sum += term;
        reached = std::max(reached, n);
        if (!std::isfinite(std::abs(sum)))
            throw NonConvergence("theta_eval: overflow (|x| too large for working precision)");
        if (std::abs(term) < tol * std::abs(sum)) break;
        if (n >= cap)
            throw NonConvergence("theta_eval: positive-side truncation exceeded cap");
    }
    // Negative side: t_{-(n+1)} = t_{-n} * x^{-1} * q^{-(n+1)/k}.
    term = cd(1.0, 0.0);
    for (int n = 0;; ++n) {
        term *= std::exp(-lq * (n + 1)) / x;
        sum += term;
        reached = std::max(reached, n + 1);
        if (!std::isfinite(std::abs(sum)))
            throw NonConvergence("theta_eval: overflow (|x| too small for working precision)");
        if (std::abs(term) < tol * std::abs(sum)) break;
        if (n >= cap)
            throw NonConvergence("theta_eval: negative-side truncation exceeded cap");
    }
    return {sum, reached};
}

cd theta_eval(const QFrame& fr, Rational k, cd x, double tol) {
    return theta_eval_full(fr, k, x, tol).value;
}

double theta_zero_distance(const QFrame& fr, Rational k, cd x, int scan_cap) {
    // Zeros lie on -q^{Z/k}; the infimum of |1 + x q^{m/k}| over m is attained
    // near m* = -k log|x|/log q. Scan a window around it, clamped to the cap.
    const double lqk = fr.logq() / k.value();
    const int m_star = static_cast<int>(std::lround(-std::log(std::abs(x)) / lqk));
    const int lo = std::max(m_star - scan_cap, -1000000);
    const int hi = std::min(m_star + scan_cap, 1000000);
    double best = 1.0;  // |1 + x q^{m/k}| -> 1 as m -> -inf and -> inf as m -> +inf
    for (int m = lo; m <= hi; ++m) {
        double d = std::abs(cd(1.0, 0.0) + x * std::exp(lqk * m));
        best = std::min(best, d);
    }
    return best;
}

double theta_log_envelope(const QFrame& fr, Rational k, double abs_x) {
    const double s = std::log(abs_x);
    return k.value() * s * s / (2.0 * fr.logq()) + 0.5 * s;
}

namespace {
std::map<std::pair<double, std::pair<std::int64_t, std::int64_t>>, double> g_ck_cache;
std::mutex g_ck_mutex;
}  // namespace

double theta_growth_constant(const QFrame& fr, Rational k) {
    const auto key = std::make_pair(fr.q, std::make_pair(k.num, k.den));
    {
        std::lock_guard<std::mutex> lock(g_ck_mutex);
        auto it = g_ck_cache.find(key);
        if (it != g_ck_cache.end()) return it->second;
    }
    // Minimize |Theta(x)| / (dist(x) * envelope(x)) over log-radius and angle.
    // The ratio is log-periodic in |x| with period q^{1/k}, so one period suffices,
    // padded by a second for safety.
    const double lqk = fr.logq() / k.value();
    double cmin = std::numeric_limits<double>::infinity();
    const int nr = 48, na = 96;
    for (int i = 0; i < 2 * nr; ++i) {
        double s = (i + 0.5) * lqk / nr;  // two periods of log|x|
        double r = std::exp(s);
        for (int j = 0; j < na; ++j) {
            double ang = (j + 0.5) * 2.0 * M_PI / na;
            cd x = std::polar(r, ang);
            double dist = theta_zero_distance(fr, k, x);
            if (dist < 1e-6) continue;  // on top of a zero; excluded by the distance factor
            double th = std::abs(theta_eval(fr, k, x, 1e-12));
            double ratio = th / (dist * std::exp(theta_log_envelope(fr, k, r)));
            cmin = std::min(cmin, ratio);
        }
    }
    {
        std::lock_guard<std::mutex> lock(g_ck_mutex);
        g_ck_cache[key] = cmin;
    }
    return cmin;
}

GrowthCheck theta_growth_check(const QFrame& fr, Rational k, cd x, double delta_tilde) {
    double dist = theta_zero_distance(fr, k, x);
    if (!(dist > delta_tilde))
        throw PreconditionViolated("theta_growth_check: x lies within delta_tilde of the zero set");
    const double C = theta_growth_constant(fr, k);
    const double th = std::abs(theta_eval(fr, k, x, 1e-12));
    const double bound = C * delta_tilde * std::exp(theta_log_envelope(fr, k, std::abs(x)));
    return {th >= bound, th / bound};
}

double pi_q(const QFrame& fr, Rational k, double tol) {
    if (!(tol > 0.0)) throw PreconditionViolated("pi_q: tol must be positive");
    const double kv = k.value();
    double prod = 1.0;
    for (int n = 0;; ++n) {
        double f = 1.0 - std::exp(-fr.logq() * (n + 1) / kv);
        prod /= f;
        if (std::abs(1.0 / f - 1.0) < tol) break;
    }
    return fr.logq() / kv * prod;
}

}  // namespace qsum
