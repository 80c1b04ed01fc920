#pragma once

#include <cmath>

#include "qsum/errors.hpp"
#include "qsum/rational.hpp"

namespace qsum {

// Arithmetic backbone of every transform: base q and the two orders k1 < k2,
// with the derived order kappa, 1/kappa = 1/k1 - 1/k2, kept exactly rational.
struct QFrame {
    double q = 2.0;
    int k1 = 1;
    int k2 = 2;
    Rational kappa;  // k1*k2/(k2-k1)

    QFrame() : kappa(2, 1) {}
    QFrame(double q_, int k1_, int k2_) : q(q_), k1(k1_), k2(k2_), kappa(0, 1) {
        if (!(q > 1.0)) throw ParameterError("QFrame: q must exceed 1");
        if (!(1 <= k1 && k1 < k2)) throw ParameterError("QFrame: need 1 <= k1 < k2");
        kappa = Rational(1, 1) / (Rational(1, k1) - Rational(1, k2));
    }

    double logq() const { return std::log(q); }
    double kappa_val() const { return kappa.value(); }

    // q^e for a rational exponent e (floating evaluation of an exact exponent).
    double qpow(Rational e) const { return std::exp(e.value() * logq()); }
    double qpow(double e) const { return std::exp(e * logq()); }
};

}  // namespace qsum
