#pragma once

#include <complex>
#include <vector>

#include "qsum/errors.hpp"
#include "qsum/qframe.hpp"
#include "qsum/rational.hpp"

namespace qsum {

using cd = std::complex<double>;

// Truncated formal power series sum a_n T^n, n = 0..N. Missing high-order
// terms are a truncation of the true series, not zeros.
struct FormalSeries {
    std::vector<cd> coeffs;  // length N+1

    FormalSeries() = default;
    explicit FormalSeries(std::vector<cd> c) : coeffs(std::move(c)) {}
    static FormalSeries monomial(int n, cd a = cd(1.0, 0.0)) {
        std::vector<cd> c(n + 1, cd(0.0, 0.0));
        c[n] = a;
        return FormalSeries(std::move(c));
    }
    int truncation() const { return static_cast<int>(coeffs.size()) - 1; }
    cd eval(cd T) const {
        cd acc(0.0, 0.0);
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * T + coeffs[i];
        return acc;
    }
};

// Exact exponent n(n-1)/(2k) of the Borel rescaling (n(n-1) is always even).
inline Rational borel_exponent(std::int64_t n, Rational k) {
    return Rational(n * (n - 1), 2) / k;
}

// Formal q-Borel transform of order k: a_n -> a_n / (q^{1/k})^{n(n-1)/2}.
inline FormalSeries qborel_formal(const FormalSeries& s, const QFrame& fr, Rational k) {
    FormalSeries out = s;
    for (std::size_t n = 0; n < out.coeffs.size(); ++n)
        out.coeffs[n] /= fr.qpow(borel_exponent(static_cast<std::int64_t>(n), k));
    return out;
}

// T^sigma sigma_q^j applied to a series: coefficient n of the result is
// a_{n-sigma} q^{j(n-sigma)}.
inline FormalSeries shift_dilate(const FormalSeries& s, const QFrame& fr, int sigma, Rational j) {
    if (sigma < 0) throw ParameterError("shift_dilate: sigma must be nonnegative");
    std::vector<cd> c(s.coeffs.size() + sigma, cd(0.0, 0.0));
    for (std::size_t n = 0; n < s.coeffs.size(); ++n)
        c[n + sigma] = s.coeffs[n] * fr.qpow(j * Rational(static_cast<std::int64_t>(n)));
    return FormalSeries(std::move(c));
}

// Image of T^sigma sigma_q^j a(T) under the formal q-Borel transform of order k,
// computed coefficientwise (the left-hand side of the shift identity).
inline FormalSeries qborel_shift_image(const FormalSeries& s, const QFrame& fr, Rational k,
                                       int sigma, Rational j) {
    return qborel_formal(shift_dilate(s, fr, sigma, j), fr, k);
}

// Dilation of a series in place: sigma_q^gamma a(T) has coefficients a_n q^{gamma n}.
inline FormalSeries dilate_series(const FormalSeries& s, const QFrame& fr, Rational gamma) {
    FormalSeries out = s;
    for (std::size_t n = 0; n < out.coeffs.size(); ++n)
        out.coeffs[n] *= fr.qpow(gamma * Rational(static_cast<std::int64_t>(n)));
    return out;
}

}  // namespace qsum
