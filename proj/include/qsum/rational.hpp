#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "qsum/errors.hpp"

namespace qsum {

// Exact rational exponent for the dilation operators sigma_q^gamma.
// Always stored in lowest terms with positive denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw ParameterError("Rational: zero denominator");
        normalize();
    }

    void normalize() {
        if (den < 0) { num = -num; den = -den; }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend Rational operator+(Rational a, Rational b) { return Rational(a.num * b.den + b.num * a.den, a.den * b.den); }
    friend Rational operator-(Rational a, Rational b) { return Rational(a.num * b.den - b.num * a.den, a.den * b.den); }
    friend Rational operator-(Rational a) { return Rational(-a.num, a.den); }
    friend Rational operator*(Rational a, Rational b) { return Rational(a.num * b.num, a.den * b.den); }
    friend Rational operator/(Rational a, Rational b) {
        if (b.num == 0) throw ParameterError("Rational: division by zero");
        return Rational(a.num * b.den, a.den * b.num);
    }
    friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
    friend bool operator!=(Rational a, Rational b) { return !(a == b); }
    friend bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }

    std::string str() const {
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }
};

inline std::int64_t lcm64(std::int64_t a, std::int64_t b) { return std::lcm(a, b); }

}  // namespace qsum
