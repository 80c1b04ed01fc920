#pragma once

#include <complex>
#include <vector>

namespace qsum {

using cd = std::complex<double>;

// Complex polynomial, coefficients low-to-high degree.
struct CPoly {
    std::vector<cd> coeffs;

    CPoly() = default;
    explicit CPoly(std::vector<cd> c) : coeffs(std::move(c)) { trim(); }

    void trim() {
        while (coeffs.size() > 1 && coeffs.back() == cd(0.0, 0.0)) coeffs.pop_back();
    }
    int degree() const { return coeffs.empty() ? 0 : static_cast<int>(coeffs.size()) - 1; }
    bool is_zero() const {
        for (const cd& c : coeffs)
            if (c != cd(0.0, 0.0)) return false;
        return true;
    }

    cd eval(cd x) const {
        cd acc(0.0, 0.0);
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
        return acc;
    }
    // Evaluation at i*m, the Fourier-symbol convention used throughout.
    cd eval_im(double m) const { return eval(cd(0.0, m)); }
};

}  // namespace qsum
