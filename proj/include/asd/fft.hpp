#pragma once

// Iterative radix-2 FFT, power-of-two sizes only. Enough for the fixed
// 2048-point analysis window used by the feature frontend.

#include <cmath>
#include <complex>
#include <vector>

#include "asd/common.hpp"

namespace asd {

inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw AsdError("fft size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / double(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Power spectrum |X_k|^2 for k = 0..n/2 of a real frame.
inline void power_spectrum(const std::vector<double>& frame, std::vector<double>& out) {
    std::vector<std::complex<double>> a(frame.begin(), frame.end());
    fft_inplace(a);
    const std::size_t half = frame.size() / 2;
    out.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) out[k] = std::norm(a[k]);
}

}  // namespace asd
