#include "audiodict/fft.hpp"

#include <cmath>

namespace audiodict {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void fft_radix2(std::vector<std::complex<double>>& buf) {
    const std::size_t n = buf.size();
    if (n < 2) return;

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -kTwoPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = buf[i + k];
                std::complex<double> v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<std::complex<double>> dft_real(const std::vector<double>& frame) {
    const std::size_t n = frame.size();
    if (is_power_of_two(n)) {
        std::vector<std::complex<double>> buf(n);
        for (std::size_t i = 0; i < n; ++i) buf[i] = std::complex<double>(frame[i], 0.0);
        fft_radix2(buf);
        return buf;
    }
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            double ang = -kTwoPi * static_cast<double>(k) * static_cast<double>(t) /
                         static_cast<double>(n);
            re += frame[t] * std::cos(ang);
            im += frame[t] * std::sin(ang);
        }
        out[k] = std::complex<double>(re, im);
    }
    return out;
}

}  // namespace audiodict
