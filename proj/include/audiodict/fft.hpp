#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace audiodict {

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& buf);

// Forward DFT of a real frame. Uses the radix-2 path for power-of-two sizes
// and a direct O(n^2) transform otherwise (small test windows only).
std::vector<std::complex<double>> dft_real(const std::vector<double>& frame);

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace audiodict
