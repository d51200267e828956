#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "placedet/errors.hpp"

namespace placedet::detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. inverse=true applies the
// conjugate transform and the 1/n factor.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0) return;
  if (!is_power_of_two(static_cast<int>(n))) {
    throw InvalidInputError("fft: length must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * 3.14159265358979323846 /
                       static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv;
  }
}

// Row-column 2-D transform of a w x h grid stored row-major.
inline void fft2_inplace(std::vector<std::complex<double>>& a, int w, int h,
                         bool inverse) {
  if (static_cast<std::size_t>(w) * h != a.size()) {
    throw InvalidInputError("fft2: size mismatch");
  }
  std::vector<std::complex<double>> line;
  line.resize(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) line[x] = a[static_cast<std::size_t>(y) * w + x];
    fft_inplace(line, inverse);
    for (int x = 0; x < w; ++x) a[static_cast<std::size_t>(y) * w + x] = line[x];
  }
  line.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) line[y] = a[static_cast<std::size_t>(y) * w + x];
    fft_inplace(line, inverse);
    for (int y = 0; y < h; ++y) a[static_cast<std::size_t>(y) * w + x] = line[y];
  }
}

}  // namespace placedet::detail
