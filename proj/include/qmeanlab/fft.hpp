#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qmeanlab/core.hpp"

namespace qmeanlab {

// Iterative in-place radix-2 transform, unnormalized:
//   x_b <- sum_a x_a exp(sign * 2 pi i a b / n).
class Radix2Fft {
 public:
  explicit Radix2Fft(std::size_t n) : n_(n), roots_(n / 2) {
    require(is_power_of_two(n), "Radix2Fft: length must be a power of two");
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
      roots_[k] = Complex(std::cos(ang), std::sin(ang));
    }
  }

  std::size_t size() const { return n_; }

  void transform(std::span<Complex> x, int sign) const {
    require(x.size() == n_, "Radix2Fft: length mismatch");
    if (n_ == 1) return;
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j |= bit;
      if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const Complex& r = roots_[k * step];
          const Complex w = sign > 0 ? r : std::conj(r);
          const Complex t = w * x[start + k + half];
          x[start + k + half] = x[start + k] - t;
          x[start + k] += t;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<Complex> roots_;
};

}  // namespace qmeanlab
