#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmeanlab {

using Vec = std::vector<double>;
using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Precondition violations and malformed inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Simulation resource limits (lattice caps) that would otherwise force
// silent truncation.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// %.17g formatting; enough digits for an exact round trip.
inline std::string format_g17(double x) {
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  if (std::isnan(x)) return "NaN";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_l2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_l1(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

inline double norm_linf(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

/// ℓp-norm for p in [1, ∞]; pass kInf for the max-norm.
inline double norm_lp(std::span<const double> x, double p) {
  require(p >= 1.0, "norm_lp: p must be >= 1");
  if (std::isinf(p)) return norm_linf(x);
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

inline Vec sub(std::span<const double> a, std::span<const double> b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline unsigned log2_exact(std::uint64_t v) {
  unsigned k = 0;
  while ((std::uint64_t{1} << k) < v) ++k;
  return k;
}

/// 2^ceil(log2(x)), floored at 1. Throws when the result would not fit.
inline std::uint64_t pow2_ceil(double x) {
  if (!(x > 1.0)) return 1;
  const double e = std::ceil(std::log2(x));
  if (e > 62.0) throw CapacityError("pow2_ceil: grid size 2^" + std::to_string(e) + " overflows");
  return std::uint64_t{1} << static_cast<unsigned>(e);
}

inline std::uint64_t ipow(std::uint64_t base, std::size_t exp, std::uint64_t saturate) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > saturate / base) return saturate;
    r *= base;
  }
  return r;
}

}  // namespace qmeanlab
