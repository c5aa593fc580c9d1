#pragma once

// Lower-bound instance families: Search∘Parity inputs, the partial-Hadamard
// and indicator families for the binary oracle, and the fractional-phase
// family for the phase oracle.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "qmeanlab/core.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

/// Sylvester Hadamard matrix scaled by 1/√d, row-major; entry (i,j) is (-1)^{popcount(i&j)}/√d.
inline std::vector<Vec> hadamard(std::size_t d) {
  require(d >= 1 && is_power_of_two(d), "hadamard: d = " + std::to_string(d) + " is not a power of two");
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Vec> h(d, Vec(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) h[i][j] = (std::popcount(i & j) % 2 == 0) ? s : -s;
  return h;
}

inline Vec matvec(const std::vector<Vec>& a, std::span<const double> x) {
  Vec y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = dot(a[i], x);
  return y;
}

/// Transpose product a^T x.
inline Vec matvec_t(const std::vector<Vec>& a, std::span<const double> x) {
  Vec y(a.front().size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += a[i][j] * x[i];
  return y;
}

struct SearchParityInstance {
  std::size_t N = 0;
  std::size_t M = 0;
  std::vector<std::vector<std::uint8_t>> A;  // N x M
  std::vector<std::uint8_t> b;               // b_i = 0 iff row i has weight floor(M/2)
};

inline std::vector<std::uint8_t> row_parity_bits(const SearchParityInstance& inst) {
  std::vector<std::uint8_t> b(inst.N);
  for (std::size_t i = 0; i < inst.N; ++i) {
    const std::size_t w = static_cast<std::size_t>(std::count(inst.A[i].begin(), inst.A[i].end(), 1));
    b[i] = w == inst.M / 2 ? 0 : 1;
  }
  return b;
}

inline SearchParityInstance search_parity_instance(std::size_t N, std::size_t M, Rng& rng) {
  require(N >= 1 && M >= 1, "search_parity_instance: N and M must be positive");
  SearchParityInstance inst;
  inst.N = N;
  inst.M = M;
  std::vector<std::size_t> rows(N);
  std::iota(rows.begin(), rows.end(), 0);
  for (std::size_t i = N; i > 1; --i) std::swap(rows[i - 1], rows[rng.below(i)]);
  std::vector<std::uint8_t> light(N, 0);
  for (std::size_t i = 0; i < N / 2; ++i) light[rows[i]] = 1;

  inst.A.assign(N, std::vector<std::uint8_t>(M, 0));
  inst.b.assign(N, 0);
  std::vector<std::size_t> cols(M);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t w = M / 2 + (light[i] ? 0 : 1);
    std::iota(cols.begin(), cols.end(), 0);
    for (std::size_t t = 0; t < w; ++t) std::swap(cols[t], cols[t + rng.below(M - t)]);
    for (std::size_t t = 0; t < w; ++t) inst.A[i][cols[t]] = 1;
    inst.b[i] = light[i] ? 0 : 1;
  }
  return inst;
}

inline double low_precision_scale(double n, double alpha) { return std::sqrt(n * (alpha * alpha * n - alpha) / 2.0); }

/// Ω = [αn] uniform, X(i) = ασ sqrt(n/((α²n-α)/2)) b_i H_i with H the first
/// αn rows of the normalized Hadamard matrix.
inline RandomVariable hard_rv_low_precision(std::size_t n, std::size_t d, double sigma,
                                            const std::vector<std::uint8_t>& b, std::size_t alpha = 4) {
  require(is_power_of_two(d), "hard_rv_low_precision: d must be a power of two");
  require(n >= 1 && alpha >= 1, "hard_rv_low_precision: n and alpha must be positive");
  require(sigma > 0.0, "hard_rv_low_precision: sigma must be positive");
  const std::size_t rows = alpha * n;
  require(rows <= d, "hard_rv_low_precision: requires alpha*n <= d");
  require(rows >= 2, "hard_rv_low_precision: requires alpha*n >= 2");
  require(b.size() == rows, "hard_rv_low_precision: b must have length alpha*n");
  const auto weight = static_cast<std::size_t>(std::count(b.begin(), b.end(), 1));
  require(2 * weight == rows, "hard_rv_low_precision: b must have Hamming weight alpha*n/2");

  const auto H = hadamard(d);
  const double a = static_cast<double>(alpha);
  const double nd = static_cast<double>(n);
  const double coef = a * sigma * std::sqrt(nd / ((a * a * nd - a) / 2.0));
  std::vector<Vec> vals(rows, Vec(d, 0.0));
  for (std::size_t i = 0; i < rows; ++i)
    if (b[i])
      for (std::size_t j = 0; j < d; ++j) vals[i][j] = coef * H[i][j];
  return RandomVariable::uniform(vals);
}

/// σ / sqrt(n(α²n-α)/2) · H^T b.
inline Vec low_precision_designed_mean(std::size_t n, std::size_t d, double sigma, const std::vector<std::uint8_t>& b,
                                       std::size_t alpha = 4) {
  const auto H = hadamard(d);
  std::vector<Vec> top(H.begin(), H.begin() + static_cast<std::ptrdiff_t>(b.size()));
  Vec bd(b.begin(), b.end());
  Vec mu = matvec_t(top, bd);
  const double s = sigma / low_precision_scale(static_cast<double>(n), static_cast<double>(alpha));
  for (double& v : mu) v *= s;
  return mu;
}

/// b~ = sqrt(n(α²n-α)/2)/σ · H μ restricted to the first αn rows.
inline Vec low_precision_recover(std::span<const double> mu, std::size_t n, double sigma, std::size_t alpha = 4) {
  const auto H = hadamard(mu.size());
  const std::size_t rows = alpha * n;
  std::vector<Vec> top(H.begin(), H.begin() + static_cast<std::ptrdiff_t>(rows));
  Vec b = matvec(top, mu);
  const double s = low_precision_scale(static_cast<double>(n), static_cast<double>(alpha)) / sigma;
  for (double& v : b) v *= s;
  return b;
}

enum class HighPrecisionNormalization {
  Exact,         // chosen so Tr(Σ) = σ² holds exactly
  Definition,    // (αn)² - 2d²
  TraceFormula,  // (αn)² - d²
};

/// Denominator D in the amplitude ασn/sqrt(D).
inline double high_precision_denominator(std::size_t n, std::size_t d, std::size_t alpha, HighPrecisionNormalization norm) {
  const double an = static_cast<double>(alpha * n);
  const double dd = static_cast<double>(d);
  const std::size_t M = alpha * n / d;
  switch (norm) {
    case HighPrecisionNormalization::Exact:
      return M % 2 == 0 ? an * an - 2.0 * dd : an * an - dd;
    case HighPrecisionNormalization::Definition:
      return an * an - 2.0 * dd * dd;
    case HighPrecisionNormalization::TraceFormula:
      return an * an - dd * dd;
  }
  return 0.0;
}

/// Ω = [d] x [αn/d] uniform, X(i,j) = ασn/sqrt(D) (-1)^{1+A_ij} e_i.
inline RandomVariable hard_rv_high_precision(std::size_t n, std::size_t d, double sigma, const SearchParityInstance& inst,
                                             std::size_t alpha = 4,
                                             HighPrecisionNormalization norm = HighPrecisionNormalization::Exact) {
  require(d >= 2 && d % 2 == 0, "hard_rv_high_precision: d must be even");
  require(sigma > 0.0, "hard_rv_high_precision: sigma must be positive");
  require((alpha * n) % d == 0 && alpha * n >= d, "hard_rv_high_precision: alpha*n must be a positive multiple of d");
  const std::size_t M = alpha * n / d;
  require(inst.N == d && inst.M == M, "hard_rv_high_precision: instance must have N = d and M = alpha*n/d");
  const double D = high_precision_denominator(n, d, alpha, norm);
  require(D > 0.0, "hard_rv_high_precision: normalization is not positive for these parameters");
  const double amp = static_cast<double>(alpha * n) * sigma / std::sqrt(D);

  std::vector<std::string> labels;
  std::vector<Vec> vals;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      Vec x(d, 0.0);
      x[i] = inst.A[i][j] ? amp : -amp;
      vals.push_back(std::move(x));
      labels.push_back(std::to_string(i) + "," + std::to_string(j));
    }
  const std::vector<double> prob(vals.size(), 1.0 / static_cast<double>(vals.size()));
  return RandomVariable(std::move(labels), prob, vals);
}

/// Exact mean: amplitude/(αn) · (2w_i - M) per coordinate, i.e. 2σ/sqrt(D)·b for even M.
inline Vec high_precision_designed_mean(std::size_t n, std::size_t d, double sigma, const SearchParityInstance& inst,
                                        std::size_t alpha = 4,
                                        HighPrecisionNormalization norm = HighPrecisionNormalization::Exact) {
  const double D = high_precision_denominator(n, d, alpha, norm);
  const double s = sigma / std::sqrt(D);
  const std::size_t M = alpha * n / d;
  Vec mu(d);
  for (std::size_t i = 0; i < d; ++i)
    mu[i] = M % 2 == 0 ? 2.0 * s * inst.b[i] : s * (2.0 * inst.b[i] - 1.0);
  return mu;
}

/// Threshold each coordinate at half the level separating the two values.
inline std::vector<std::uint8_t> high_precision_recover(std::span<const double> mu) {
  const auto [lo, hi] = std::minmax_element(mu.begin(), mu.end());
  const double mid = (*lo + *hi) / 2.0;
  std::vector<std::uint8_t> b(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) b[i] = (*hi > *lo && mu[i] > mid) ? 1 : 0;
  if (*hi == *lo && *hi > 0.0) std::fill(b.begin(), b.end(), 1);
  return b;
}

/// Ω = [d'] x {0,1}, P(j,x) = cos²(π/4 + (-1)^x ε' b_j / 2)/d' with
/// ε' = asin(d'/n), X(j,x) = x √d'/4 · H e_j.
inline RandomVariable fractional_phase_rv(std::size_t dprime, std::size_t n, const std::vector<std::uint8_t>& b) {
  require(is_power_of_two(dprime), "fractional_phase_rv: d' must be a power of two");
  require(dprime <= n, "fractional_phase_rv: requires d' <= n");
  require(b.size() == dprime, "fractional_phase_rv: b must have length d'");
  const double dp = static_cast<double>(dprime);
  const double eps = std::asin(dp / static_cast<double>(n));
  const auto H = hadamard(dprime);
  std::vector<std::string> labels;
  std::vector<double> prob;
  std::vector<Vec> vals;
  for (std::size_t j = 0; j < dprime; ++j)
    for (int x = 0; x <= 1; ++x) {
      const double sign = x == 0 ? 1.0 : -1.0;
      const double c = std::cos(kPi / 4.0 + sign * eps * b[j] / 2.0);
      prob.push_back(c * c / dp);
      Vec v(dprime, 0.0);
      if (x == 1)
        for (std::size_t i = 0; i < dprime; ++i) v[i] = std::sqrt(dp) / 4.0 * H[i][j];
      vals.push_back(std::move(v));
      labels.push_back(std::to_string(j) + "," + std::to_string(x));
    }
  double total = 0.0;
  for (double p : prob) total += p;
  for (double& p : prob) p /= total;
  return RandomVariable(std::move(labels), std::move(prob), vals);
}

/// (1/8) e_1 + √d'/(8n) · H b.
inline Vec fractional_phase_designed_mean(std::size_t dprime, std::size_t n, const std::vector<std::uint8_t>& b) {
  const auto H = hadamard(dprime);
  Vec bd(b.begin(), b.end());
  Vec mu = matvec(H, bd);
  const double s = std::sqrt(static_cast<double>(dprime)) / (8.0 * static_cast<double>(n));
  for (double& v : mu) v *= s;
  mu[0] += 0.125;
  return mu;
}

inline std::vector<std::uint8_t> balanced_bits(std::size_t len, Rng& rng) {
  require(len % 2 == 0, "balanced_bits: length must be even");
  std::vector<std::uint8_t> b(len, 0);
  std::fill(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(len / 2), 1);
  for (std::size_t i = len; i > 1; --i) std::swap(b[i - 1], b[rng.below(i)]);
  return b;
}

inline std::vector<std::uint8_t> random_bits(std::size_t len, Rng& rng) {
  std::vector<std::uint8_t> b(len);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.next_u64() & 1);
  return b;
}

}  // namespace qmeanlab
