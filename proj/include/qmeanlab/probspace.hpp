#pragma once

// Finite multivariate random variables: a probability mass over labelled
// outcomes together with a K x d table of values.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "qmeanlab/core.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

inline constexpr double kProbSumTolerance = 1e-12;

class RandomVariable {
 public:
  /// Rows of `values` are X(ω_k). Empty `labels` defaults to "0", "1", ...
  RandomVariable(std::vector<std::string> labels, std::vector<double> prob, const std::vector<Vec>& values)
      : labels_(std::move(labels)), prob_(std::move(prob)) {
    require(!prob_.empty(), "RandomVariable: empty sample space");
    require(values.size() == prob_.size(), "RandomVariable: values has " + std::to_string(values.size()) +
                                               " rows but prob has " + std::to_string(prob_.size()) + " entries");
    dim_ = values.front().size();
    require(dim_ >= 1, "RandomVariable: dimension must be positive");
    values_.reserve(prob_.size() * dim_);
    for (std::size_t k = 0; k < values.size(); ++k) {
      require(values[k].size() == dim_, "RandomVariable: value row " + std::to_string(k) + " has length " +
                                            std::to_string(values[k].size()) + ", expected " + std::to_string(dim_));
      for (double v : values[k]) require(std::isfinite(v), "RandomVariable: non-finite value in row " + std::to_string(k));
      values_.insert(values_.end(), values[k].begin(), values[k].end());
    }
    validate_probabilities_and_labels();
  }

  RandomVariable(std::vector<double> prob, const std::vector<Vec>& values) : RandomVariable({}, std::move(prob), values) {}

  static RandomVariable point_mass(Vec x) { return RandomVariable({1.0}, {std::move(x)}); }

  static RandomVariable uniform(const std::vector<Vec>& values) {
    require(!values.empty(), "RandomVariable::uniform: no outcomes");
    return RandomVariable(std::vector<double>(values.size(), 1.0 / static_cast<double>(values.size())), values);
  }

  std::size_t size() const { return prob_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& prob() const { return prob_; }
  double prob(std::size_t k) const { return prob_[k]; }

  std::span<const double> value(std::size_t k) const { return {values_.data() + k * dim_, dim_}; }

  std::vector<Vec> value_rows() const {
    std::vector<Vec> rows(size());
    for (std::size_t k = 0; k < size(); ++k) rows[k].assign(value(k).begin(), value(k).end());
    return rows;
  }

  /// Same probability space, values replaced row by row.
  template <class F>
  RandomVariable map_values(F&& f) const {
    std::vector<Vec> rows;
    rows.reserve(size());
    for (std::size_t k = 0; k < size(); ++k) rows.push_back(f(value(k)));
    return RandomVariable(labels_, prob_, rows);
  }

 private:
  void validate_probabilities_and_labels() {
    double total = 0.0;
    for (std::size_t k = 0; k < prob_.size(); ++k) {
      require(std::isfinite(prob_[k]) && prob_[k] >= 0.0 && prob_[k] <= 1.0,
              "RandomVariable: prob[" + std::to_string(k) + "] outside [0,1]");
      total += prob_[k];
    }
    require(std::abs(total - 1.0) <= kProbSumTolerance,
            "RandomVariable: probabilities sum to " + std::to_string(total) + ", expected 1");
    if (labels_.empty()) {
      labels_.resize(prob_.size());
      for (std::size_t k = 0; k < prob_.size(); ++k) labels_[k] = std::to_string(k);
    }
    require(labels_.size() == prob_.size(), "RandomVariable: label count does not match prob");
    std::unordered_set<std::string> seen(labels_.begin(), labels_.end());
    require(seen.size() == labels_.size(), "RandomVariable: labels are not pairwise distinct");
  }

  std::vector<std::string> labels_;
  std::vector<double> prob_;
  Vec values_;  // row-major K x d
  std::size_t dim_ = 0;
};

struct MomentSummary {
  Vec mean;
  double cov_trace = 0.0;
  double spectral_norm = 0.0;
  double exp_norm2 = 0.0;     // E||X||_2
  double exp_norm2_sq = 0.0;  // E||X||_2^2
};

inline Vec mean(const RandomVariable& rv) {
  Vec mu(rv.dim(), 0.0);
  for (std::size_t k = 0; k < rv.size(); ++k) {
    const auto x = rv.value(k);
    for (std::size_t j = 0; j < rv.dim(); ++j) mu[j] += rv.prob(k) * x[j];
  }
  return mu;
}

inline double expected_norm(const RandomVariable& rv) {
  double s = 0.0;
  for (std::size_t k = 0; k < rv.size(); ++k) s += rv.prob(k) * norm_l2(rv.value(k));
  return s;
}

inline double expected_norm_sq(const RandomVariable& rv) {
  double s = 0.0;
  for (std::size_t k = 0; k < rv.size(); ++k) s += rv.prob(k) * dot(rv.value(k), rv.value(k));
  return s;
}

inline double max_norm(const RandomVariable& rv) {
  double s = 0.0;
  for (std::size_t k = 0; k < rv.size(); ++k) s = std::max(s, norm_l2(rv.value(k)));
  return s;
}

/// Dense covariance matrix, row-major d x d.
inline Vec covariance(const RandomVariable& rv) {
  const std::size_t d = rv.dim();
  const Vec mu = mean(rv);
  Vec cov(d * d, 0.0);
  Vec c(d);
  for (std::size_t k = 0; k < rv.size(); ++k) {
    const auto x = rv.value(k);
    for (std::size_t i = 0; i < d; ++i) c[i] = x[i] - mu[i];
    const double p = rv.prob(k);
    if (p == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += p * c[i] * c[j];
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) cov[i * d + j] = cov[j * d + i];
  return cov;
}

namespace detail {

inline Vec sym_matvec(const Vec& a, std::size_t d, const Vec& v) {
  Vec r(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) r[i] = dot({a.data() + i * d, d}, v);
  return r;
}

// Power iteration on a PSD matrix. Starts from the normalized all-ones
// vector; if that start is annihilated (orthogonal to every eigenvector with
// a nonzero eigenvalue) it restarts once from a fixed pseudo-random vector.
inline double psd_spectral_norm(const Vec& a, std::size_t d, double rel_tol = 1e-9, int max_iter = 10000) {
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += a[i * d + i];
  if (trace <= 0.0) return 0.0;

  auto run = [&](Vec v) {
    const double n0 = norm_l2(v);
    for (double& x : v) x /= n0;
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      Vec w = sym_matvec(a, d, v);
      const double rq = dot(v, w);
      const double nw = norm_l2(w);
      if (nw <= 1e-300) return 0.0;
      for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / nw;
      if (it > 0 && std::abs(rq - lambda) <= rel_tol * std::abs(rq)) return rq;
      lambda = rq;
    }
    return lambda;
  };

  double lambda = run(Vec(d, 1.0));
  if (lambda <= 1e-12 * trace) {
    Rng rng(0x5EC7A1ULL);
    Vec v(d);
    for (double& x : v) x = rng.uniform() - 0.5;
    lambda = std::max(lambda, run(std::move(v)));
  }
  return std::clamp(lambda, 0.0, trace);
}

}  // namespace detail

inline MomentSummary moments(const RandomVariable& rv) {
  MomentSummary s;
  s.mean = mean(rv);
  s.exp_norm2 = expected_norm(rv);
  s.exp_norm2_sq = expected_norm_sq(rv);
  const Vec cov = covariance(rv);
  double tr = 0.0;
  for (std::size_t i = 0; i < rv.dim(); ++i) tr += cov[i * rv.dim() + i];
  s.cov_trace = std::max(tr, 0.0);
  s.spectral_norm = detail::psd_spectral_norm(cov, rv.dim());
  return s;
}

/// x when a < ||x||_2 <= b, the zero vector otherwise.
inline Vec clamp_vec(std::span<const double> x, double a, double b) {
  require(a >= 0.0 && a < b, "clamp: requires 0 <= a < b");
  const double r = norm_l2(x);
  if (a < r && r <= b) return Vec(x.begin(), x.end());
  return Vec(x.size(), 0.0);
}

/// y when a < |y| <= b, else 0. Sign is preserved.
inline double clamp_scalar(double y, double a, double b) {
  require(a >= 0.0 && a < b, "clamp: requires 0 <= a < b");
  const double r = std::abs(y);
  return (a < r && r <= b) ? y : 0.0;
}

/// ω ↦ clamp_vec(X(ω), a, b); `b` may be infinite.
inline RandomVariable clamp_rv(const RandomVariable& rv, double a, double b) {
  return rv.map_values([&](std::span<const double> x) { return clamp_vec(x, a, b); });
}

/// ω ↦ clamp_vec(Y(ω), a_lo, a_hi) / a_hi. Output lies in the unit ℓ2 ball.
inline RandomVariable truncate_normalized(const RandomVariable& rv, double a_lo, double a_hi) {
  require(a_lo >= 0.0 && a_lo < a_hi && std::isfinite(a_hi), "truncate_normalized: requires 0 <= a_lo < a_hi < inf");
  return rv.map_values([&](std::span<const double> x) {
    Vec y = clamp_vec(x, a_lo, a_hi);
    for (double& v : y) v /= a_hi;
    return y;
  });
}

inline RandomVariable norm_rv(const RandomVariable& rv) {
  return rv.map_values([](std::span<const double> x) { return Vec{norm_l2(x)}; });
}

inline RandomVariable shift(const RandomVariable& rv, std::span<const double> eta) {
  require(eta.size() == rv.dim(), "shift: eta has length " + std::to_string(eta.size()) + ", expected " +
                                      std::to_string(rv.dim()));
  return rv.map_values([&](std::span<const double> x) { return sub(x, eta); });
}

/// Q(p) = sup{x : Pr[X >= x] >= p} over the finite support (zero-mass
/// outcomes ignored). Q(0) is +inf.
inline double exact_quantile(const RandomVariable& rv, double p) {
  require(rv.dim() == 1, "exact_quantile: random variable must be univariate");
  require(p >= 0.0 && p <= 1.0, "exact_quantile: p outside [0,1]");
  if (p == 0.0) return kInf;
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t k = 0; k < rv.size(); ++k)
    if (rv.prob(k) > 0.0) atoms.emplace_back(rv.value(k)[0], rv.prob(k));
  std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  // Summation slack only; probabilities themselves are exact to 1e-12.
  constexpr double kSlack = 1e-12;
  double tail = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    tail += atoms[i].second;
    const bool last_of_value = i + 1 == atoms.size() || atoms[i + 1].first != atoms[i].first;
    if (last_of_value && tail >= p - kSlack) return atoms[i].first;
  }
  return atoms.back().first;
}

/// Pr[X >= x] for a univariate random variable.
inline double tail_probability(const RandomVariable& rv, double x, bool strict = false) {
  require(rv.dim() == 1, "tail_probability: random variable must be univariate");
  double s = 0.0;
  for (std::size_t k = 0; k < rv.size(); ++k) {
    const double v = rv.value(k)[0];
    if (strict ? v > x : v >= x) s += rv.prob(k);
  }
  return s;
}

/// Outcome j has probability |a_j|^2 and value (λ_{1,j}, ..., λ_{d,j}).
/// `eigenvalues` holds d rows of length N.
inline RandomVariable from_commuting_observables(std::span<const Complex> amplitudes,
                                                 const std::vector<Vec>& eigenvalues) {
  const std::size_t n = amplitudes.size();
  require(n >= 1, "from_commuting_observables: no amplitudes");
  require(!eigenvalues.empty(), "from_commuting_observables: no observables");
  double norm_sq = 0.0;
  for (const Complex& a : amplitudes) norm_sq += std::norm(a);
  require(std::abs(std::sqrt(norm_sq) - 1.0) <= 1e-9,
          "from_commuting_observables: amplitudes have norm " + std::to_string(std::sqrt(norm_sq)) + ", expected 1");
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    require(eigenvalues[i].size() == n, "from_commuting_observables: eigenvalue row " + std::to_string(i) +
                                            " has length " + std::to_string(eigenvalues[i].size()));
  std::vector<double> prob(n);
  std::vector<std::string> labels(n);
  std::vector<Vec> rows(n, Vec(eigenvalues.size()));
  for (std::size_t j = 0; j < n; ++j) {
    prob[j] = std::norm(amplitudes[j]) / norm_sq;
    labels[j] = "phi_" + std::to_string(j);
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) rows[j][i] = eigenvalues[i][j];
  }
  return RandomVariable(std::move(labels), std::move(prob), rows);
}

}  // namespace qmeanlab
