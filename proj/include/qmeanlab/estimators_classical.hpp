#pragma once

// Classical baselines on i.i.d. draws: empirical mean, median-of-means and
// the sub-Gaussian stand-in built on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "qmeanlab/core.hpp"
#include "qmeanlab/oracles.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

struct SampleBatch {
  std::vector<Vec> draws;
  std::uint64_t seed = 0;
  std::size_t count = 0;
};

/// Per coordinate, the ceil(r/2)-th smallest value.
inline Vec coordinate_median(const std::vector<Vec>& estimates) {
  require(!estimates.empty(), "coordinate_median: empty list");
  const std::size_t d = estimates.front().size();
  const std::size_t r = estimates.size();
  Vec out(d);
  Vec col(r);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < r; ++i) {
      require(estimates[i].size() == d, "coordinate_median: ragged estimates");
      col[i] = estimates[i][j];
    }
    const auto mid = col.begin() + static_cast<std::ptrdiff_t>((r - 1) / 2);
    std::nth_element(col.begin(), mid, col.end());
    out[j] = *mid;
  }
  return out;
}

/// Inverse-CDF sampler over the outcomes of a random variable.
class OutcomeSampler {
 public:
  explicit OutcomeSampler(const RandomVariable& rv) : cdf_(rv.size()) {
    double s = 0.0;
    for (std::size_t k = 0; k < rv.size(); ++k) cdf_[k] = (s += rv.prob(k));
  }

  std::size_t draw(Rng& rng) const {
    const double x = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
    return it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
  }

 private:
  Vec cdf_;
};

inline SampleBatch sample(const RandomVariable& rv, std::size_t count, Rng& rng, CostLedger* ledger = nullptr) {
  require(count >= 1, "sample: count must be at least 1");
  SampleBatch b;
  b.seed = rng.seed();
  b.count = count;
  b.draws.reserve(count);
  const OutcomeSampler s(rv);
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = rv.value(s.draw(rng));
    b.draws.emplace_back(x.begin(), x.end());
  }
  if (ledger) ledger->classical_samples += count;
  return b;
}

inline Vec empirical_mean(const SampleBatch& batch) {
  require(!batch.draws.empty(), "empirical_mean: empty batch");
  Vec m(batch.draws.front().size(), 0.0);
  for (const Vec& x : batch.draws)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += x[j];
  for (double& v : m) v /= static_cast<double>(batch.draws.size());
  return m;
}

/// Contiguous blocks, remainder appended to the last block.
inline Vec median_of_means(const SampleBatch& batch, std::size_t groups) {
  const std::size_t n = batch.draws.size();
  require(groups >= 1, "median_of_means: groups must be at least 1");
  require(groups <= n, "median_of_means: groups = " + std::to_string(groups) + " exceeds count = " + std::to_string(n));
  const std::size_t d = batch.draws.front().size();
  const std::size_t block = n / groups;
  std::vector<Vec> means;
  means.reserve(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t lo = g * block;
    const std::size_t hi = g + 1 == groups ? n : lo + block;
    Vec m(d, 0.0);
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = 0; j < d; ++j) m[j] += batch.draws[i][j];
    for (double& v : m) v /= static_cast<double>(hi - lo);
    means.push_back(std::move(m));
  }
  return coordinate_median(means);
}

inline std::size_t subgaussian_groups(std::size_t n, double delta) {
  const auto g = static_cast<std::size_t>(8.0 * std::ceil(std::log2(2.0 / delta)));
  return std::clamp<std::size_t>(g, 1, n);
}

/// Exactly n draws, median-of-means over min(n, 8 ceil(log2(2/δ))) groups.
inline std::pair<Vec, SampleBatch> subgaussian_estimate(const RandomVariable& rv, std::size_t n, double delta, Rng& rng,
                                                        CostLedger* ledger = nullptr) {
  require(delta > 0.0 && delta < 1.0, "subgaussian_estimate: delta must lie in (0,1)");
  require(static_cast<double>(n) >= std::max(1.0, std::ceil(std::log2(1.0 / delta))),
          "subgaussian_estimate: n = " + std::to_string(n) + " is below ceil(log2(1/delta))");
  SampleBatch b = sample(rv, n, rng, ledger);
  Vec est = median_of_means(b, subgaussian_groups(n, delta));
  return {std::move(est), std::move(b)};
}

}  // namespace qmeanlab
