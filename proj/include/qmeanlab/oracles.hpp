#pragma once

// Semantic oracles: the phase functions the binary and phase oracle
// constructions realize, seeded imperfections, the simulated quantile
// oracle, and cost accounting in model units.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "qmeanlab/core.hpp"
#include "qmeanlab/gridqft.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

struct CostLedger {
  double experiments = 0.0;
  double binary_queries = 0.0;
  double phase_queries = 0.0;
  std::uint64_t classical_samples = 0;
  std::uint64_t quantile_calls = 0;

  CostLedger& operator+=(const CostLedger& o) {
    experiments += o.experiments;
    binary_queries += o.binary_queries;
    phase_queries += o.phase_queries;
    classical_samples += o.classical_samples;
    quantile_calls += o.quantile_calls;
    return *this;
  }

  friend CostLedger operator+(CostLedger a, const CostLedger& b) { return a += b; }
  bool operator==(const CostLedger&) const = default;
};

struct OracleConfig {
  double cost_constant = 1.0;  // C, multiplies every cost formula
  double quantile_c = 0.25;    // c in Q(p) <= Q~ <= Q(cp)
  bool exact_quantiles = false;
};

struct NoiseModel {
  enum class Mode { IDEAL, PERTURBED };
  Mode mode = Mode::IDEAL;
  double eps = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;

  static NoiseModel ideal() { return {}; }
  static NoiseModel perturbed(double eps, double eta, std::uint64_t seed) {
    require(eps > 0.0 && eps < 1.0, "NoiseModel: eps must lie in (0,1)");
    require(eta > 0.0 && eta < 1.0, "NoiseModel: eta must lie in (0,1)");
    return {Mode::PERTURBED, eps, eta, seed};
  }

  bool is_ideal() const { return mode == Mode::IDEAL; }
  std::string describe() const {
    if (is_ideal()) return "ideal";
    return "perturbed(eps=" + std::to_string(eps) + ",eta=" + std::to_string(eta) + ",seed=" + std::to_string(seed) + ")";
  }
};

inline double clog2(double x) { return std::ceil(std::log2(x)); }

enum class ConversionKind { AmplitudeAmplification, AmpToPhase, PhaseToAmp };

struct ConversionParams {
  double t = 0.0;
  double eps = 0.5;
  double delta = 1.0;
};

/// Model-unit costs of the amplitude/phase conversions.
inline double conversion_costs(ConversionKind kind, const ConversionParams& p, double C = 1.0) {
  require(p.eps > 0.0 && p.eps < 1.0, "conversion_costs: eps must lie in (0,1)");
  require(p.t >= 0.0, "conversion_costs: t must be nonnegative");
  const double l = std::log2(1.0 / p.eps);
  switch (kind) {
    case ConversionKind::AmplitudeAmplification:
      return C * p.t * l;
    case ConversionKind::AmpToPhase:
      return C * (p.t + l);
    case ConversionKind::PhaseToAmp:
      require(p.delta > 0.0, "conversion_costs: delta must be positive");
      return C * l / p.delta;
  }
  return 0.0;
}

inline double binary_oracle_cost(std::uint64_t m, double L2, double eps, double C = 1.0) {
  const double l = clog2(1.0 / eps);
  return C * static_cast<double>(m) * std::sqrt(L2) * l * l;
}

struct PhaseModelCost {
  double experiments;
  double phase_queries;
};

inline PhaseModelCost phase_model_cost(std::uint64_t m, std::size_t d, double eps, double eta, double C = 1.0) {
  const double l = clog2(1.0 / (eps * eta));
  const double md = static_cast<double>(m);
  const double dd = static_cast<double>(d);
  return {C * std::sqrt(dd) * md * l * l, C * dd * md * l * l * l * l};
}

inline constexpr double kMomentTolerance = 1e-12;

/// θ_u = m Σ_ω P(ω) clamp(α<u,X(ω)>, 0, 1).
inline PhaseFunction directional_phases_binary(const RandomVariable& rv, double L2, std::uint64_t m, double alpha,
                                               double eps, CostLedger& ledger, const OracleConfig& cfg = {}) {
  require(L2 > 0.0 && L2 <= 1.0, "directional_phases_binary: L2 must lie in (0,1]");
  require(alpha > 0.0 && alpha < 1.0, "directional_phases_binary: alpha must lie in (0,1)");
  require(eps > 0.0 && eps < 1.0, "directional_phases_binary: eps must lie in (0,1)");
  require(static_cast<double>(m) * L2 >= 1.0, "directional_phases_binary: requires m >= 1/L2");
  double max_l1 = 0.0;
  for (std::size_t k = 0; k < rv.size(); ++k) {
    const double r = norm_l2(rv.value(k));
    require(r <= 1.0 + kMomentTolerance,
            "directional_phases_binary: outcome " + std::to_string(k) + " has norm " + std::to_string(r) + " > 1");
    max_l1 = std::max(max_l1, norm_l1(rv.value(k)));
  }
  const double en = expected_norm(rv);
  require(en <= L2 + kMomentTolerance, "directional_phases_binary: L2 = " + std::to_string(L2) +
                                           " is below the true E||X||_2 = " + std::to_string(en));

  const double md = static_cast<double>(m);
  const auto shared = std::make_shared<RandomVariable>(rv);
  auto eval = [shared, md, alpha](std::span<const double> u) {
    double s = 0.0;
    for (std::size_t k = 0; k < shared->size(); ++k) {
      const double p = shared->prob(k);
      if (p == 0.0) continue;
      const double y = alpha * dot(u, shared->value(k));
      s += p * (std::abs(y) <= 1.0 ? y : 0.0);
    }
    return md * s;
  };

  PhaseFunction f;
  f.evaluator = eval;
  f.description = "binary directional mean, m=" + std::to_string(m) + ", alpha=" + std::to_string(alpha);
  // Every |u_j| <= 1/2 - 1/(2m); if the clamp can never bind, the phase is linear.
  const double umax = 0.5 - 0.5 / md;
  if (alpha * max_l1 * umax <= 1.0) {
    Vec slopes = mean(rv);
    for (double& v : slopes) v *= md * alpha;
    f.separable = true;
    f.axis_term = [slopes](std::size_t j, double uj) { return slopes[j] * uj; };
    f.slopes = std::move(slopes);
  }
  const double cost = binary_oracle_cost(m, L2, eps, cfg.cost_constant);
  ledger.experiments += cost;
  ledger.binary_queries += cost;
  return f;
}

inline void require_quarter_box(const RandomVariable& rv, const char* who) {
  for (std::size_t k = 0; k < rv.size(); ++k)
    for (double x : rv.value(k))
      require(std::abs(x) <= 0.25, std::string(who) + ": outcome " + std::to_string(k) +
                                       " has a coordinate outside [-1/4, 1/4]");
}

/// θ_u = m<u, E X>, always separable.
inline PhaseFunction directional_phases_phase_model(const RandomVariable& rv, std::uint64_t m, double eps, double eta,
                                                    CostLedger& ledger, const OracleConfig& cfg = {}) {
  require_quarter_box(rv, "directional_phases_phase_model");
  require(eps > 0.0 && eps < 1.0 && eta > 0.0 && eta < 1.0,
          "directional_phases_phase_model: eps and eta must lie in (0,1)");
  const double md = static_cast<double>(m);
  require(md >= eps / (6.0 * std::sqrt(static_cast<double>(rv.dim()))),
          "directional_phases_phase_model: requires m >= eps/(6 sqrt(d))");
  Vec slopes = mean(rv);
  for (double& v : slopes) v *= md;
  PhaseFunction f = PhaseFunction::linear(std::move(slopes), "phase-model directional mean, m=" + std::to_string(m));
  const PhaseModelCost c = phase_model_cost(m, rv.dim(), eps, eta, cfg.cost_constant);
  ledger.experiments += c.experiments;
  ledger.phase_queries += c.phase_queries;
  return f;
}

// Seeded per-point phase deviations over an enumerated grid.
struct PerturbationTable {
  GridSpec spec;
  Vec deviation;                // indexed by flat grid index
  std::vector<std::uint8_t> bad;
  std::uint64_t bad_count = 0;
};

inline PerturbationTable perturbation_table(const NoiseModel& noise, const GridSpec& spec) {
  require(!noise.is_ideal(), "perturbation_table: noise model is ideal");
  check_full_capacity(spec, "perturb");
  const std::uint64_t n = spec.size();
  PerturbationTable t;
  t.spec = spec;
  t.deviation.assign(n, 0.0);
  t.bad.assign(n, 0);
  t.bad_count = static_cast<std::uint64_t>(std::floor(noise.eta / 2.0 * static_cast<double>(n)));

  const std::uint64_t salt = splitmix64(noise.seed ^ 0xBADC0FFEE0DDF00DULL);
  auto rank = [salt](std::uint64_t f) { return splitmix64(salt ^ splitmix64(f)); };
  std::vector<std::uint64_t> order(n);
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  if (t.bad_count > 0 && t.bad_count < n) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(t.bad_count), order.end(),
                     [&](std::uint64_t a, std::uint64_t b) { return rank(a) < rank(b); });
  }
  for (std::uint64_t i = 0; i < t.bad_count; ++i) t.bad[order[i]] = 1;

  const double good_max = 2.0 * std::asin(noise.eps / 2.0);
  for (std::uint64_t f = 0; f < n; ++f) {
    const double v = static_cast<double>(splitmix64(salt + 0x9E37ULL * (f + 1)) >> 11) * 0x1.0p-53;  // [0,1)
    t.deviation[f] = t.bad[f] ? kPi - 2.0 * kPi * v : good_max * (2.0 * v - 1.0);
  }
  return t;
}

inline PhaseFunction perturb(const PhaseFunction& phase, const NoiseModel& noise, const GridSpec& spec) {
  if (noise.is_ideal()) return phase;
  auto table = std::make_shared<const PerturbationTable>(perturbation_table(noise, spec));
  auto base = phase.evaluator;
  PhaseFunction f = PhaseFunction::general(
      [table, base](std::span<const double> u) {
        std::uint64_t flat = 0;
        for (double x : u) flat = flat * table->spec.m + axis_index(table->spec.m, x);
        return base(u) + table->deviation[flat];
      },
      phase.description + " + " + noise.describe());
  return f;
}

/// Draw Q~ with Q(p) <= Q~ <= Q(cp); with probability delta return an
/// arbitrary support value instead. Exact mode returns Q(p).
inline double quantile_oracle(const RandomVariable& rv, double p, double delta, double c, Rng& rng,
                              CostLedger& ledger, const OracleConfig& cfg = {}) {
  require(rv.dim() == 1, "quantile_oracle: random variable must be univariate");
  require(p > 0.0 && p < 1.0 + 1e-15, "quantile_oracle: p must lie in (0,1]");
  require(delta > 0.0 && delta < 1.0, "quantile_oracle: delta must lie in (0,1)");
  require(c > 0.0 && c <= 1.0, "quantile_oracle: c must lie in (0,1]");
  const double cost = cfg.cost_constant * clog2(1.0 / delta) / std::sqrt(p);
  ledger.experiments += cost;
  ledger.binary_queries += cost;
  ledger.quantile_calls += 1;

  const double lo = exact_quantile(rv, std::min(p, 1.0));
  if (cfg.exact_quantiles) return lo;

  std::vector<double> support;
  for (std::size_t k = 0; k < rv.size(); ++k)
    if (rv.prob(k) > 0.0) support.push_back(rv.value(k)[0]);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  const bool fail = rng.bernoulli(delta);
  if (fail) return support[rng.below(support.size())];
  const double hi = exact_quantile(rv, c * p);
  const auto first = std::lower_bound(support.begin(), support.end(), lo);
  const auto last = std::upper_bound(support.begin(), support.end(), hi);
  const auto count = static_cast<std::uint64_t>(last - first);
  return *(first + static_cast<std::ptrdiff_t>(rng.below(count)));
}

}  // namespace qmeanlab
