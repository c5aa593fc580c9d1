#pragma once

// Quantum mean estimators run against the semantic oracles: the bounded and
// near-optimal binary-oracle estimators, the Euclidean dispatcher, and the
// high/low-precision phase-oracle estimators with their regime dispatch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmeanlab/core.hpp"
#include "qmeanlab/estimators_classical.hpp"
#include "qmeanlab/gridqft.hpp"
#include "qmeanlab/oracles.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

/// Per-axis length above which linear phases are always sampled in closed form
/// instead of through the FFT.
inline constexpr std::uint64_t kClosedFormAxisThreshold = std::uint64_t{1} << 20;
/// Below this many draws per axis point the closed form is used as well.
inline constexpr std::uint64_t kClosedFormDrawRatio = 64;

struct EstimateParams {
  double n = 0.0;
  double nprime = 0.0;
  double delta = 0.0;
  double L2 = 0.0;
  NoiseModel noise;
  std::uint64_t seed = 0;
  std::uint64_t m = 0;
  double alpha = 0.0;
  std::size_t repetitions = 0;
  double quantile_c = 0.0;
};

struct SliceRecord {
  int j = 0;
  double a_lo = 0.0;
  double a_hi = 0.0;
  double L2 = 0.0;
  bool skipped = false;
  double expected_norm = 0.0;  // E||Y_j||_2 of the normalized slice
  Vec exact_mean;              // mean(Y_j)
  Vec estimate;                // μ~_j
  std::uint64_t m = 0;
};

struct NearOptimalTrace {
  int k = 0;
  double nprime = 0.0;
  double quantile_c = 0.0;
  Vec eta;
  std::vector<double> a;  // a_0..a_k
  double y_second_moment = 0.0;  // E||Y||_2^2
  Vec tail_mean;                 // mean(clamp(Y, a_k, ∞))
  std::vector<SliceRecord> slices;
};

struct EstimateReport {
  Vec estimate;
  Vec truth;
  double err_inf = 0.0;
  double err_l2 = 0.0;
  CostLedger ledger;
  std::string estimator_id;
  std::string branch;
  EstimateParams params;
  std::vector<std::string> warnings;
  std::optional<NearOptimalTrace> trace;
};

inline void finalize_errors(EstimateReport& r) {
  const Vec diff = sub(r.estimate, r.truth);
  r.err_inf = norm_linf(diff);
  r.err_l2 = norm_l2(diff);
}

inline double log2_d_over_delta(std::size_t d, double delta) { return std::log2(static_cast<double>(d) / delta); }

inline std::size_t repetitions_for(double factor, std::size_t d, double delta) {
  return static_cast<std::size_t>(std::ceil(factor * log2_d_over_delta(d, delta)));
}

namespace detail {

// Grid outcomes of `reps` phase-estimation rounds. The oracle phase is
// deterministic, so the pre-measurement state is prepared once and measured
// once per round with that round's own stream.
inline std::vector<Vec> phase_estimation_outcomes(const GridSpec& spec, const PhaseFunction& phase, std::size_t reps,
                                                  std::uint64_t stream_seed, bool force_full) {
  std::vector<Vec> out;
  out.reserve(reps);
  const Rng streams(stream_seed);
  if (phase.is_linear() && !force_full &&
      (spec.m > kClosedFormAxisThreshold || reps * kClosedFormDrawRatio < spec.m)) {
    std::vector<LinearPhaseAxis> axes;
    for (std::size_t j = 0; j < spec.d; ++j) axes.emplace_back(spec.m, phase.slopes[j]);
    for (std::size_t i = 0; i < reps; ++i) {
      Rng rng = streams.substream(i);
      Vec v(spec.d);
      for (std::size_t j = 0; j < spec.d; ++j) v[j] = axis_point(spec.m, axes[j].sample(rng));
      out.push_back(std::move(v));
    }
    return out;
  }
  GridState state = uniform_superposition(spec);
  if (force_full || !phase.separable) state = state.to_full();
  state = inverse_qft(apply_phase_function(state, phase));
  const GridSampler sampler(measurement_distribution(state));
  for (std::size_t i = 0; i < reps; ++i) {
    Rng rng = streams.substream(i);
    out.push_back(sampler.sample_point(rng));
  }
  return out;
}

inline void charge_times(CostLedger& ledger, const CostLedger& once, std::size_t times) {
  for (std::size_t i = 0; i < times; ++i) ledger += once;
}

}  // namespace detail

struct BoundedOptions {
  double oracle_eps = 1.0 / 25.0;
  bool force_full_state = false;
  OracleConfig oracle;
};

struct BoundedParameters {
  bool early_exit = false;
  double alpha = 0.0;
  std::uint64_t m = 0;
  std::size_t repetitions = 0;
};

inline BoundedParameters bounded_parameters(double L2, double n, std::size_t d, double delta) {
  BoundedParameters p;
  const double lg = log2_d_over_delta(d, delta);
  if (n <= lg / std::sqrt(L2)) {
    p.early_exit = true;
    return p;
  }
  p.alpha = 1.0 / std::sqrt(std::log2(400.0 * kPi * n * std::sqrt(static_cast<double>(d))));
  p.m = pow2_ceil(8.0 * kPi / p.alpha * n / (std::sqrt(L2) * lg));
  p.repetitions = repetitions_for(18.0, d, delta);
  return p;
}

/// Estimator for ||X||_2 <= 1 and E||X||_2 <= L2.
inline EstimateReport bounded_estimator(const RandomVariable& rv, double L2, double n, double delta,
                                        const NoiseModel& noise, Rng& rng, const BoundedOptions& opt = {}) {
  require(L2 > 0.0 && L2 <= 1.0, "bounded_estimator: L2 must lie in (0,1]");
  require(n >= 1.0, "bounded_estimator: n must be at least 1");
  require(delta > 0.0 && delta < 1.0, "bounded_estimator: delta must lie in (0,1)");
  for (std::size_t k = 0; k < rv.size(); ++k)
    require(norm_l2(rv.value(k)) <= 1.0 + kMomentTolerance,
            "bounded_estimator: outcome " + std::to_string(k) + " lies outside the unit ball");
  const double en = expected_norm(rv);
  require(en <= L2 + kMomentTolerance, "bounded_estimator: L2 = " + std::to_string(L2) +
                                           " is below the true E||X||_2 = " + std::to_string(en));

  const std::size_t d = rv.dim();
  EstimateReport rep;
  rep.estimator_id = "bounded";
  rep.truth = mean(rv);
  rep.params.n = n;
  rep.params.delta = delta;
  rep.params.L2 = L2;
  rep.params.noise = noise;
  rep.params.seed = rng.seed();

  const BoundedParameters bp = bounded_parameters(L2, n, d, delta);
  if (bp.early_exit) {
    rep.branch = "early_exit";
    rep.estimate.assign(d, 0.0);
    finalize_errors(rep);
    return rep;
  }
  rep.branch = "phase_estimation";
  rep.params.alpha = bp.alpha;
  rep.params.m = bp.m;
  rep.params.repetitions = bp.repetitions;

  const GridSpec spec(bp.m, d);
  CostLedger once;
  PhaseFunction phase = directional_phases_binary(rv, L2, bp.m, bp.alpha, opt.oracle_eps, once, opt.oracle);
  phase = perturb(phase, noise, spec);
  const std::uint64_t stream_seed = rng.next_u64();
  const auto outcomes =
      detail::phase_estimation_outcomes(spec, phase, bp.repetitions, stream_seed, opt.force_full_state);
  detail::charge_times(rep.ledger, once, bp.repetitions);

  std::vector<Vec> estimates;
  estimates.reserve(outcomes.size());
  for (const Vec& v : outcomes) {
    Vec e(d);
    for (std::size_t j = 0; j < d; ++j) e[j] = 2.0 * kPi / bp.alpha * v[j];
    estimates.push_back(std::move(e));
  }
  rep.estimate = coordinate_median(estimates);
  finalize_errors(rep);
  return rep;
}

struct NearOptimalParameters {
  int k = 0;
  double nprime = 0.0;
  double slice_delta = 0.0;
};

inline NearOptimalParameters near_optimal_parameters(double n, std::size_t d, double delta, double c) {
  const double lg = log2_d_over_delta(d, delta);
  NearOptimalParameters p;
  p.k = static_cast<int>(std::ceil(2.0 * std::log2(2.0 * std::sqrt(2.0) * n / lg)));
  p.k = std::max(p.k, 1);
  const double kd = static_cast<double>(p.k);
  p.nprime = n * (kd + 1.0) * 4.0 * std::log2(5.0 * kd * static_cast<double>(d) / delta) / (std::sqrt(c) * lg);
  p.slice_delta = delta / (5.0 * kd);
  return p;
}

/// Classical samples used for the centering step.
inline std::size_t centering_samples(double delta) {
  return static_cast<std::size_t>(64.0 * std::ceil(std::log2(2.0 / delta)));
}

struct NearOptimalOptions {
  OracleConfig oracle;
  double oracle_eps = 1.0 / 25.0;
};

inline EstimateReport near_optimal_estimator(const RandomVariable& rv, double n, double delta, const NoiseModel& noise,
                                             Rng& rng, const NearOptimalOptions& opt = {}) {
  const std::size_t d = rv.dim();
  require(delta > 0.0 && delta < 1.0, "near_optimal_estimator: delta must lie in (0,1)");
  const double lg = log2_d_over_delta(d, delta);
  require(n >= lg, "near_optimal_estimator: n = " + std::to_string(n) + " is below log2(d/delta) = " + std::to_string(lg));

  const double c = opt.oracle.exact_quantiles ? 1.0 : opt.oracle.quantile_c;
  const NearOptimalParameters np = near_optimal_parameters(n, d, delta, c);

  EstimateReport rep;
  rep.estimator_id = "near_optimal";
  rep.branch = "quantum";
  rep.truth = mean(rv);
  rep.params.n = n;
  rep.params.nprime = np.nprime;
  rep.params.delta = delta;
  rep.params.noise = noise;
  rep.params.seed = rng.seed();
  rep.params.quantile_c = c;

  const Rng streams(rng.next_u64());
  NearOptimalTrace tr;
  tr.k = np.k;
  tr.nprime = np.nprime;
  tr.quantile_c = c;

  Rng eta_rng = streams.substream(0);
  tr.eta = subgaussian_estimate(rv, centering_samples(delta), delta / 2.0, eta_rng, &rep.ledger).first;
  const RandomVariable Y = shift(rv, tr.eta);
  const RandomVariable normY = norm_rv(Y);
  tr.y_second_moment = expected_norm_sq(Y);

  Vec est = tr.eta;
  BoundedOptions bopt;
  bopt.oracle = opt.oracle;
  bopt.oracle_eps = opt.oracle_eps;
  double a_prev = 0.0;
  for (int j = 0; j <= np.k; ++j) {
    Rng qrng = streams.substream(1000 + static_cast<std::uint64_t>(j));
    double a = quantile_oracle(normY, std::ldexp(1.0, -j), np.slice_delta, opt.oracle.quantile_c, qrng, rep.ledger,
                               opt.oracle);
    if (a < a_prev) {
      rep.warnings.push_back("slice " + std::to_string(j) + ": quantile " + format_g17(a) +
                             " below previous radius, clamped to " + format_g17(a_prev));
      a = a_prev;
    }
    tr.a.push_back(a);

    SliceRecord s;
    s.j = j;
    s.a_lo = a_prev;
    s.a_hi = a;
    s.L2 = std::min(std::ldexp(1.0, -(j - 1)), 1.0);
    if (a == a_prev) {
      s.skipped = true;
      s.exact_mean.assign(d, 0.0);
      s.estimate.assign(d, 0.0);
    } else {
      const RandomVariable Yj = truncate_normalized(Y, a_prev, a);
      s.expected_norm = expected_norm(Yj);
      s.exact_mean = mean(Yj);
      if (s.expected_norm > s.L2 + kMomentTolerance) {
        rep.warnings.push_back("slice " + std::to_string(j) + ": E||Y_j|| = " + format_g17(s.expected_norm) +
                               " exceeds L2 = " + format_g17(s.L2) + ", falling back to L2 = 1");
        s.L2 = 1.0;
      }
      Rng brng = streams.substream(2000 + static_cast<std::uint64_t>(j));
      EstimateReport sub_rep = bounded_estimator(Yj, s.L2, np.nprime, np.slice_delta, noise, brng, bopt);
      rep.ledger += sub_rep.ledger;
      s.estimate = sub_rep.estimate;
      s.m = sub_rep.params.m;
      for (std::size_t i = 0; i < d; ++i) est[i] += a * s.estimate[i];
    }
    tr.slices.push_back(std::move(s));
    a_prev = a;
  }
  tr.tail_mean = mean(clamp_rv(Y, tr.a.back(), kInf));
  rep.estimate = std::move(est);
  rep.trace = std::move(tr);
  finalize_errors(rep);
  return rep;
}

/// Classical baseline when n <= d, near-optimal estimator otherwise.
inline EstimateReport euclidean_estimator(const RandomVariable& rv, double n, double delta, const NoiseModel& noise,
                                          Rng& rng, const NearOptimalOptions& opt = {}) {
  const std::size_t d = rv.dim();
  const double lg = log2_d_over_delta(d, delta);
  require(n >= lg, "euclidean_estimator: n = " + std::to_string(n) + " is below log2(d/delta) = " + std::to_string(lg));
  if (n > static_cast<double>(d)) {
    EstimateReport rep = near_optimal_estimator(rv, n, delta, noise, rng, opt);
    rep.estimator_id = "euclidean";
    rep.branch = "quantum";
    return rep;
  }
  EstimateReport rep;
  rep.estimator_id = "euclidean";
  rep.branch = "classical";
  rep.truth = mean(rv);
  rep.params.n = n;
  rep.params.delta = delta;
  rep.params.noise = noise;
  rep.params.seed = rng.seed();
  const auto count = static_cast<std::size_t>(std::max(std::floor(n), std::ceil(std::log2(1.0 / delta))));
  rep.estimate = subgaussian_estimate(rv, count, delta, rng, &rep.ledger).first;
  finalize_errors(rep);
  return rep;
}

inline constexpr double kPhaseModelEta = 1.0 / 288.0;
inline const double kPhaseModelEps = 1.0 / (12.0 * std::sqrt(2.0));

inline std::uint64_t qphase_grid_size(double k, std::size_t d, double delta) {
  return pow2_ceil(8.0 * kPi * k / (std::sqrt(static_cast<double>(d)) * log2_d_over_delta(d, delta)));
}

struct PhaseModelOptions {
  OracleConfig oracle;
};

/// High-precision phase-oracle estimator for values in [-1/4, 1/4]^d.
inline EstimateReport qphase_estimator(const RandomVariable& rv, double n, double nprime, double delta,
                                       const NoiseModel& noise, Rng& rng, const PhaseModelOptions& opt = {}) {
  require_quarter_box(rv, "qphase_estimator");
  const std::size_t d = rv.dim();
  const double lg = log2_d_over_delta(d, delta);
  const double sd = std::sqrt(static_cast<double>(d));
  require(delta > 0.0 && delta < 1.0, "qphase_estimator: delta must lie in (0,1)");
  require(n >= lg, "qphase_estimator: n is below log2(d/delta)");
  require(nprime >= sd * lg, "qphase_estimator: n' is below sqrt(d) log2(d/delta)");

  EstimateReport rep;
  rep.estimator_id = "qphase";
  rep.branch = "high_precision";
  rep.truth = mean(rv);
  rep.params.n = n;
  rep.params.nprime = nprime;
  rep.params.delta = delta;
  rep.params.noise = noise;
  rep.params.seed = rng.seed();

  const double k = std::floor(std::min(n, nprime / sd));
  const std::uint64_t m = qphase_grid_size(k, d, delta);
  const std::size_t reps = repetitions_for(18.0, d, delta);
  rep.params.m = m;
  rep.params.repetitions = reps;

  const GridSpec spec(m, d);
  CostLedger once;
  PhaseFunction phase = directional_phases_phase_model(rv, m, kPhaseModelEps, kPhaseModelEta, once, opt.oracle);
  phase = perturb(phase, noise, spec);
  const auto outcomes = detail::phase_estimation_outcomes(spec, phase, reps, rng.next_u64(), false);
  detail::charge_times(rep.ledger, once, reps);

  std::vector<Vec> estimates;
  for (const Vec& v : outcomes) {
    Vec e(d);
    for (std::size_t j = 0; j < d; ++j) e[j] = 2.0 * kPi * v[j];
    estimates.push_back(std::move(e));
  }
  rep.estimate = coordinate_median(estimates);
  finalize_errors(rep);
  return rep;
}

/// Empirical distribution of k' draws, one outcome per distinct draw.
inline RandomVariable empirical_distribution(const RandomVariable& rv, std::size_t count, Rng& rng) {
  const OutcomeSampler s(rv);
  std::vector<std::size_t> hits(rv.size(), 0);
  for (std::size_t i = 0; i < count; ++i) ++hits[s.draw(rng)];
  std::vector<std::string> labels;
  std::vector<double> prob;
  std::vector<Vec> rows;
  for (std::size_t k = 0; k < rv.size(); ++k) {
    if (hits[k] == 0) continue;
    labels.push_back(rv.labels()[k]);
    prob.push_back(static_cast<double>(hits[k]) / static_cast<double>(count));
    rows.emplace_back(rv.value(k).begin(), rv.value(k).end());
  }
  double total = 0.0;
  for (double p : prob) total += p;
  for (double& p : prob) p /= total;
  return RandomVariable(std::move(labels), std::move(prob), rows);
}

/// Low-precision phase-oracle estimator for values in [-1/4, 1/4]^d.
inline EstimateReport qlowprec_estimator(const RandomVariable& rv, double n, double nprime, double delta,
                                         const NoiseModel& noise, Rng& rng, const PhaseModelOptions& opt = {}) {
  require_quarter_box(rv, "qlowprec_estimator");
  const std::size_t d = rv.dim();
  const double lg = log2_d_over_delta(d, delta);
  const double sd = std::sqrt(static_cast<double>(d));
  require(delta > 0.0 && delta < 1.0, "qlowprec_estimator: delta must lie in (0,1)");
  require(n >= lg, "qlowprec_estimator: n is below log2(d/delta)");
  require(nprime >= sd * lg, "qlowprec_estimator: n' is below sqrt(d) log2(d/delta)");

  EstimateReport rep;
  rep.estimator_id = "qlowprec";
  rep.branch = "low_precision";
  rep.truth = mean(rv);
  rep.params.n = n;
  rep.params.nprime = nprime;
  rep.params.delta = delta;
  rep.params.noise = noise;
  rep.params.seed = rng.seed();

  const auto kprime = static_cast<std::size_t>(std::floor(2.0 * n / lg));
  const std::size_t reps = repetitions_for(32.0, d, delta);
  const double k_inner = 2.0 * nprime / sd;
  const std::uint64_t m = qphase_grid_size(k_inner, d, delta);
  rep.params.m = m;
  rep.params.repetitions = reps;
  const GridSpec spec(m, d);

  const Rng streams(rng.next_u64());
  std::vector<Vec> estimates;
  estimates.reserve(reps);
  for (std::size_t l = 0; l < reps; ++l) {
    Rng srng = streams.substream(2 * l);
    const RandomVariable pbar = empirical_distribution(rv, kprime, srng);
    rep.ledger.experiments += static_cast<double>(kprime);
    CostLedger scratch;
    PhaseFunction phase = directional_phases_phase_model(pbar, m, kPhaseModelEps, kPhaseModelEta, scratch, opt.oracle);
    rep.ledger.phase_queries += scratch.phase_queries;
    phase = perturb(phase, noise, spec);
    const Vec v = detail::phase_estimation_outcomes(spec, phase, 1, streams.substream(2 * l + 1).seed(), false).front();
    Vec e(d);
    for (std::size_t j = 0; j < d; ++j) e[j] = 2.0 * kPi * v[j];
    estimates.push_back(std::move(e));
  }
  rep.estimate = coordinate_median(estimates);
  finalize_errors(rep);
  return rep;
}

/// Three-way dispatch of the phase-oracle model.
inline EstimateReport phase_model_dispatch(const RandomVariable& rv, double n, double nprime, double delta,
                                           const NoiseModel& noise, Rng& rng, const PhaseModelOptions& opt = {}) {
  require_quarter_box(rv, "phase_model_dispatch");
  const std::size_t d = rv.dim();
  const double dd = static_cast<double>(d);
  const double lg = log2_d_over_delta(d, delta);
  EstimateReport rep;
  if (nprime < dd || n < lg) {
    rep.estimator_id = "phase_dispatch";
    rep.branch = "trivial";
    rep.truth = mean(rv);
    rep.estimate.assign(d, 0.0);
    rep.params.n = n;
    rep.params.nprime = nprime;
    rep.params.delta = delta;
    rep.params.noise = noise;
    rep.params.seed = rng.seed();
    finalize_errors(rep);
    return rep;
  }
  if (nprime < std::sqrt(dd) * lg) {
    // The stated bound d/n'·log2(d/δ) exceeds 1 here, so zero already meets it.
    rep.branch = n < dd ? "low_precision" : "high_precision";
    rep.warnings.push_back("n' below sqrt(d) log2(d/delta): returning the zero estimate");
    rep.truth = mean(rv);
    rep.estimate.assign(d, 0.0);
    rep.params.n = n;
    rep.params.nprime = nprime;
    rep.params.delta = delta;
    rep.params.noise = noise;
    rep.params.seed = rng.seed();
  } else {
    rep = n < dd ? qlowprec_estimator(rv, n, nprime, delta, noise, rng, opt)
                 : qphase_estimator(rv, n, nprime, delta, noise, rng, opt);
  }
  finalize_errors(rep);
  rep.estimator_id = "phase_dispatch";
  return rep;
}

}  // namespace qmeanlab
