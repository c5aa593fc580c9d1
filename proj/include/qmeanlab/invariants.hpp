#pragma once

// The acceptance criteria as runnable checks, shared by the acceptance test
// binary and the `check` subcommand.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qmeanlab/battery.hpp"
#include "qmeanlab/core.hpp"
#include "qmeanlab/estimators_classical.hpp"
#include "qmeanlab/estimators_quantum.hpp"
#include "qmeanlab/gridqft.hpp"
#include "qmeanlab/hardness.hpp"
#include "qmeanlab/harness.hpp"
#include "qmeanlab/oracles.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  double trial_scale = 1.0;  // < 1 shrinks every trial count, for quick runs
  std::uint64_t seed = 20240611;
};

/// C' in the Algorithm 2 cost envelope C'·n·log2(n)·log2(d/δ)^3.
inline constexpr double kNearOptimalCostEnvelope = 1.0e6;

namespace acceptance {

inline int scaled(int base, const AcceptanceOptions& o) {
  return std::max(10, static_cast<int>(std::lround(base * o.trial_scale)));
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

inline double binomial_slack(double delta, int trials) { return delta + 3.0 * std::sqrt(delta / trials); }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------- 1

inline CriterionResult phase_estimation_concentration(const AcceptanceOptions& o) {
  CriterionResult r{1, "Phase-estimation concentration", false, "", 0.0};
  Rng rng(o.seed ^ 1);
  double worst = 1.0;
  int cases = 0;
  for (std::uint64_t m : {16u, 64u, 256u}) {
    for (int i = 0; i < 20; ++i) {
      const double mu = 2.0 * rng.uniform() - 1.0;
      const double alpha = 0.05 + 0.9 * rng.uniform();
      CostLedger ledger;
      const PhaseFunction phase =
          directional_phases_binary(RandomVariable::point_mass(Vec{mu}), 1.0, m, alpha, 1.0 / 25.0, ledger);
      const GridSpec spec(m, 1);
      const auto dist = measurement_distribution(inverse_qft(apply_phase_function(uniform_superposition(spec), phase)));
      const double target = alpha * mu / (2.0 * kPi);
      double mass = 0.0;
      for (std::uint64_t a = 0; a < m; ++a)
        if (std::abs(axis_point(m, a) - target) <= 4.0 / static_cast<double>(m)) mass += dist.marginals[0][a];
      worst = std::min(worst, mass);
      ++cases;
    }
  }
  r.pass = worst >= 5.0 / 6.0 - 1e-9;
  r.detail = std::to_string(cases) + " cases over m in {16,64,256}, min Pr[|v-alpha mu/2pi| <= 4/m] = " + fmt(worst);
  return r;
}

// ---------------------------------------------------------------- 2

inline CriterionResult truncation_tails(const AcceptanceOptions& o) {
  CriterionResult r{2, "Grid tail inequalities", false, "", 0.0};
  Rng rng(o.seed ^ 2);
  const std::vector<std::pair<std::uint64_t, std::size_t>> configs = {{256, 2}, {16, 4}, {4, 8}, {2, 16}};
  int violations = 0, checks = 0;
  double worst1 = -kInf, worst2 = -kInf;  // largest (fraction - bound)
  for (const auto& [m, d] : configs) {
    const GridSpec spec(m, d);
    const std::uint64_t N = spec.size();
    const Vec pts = axis_points(m);
    auto for_each_u = [&](auto&& body) {
      std::vector<std::uint64_t> idx(d, 0);
      Vec u(d, pts[0]);
      for (std::uint64_t f = 0; f < N; ++f) {
        body(u);
        for (std::size_t j = d; j-- > 0;) {
          if (++idx[j] < m) {
            u[j] = pts[idx[j]];
            break;
          }
          idx[j] = 0;
          u[j] = pts[0];
        }
      }
    };
    for (int t = 0; t < 50; ++t) {
      const double alpha = 0.2 + 1.8 * rng.uniform();
      Vec x(d);
      for (double& v : x) v = standard_normal(rng) * (rng.bernoulli(0.3) ? 0.0 : std::exp(3.0 * rng.uniform()));
      if (norm_l2(x) == 0.0) x[0] = 1.0;
      const double nx = norm_l2(x);
      std::uint64_t hits = 0;
      for_each_u([&](const Vec& u) { hits += alpha * std::abs(dot(u, x)) >= nx; });
      const double frac = static_cast<double>(hits) / static_cast<double>(N);
      const double bound = 2.0 * std::exp(-2.0 / (alpha * alpha));
      worst1 = std::max(worst1, frac - bound);
      violations += frac > bound;
      ++checks;
    }
    for (int t = 0; t < 50; ++t) {
      const double alpha = 0.05 + 1.9 * rng.uniform();
      const std::size_t K = 1 + rng.below(6);
      std::vector<Vec> vals(K, Vec(d));
      std::vector<double> prob(K);
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        for (double& v : vals[k]) v = standard_normal(rng);
        total += (prob[k] = 0.1 + rng.uniform());
      }
      for (double& p : prob) p /= total;
      const RandomVariable X(prob, vals);
      const double en = expected_norm(X);
      std::uint64_t hits = 0;
      for_each_u([&](const Vec& u) {
        double e = 0.0;
        for (std::size_t k = 0; k < K; ++k) e += X.prob(k) * std::abs(dot(u, X.value(k)));
        hits += alpha * e >= en;
      });
      const double frac = static_cast<double>(hits) / static_cast<double>(N);
      worst2 = std::max(worst2, frac - alpha / 2.0);
      violations += frac > alpha / 2.0;
      ++checks;
    }
  }
  r.pass = violations == 0;
  r.detail = std::to_string(checks) + " checks on grids of 2^16 points, " + std::to_string(violations) +
             " violations; max(frac - bound): vector " + fmt(worst1) + ", random variable " + fmt(worst2);
  return r;
}

// ---------------------------------------------------------------- 3

/// Largest n whose grid stays within `cap` points, found by bisection.
inline double largest_n_within(double L2, std::size_t d, double delta, std::uint64_t cap) {
  auto fits = [&](double n) {
    const BoundedParameters p = bounded_parameters(L2, n, d, delta);
    return p.early_exit || ipow(p.m, d, UINT64_MAX) <= cap;
  };
  double lo = 1.0, hi = 1e7;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

inline CriterionResult bounded_error_suite(const AcceptanceOptions& o) {
  CriterionResult r{3, "Algorithm 1 error-bound suite", false, "", 0.0};
  const double delta = 0.1;
  const int T = scaled(200, o);
  const double limit = binomial_slack(delta, T);
  const std::uint64_t cap = std::uint64_t{1} << 18;
  bool pass = true;
  std::string detail;
  double worst = 0.0;
  int points = 0, full_runs = 0, early = 0;
  const BatteryKind kinds[] = {BatteryKind::BallPairs, BatteryKind::Indicator, BatteryKind::HeavyLight};
  for (std::size_t d : {std::size_t{2}, std::size_t{3}}) {
    const double lg = log2_d_over_delta(d, delta);
    for (BatteryKind kind : kinds) {
      // Full-state runs at the largest n whose lattice fits, then product-form runs at larger n.
      for (double n_fixed : {0.0, 64.0, 256.0, 1024.0}) {
        int fails = 0;
        for (int t = 0; t < T; ++t) {
          const std::uint64_t seed = o.seed + 1000 * d + 100 * static_cast<std::uint64_t>(kind) + t;
          const RandomVariable rv = battery_instance(kind, d, seed);
          const double en = expected_norm(rv);
          BoundedOptions bo;
          double L2 = en, n = n_fixed;
          if (n_fixed == 0.0) {
            L2 = std::max(en, 0.5);
            n = largest_n_within(L2, d, delta, cap);
            bo.force_full_state = true;
            ++full_runs;
          }
          Rng rng(seed);
          const EstimateReport rep = bounded_estimator(rv, L2, n, delta, NoiseModel::ideal(), rng, bo);
          early += rep.branch == "early_exit";
          fails += !(rep.err_inf <= std::sqrt(L2) * lg / n);
        }
        const double rate = static_cast<double>(fails) / T;
        worst = std::max(worst, rate);
        ++points;
        if (rate > limit) {
          pass = false;
          detail += " [d=" + std::to_string(d) + " " + battery_name(kind) + " n=" +
                    (n_fixed == 0.0 ? std::string("max-full") : fmt(n_fixed)) + " fail rate " + fmt(rate) + "]";
        }
      }
    }
  }
  r.pass = pass;
  r.detail = std::to_string(points) + " points x " + std::to_string(T) + " trials (" + std::to_string(full_runs) +
             " full-state, " + std::to_string(early) + " early exits), worst fail rate " + fmt(worst) + " <= " +
             fmt(limit) + detail;
  return r;
}

// ---------------------------------------------------------------- 4

inline CriterionResult near_optimal_structure(const AcceptanceOptions& o) {
  CriterionResult r{4, "Algorithm 2 structural inequalities", false, "", 0.0};
  const double delta = 0.1;
  int runs = 0, violations = 0;
  double worst_tele = 0.0, worst_run = 0.0;
  std::string detail;
  const BatteryKind kinds[] = {BatteryKind::BallPairs, BatteryKind::Indicator, BatteryKind::HeavyLight};
  for (BatteryKind kind : kinds)
    for (std::size_t d : {std::size_t{2}, std::size_t{4}})
      for (double n : {64.0, 512.0}) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t seed = o.seed + 40000 + 10 * d + static_cast<std::uint64_t>(kind) + static_cast<std::uint64_t>(n);
        const RandomVariable rv = battery_instance(kind, d, seed, 3.0);
        NearOptimalOptions no;
        no.oracle.exact_quantiles = true;
        Rng rng(seed);
        const EstimateReport rep = near_optimal_estimator(rv, n, delta, NoiseModel::ideal(), rng, no);
        const NearOptimalTrace& tr = *rep.trace;
        const double c = tr.quantile_c;
        const double ey2 = tr.y_second_moment;
        const RandomVariable Y = shift(rv, tr.eta);
        const std::string tag = " [" + battery_name(kind) + " d=" + std::to_string(d) + " n=" + fmt(n) + "]";
        auto flag = [&](bool ok, const std::string& what) {
          if (!ok) {
            ++violations;
            detail += tag + " " + what;
          }
        };
        for (int j = 0; j <= tr.k; ++j)
          flag(tr.a[j] <= std::pow(c, -0.5) * std::pow(2.0, j / 2.0) * std::sqrt(ey2) + 1e-9,
               "quantile bound fails at j=" + std::to_string(j));
        for (const SliceRecord& s : tr.slices)
          if (!s.skipped)
            flag(s.expected_norm < std::ldexp(1.0, -(s.j - 1)) + 1e-9,
                 "slice moment bound fails at j=" + std::to_string(s.j));
        const double ak = tr.a.back();
        const double linf = norm_linf(tr.tail_mean), l2 = norm_l2(tr.tail_mean);
        const double cs = std::sqrt(ey2 * tail_probability(norm_rv(Y), ak, true));
        flag(linf <= l2 + 1e-9, "tail sup-norm exceeds its 2-norm");
        flag(l2 <= cs + 1e-9, "tail 2-norm exceeds the Cauchy-Schwarz level");
        flag(cs <= std::sqrt(ey2) / std::pow(2.0, tr.k / 2.0) + 1e-9, "tail mass exceeds 2^-k");
        Vec tele = tr.eta;
        for (const SliceRecord& s : tr.slices)
          for (std::size_t i = 0; i < d; ++i) tele[i] += s.a_hi * s.exact_mean[i];
        for (std::size_t i = 0; i < d; ++i) tele[i] += tr.tail_mean[i];
        const double tdev = max_abs_diff(tele, rep.truth);
        worst_tele = std::max(worst_tele, tdev);
        flag(tdev <= 1e-10, "telescoping residual " + fmt(tdev));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        worst_run = std::max(worst_run, secs);
        flag(secs < 60.0, "run took " + fmt(secs) + " s");
        ++runs;
      }
  r.pass = violations == 0;
  r.detail = std::to_string(runs) + " exact-quantile runs, " + std::to_string(violations) +
             " violations, max telescoping residual " + fmt(worst_tele) + ", slowest run " + fmt(worst_run) + " s" +
             detail;
  return r;
}

// ---------------------------------------------------------------- 5

struct SlopePair {
  SlopeFit quantum;
  SlopeFit classical;
  std::vector<double> ns, q_err, c_err;
};

inline SlopePair scaling_slopes(const AcceptanceOptions& o, int trials) {
  const double delta = 0.1;
  const std::size_t d = 2;
  SlopePair sp;
  for (int e = 6; e <= 12; ++e) {
    const double n = std::ldexp(1.0, e);
    std::vector<double> qe, ce;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t seed = o.seed + 50000 + static_cast<std::uint64_t>(e) * 1000 + t;
      const RandomVariable rv = battery_instance(BatteryKind::BallPairs, d, seed);
      Rng qr(seed);
      qe.push_back(bounded_estimator(rv, expected_norm(rv), n, delta, NoiseModel::ideal(), qr).err_inf);
      Rng cr(seed);
      const Vec est = subgaussian_estimate(rv, static_cast<std::size_t>(n), delta, cr).first;
      ce.push_back(norm_linf(sub(est, mean(rv))));
    }
    sp.ns.push_back(n);
    sp.q_err.push_back(median_of(qe));
    sp.c_err.push_back(median_of(ce));
  }
  sp.quantum = fit_slope(sp.ns, sp.q_err);
  sp.classical = fit_slope(sp.ns, sp.c_err);
  return sp;
}

inline CriterionResult scaling_separation(const AcceptanceOptions& o) {
  CriterionResult r{5, "Scaling separation", false, "", 0.0};
  const int T = scaled(200, o);
  const SlopePair sp = scaling_slopes(o, T);
  const bool q_ok = sp.quantum.slope <= -0.85 && sp.quantum.r2 >= 0.95;
  const bool c_ok = sp.classical.slope >= -0.65 && sp.classical.slope <= -0.35;
  r.pass = q_ok && c_ok;
  r.detail = "n = 2^6..2^12, " + std::to_string(T) + " trials/point: quantum slope " + fmt(sp.quantum.slope) +
             " (r2 " + fmt(sp.quantum.r2) + "), classical slope " + fmt(sp.classical.slope) + " (r2 " +
             fmt(sp.classical.r2) + ")";
  return r;
}

// ---------------------------------------------------------------- 6

struct PhaseGrid {
  std::size_t d;
  std::vector<double> ns;
  std::vector<double> nps;
};

inline std::vector<PhaseGrid> phase_model_grids() {
  return {{4, {2.0, 8.0, 64.0, 512.0}, {2.0, 16.0, 128.0, 4096.0, 65536.0}},
          {16, {4.0, 10.0, 14.0, 64.0, 512.0}, {8.0, 32.0, 128.0, 2048.0, 65536.0}}};
}

inline CriterionResult phase_model_suite(const AcceptanceOptions& o) {
  CriterionResult r{6, "Phase-model bound suite", false, "", 0.0};
  const double delta = 0.1;
  const int T = scaled(200, o);
  const BatteryKind kinds[] = {BatteryKind::BallPairs, BatteryKind::Indicator, BatteryKind::HeavyLight};
  int points = 0, bound_fail = 0, dispatch_fail = 0;
  double worst_ratio = 0.0;
  std::vector<std::string> branches_seen;
  std::string detail;
  for (const PhaseGrid& g : phase_model_grids()) {
    for (double n : g.ns)
      for (double np : g.nps) {
        const Regime regime = regime_classify(n, np, g.d, delta);
        std::vector<double> errs;
        double bound = 0.0;
        for (int t = 0; t < T; ++t) {
          const std::uint64_t seed = o.seed + 60000 + 7919 * points + t;
          const RandomVariable rv = battery_box_instance(kinds[t % 3], g.d, seed);
          Rng rng(seed);
          const EstimateReport rep = phase_model_dispatch(rv, n, np, delta, NoiseModel::ideal(), rng);
          if (!branch_matches_regime(rep.branch, regime, n, g.d)) ++dispatch_fail;
          if (std::find(branches_seen.begin(), branches_seen.end(), rep.branch) == branches_seen.end())
            branches_seen.push_back(rep.branch);
          bound = fail_bound(rep, rv).value;
          errs.push_back(rep.err_inf);
        }
        const double med = median_of(errs);
        worst_ratio = std::max(worst_ratio, med / bound);
        if (!(med <= bound)) {
          ++bound_fail;
          detail += " [d=" + std::to_string(g.d) + " n=" + fmt(n) + " n'=" + fmt(np) + " median " + fmt(med) +
                    " > " + fmt(bound) + "]";
        }
        ++points;
      }
  }
  const bool spans = branches_seen.size() == 3;
  r.pass = bound_fail == 0 && dispatch_fail == 0 && spans;
  std::string seen;
  for (const auto& b : branches_seen) seen += (seen.empty() ? "" : ",") + b;
  r.detail = std::to_string(points) + " (n,n') points x " + std::to_string(T) + " trials, branches {" + seen +
             "}, worst median/bound " + fmt(worst_ratio) + ", " + std::to_string(bound_fail) +
             " bound failures, " + std::to_string(dispatch_fail) + " dispatch mismatches" + detail;
  return r;
}

// ---------------------------------------------------------------- 7

inline CriterionResult hard_instance_moments(const AcceptanceOptions& o) {
  CriterionResult r{7, "Hard-instance moment identities", false, "", 0.0};
  Rng rng(o.seed ^ 7);
  double worst_trace = 0.0, worst_mean = 0.0;
  double def_trace_dev = 0.0, formula_trace_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 16, d = 64;
    const double sigma = 0.5 + rng.uniform();
    const auto b = balanced_bits(4 * n, rng);
    const RandomVariable rv = hard_rv_low_precision(n, d, sigma, b);
    const MomentSummary m = moments(rv);
    worst_trace = std::max(worst_trace, std::abs(m.cov_trace - sigma * sigma));
    worst_mean = std::max(worst_mean, max_abs_diff(m.mean, low_precision_designed_mean(n, d, sigma, b)));
  }
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = 8;
    const std::size_t n = i % 2 ? 16 : 10;  // M = 8 (even) and M = 5 (odd)
    const double sigma = 0.5 + rng.uniform();
    const SearchParityInstance inst = search_parity_instance(d, 4 * n / d, rng);
    const RandomVariable rv = hard_rv_high_precision(n, d, sigma, inst);
    const MomentSummary m = moments(rv);
    worst_trace = std::max(worst_trace, std::abs(m.cov_trace - sigma * sigma));
    worst_mean = std::max(worst_mean, max_abs_diff(m.mean, high_precision_designed_mean(n, d, sigma, inst)));
    def_trace_dev = std::max(
        def_trace_dev,
        std::abs(moments(hard_rv_high_precision(n, d, sigma, inst, 4, HighPrecisionNormalization::Definition)).cov_trace -
                 sigma * sigma));
    formula_trace_dev = std::max(
        formula_trace_dev,
        std::abs(moments(hard_rv_high_precision(n, d, sigma, inst, 4, HighPrecisionNormalization::TraceFormula))
                     .cov_trace -
                 sigma * sigma));
  }
  double worst_frac = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t dp = std::size_t{1} << (1 + i % 5);
    const std::size_t n = dp * (1 + rng.below(8));
    const auto b = random_bits(dp, rng);
    worst_mean = std::max(worst_mean, max_abs_diff(mean(fractional_phase_rv(dp, n, b)), fractional_phase_designed_mean(dp, n, b)));
  }
  for (std::size_t dp : {2u, 4u, 8u, 16u, 32u, 64u}) {
    Vec e1(dp, 0.0);
    e1[0] = 0.125;
    worst_frac = std::max(worst_frac, max_abs_diff(mean(fractional_phase_rv(dp, 4 * dp, std::vector<std::uint8_t>(dp, 0))), e1));
  }
  r.pass = worst_trace <= 1e-9 && worst_mean <= 1e-9 && worst_frac <= 1e-15;
  r.detail = "100 instances per family: max |Tr(Sigma) - sigma^2| " + fmt(worst_trace) + ", max mean deviation " +
             fmt(worst_mean) + ", b=0 deviation from e1/8 " + fmt(worst_frac) +
             "; high family with definition normalization deviates by up to " + fmt(def_trace_dev) +
             ", with the trace-formula normalization by up to " + fmt(formula_trace_dev);
  return r;
}

// ---------------------------------------------------------------- 8

inline CriterionResult classical_floor(const AcceptanceOptions& o) {
  CriterionResult r{8, "Classical floor probe", false, "", 0.0};
  const int T = scaled(100, o);
  bool pass = true;
  std::string detail;
  for (const auto& [n, d] : std::vector<std::pair<std::size_t, std::size_t>>{{16, 64}, {32, 128}}) {
    std::vector<double> errs;
    for (int t = 0; t < T; ++t) {
      const std::uint64_t seed = o.seed + 80000 + 1000 * n + t;
      Rng rng(seed);
      const auto b = balanced_bits(4 * n, rng);
      const RandomVariable rv = hard_rv_low_precision(n, d, 1.0, b);
      const Vec est = subgaussian_estimate(rv, n, 0.1, rng).first;
      errs.push_back(norm_l2(sub(est, mean(rv))));
    }
    const double med = median_of(errs), floor = 0.1 / std::sqrt(static_cast<double>(n));
    pass = pass && med >= floor;
    detail += " (n=" + std::to_string(n) + ",d=" + std::to_string(d) + "): median l2 " + fmt(med) + " vs floor " + fmt(floor);
  }
  r.pass = pass;
  r.detail = std::to_string(T) + " trials per point;" + detail;
  return r;
}

// ---------------------------------------------------------------- 9

inline double near_optimal_envelope(double n, std::size_t d, double delta) {
  const double lg = log2_d_over_delta(d, delta);
  return kNearOptimalCostEnvelope * n * std::log2(n) * lg * lg * lg;
}

inline CriterionResult determinism_and_cost(const AcceptanceOptions& o) {
  CriterionResult r{9, "Determinism and cost", false, "", 0.0};
  bool identical = true;
  const double delta = 0.1;
  const RandomVariable rv = battery_instance(BatteryKind::HeavyLight, 4, o.seed + 9);
  const RandomVariable small = battery_instance(BatteryKind::BallPairs, 2, o.seed + 9);
  const RandomVariable box = battery_box_instance(BatteryKind::BallPairs, 4, o.seed + 9);
  struct Case {
    RunSettings s;
    const RandomVariable* rv;
  };
  std::vector<Case> cases;
  for (const char* e : {"bounded", "near_optimal", "euclidean", "classical"}) {
    RunSettings s;
    s.estimator = e;
    s.n = 128;
    s.delta = delta;
    cases.push_back({s, &rv});
  }
  for (const char* e : {"qphase", "qlowprec", "phase_dispatch"}) {
    RunSettings s;
    s.estimator = e;
    s.n = 64;
    s.nprime = 4096;
    s.delta = delta;
    cases.push_back({s, &box});
  }
  {
    RunSettings s;
    s.estimator = "bounded";
    s.n = 8;
    s.delta = delta;
    s.noise = NoiseModel::perturbed(0.05, 0.1, 3);
    s.force_full_state = true;
    cases.push_back({s, &small});
  }
  for (const Case& c : cases) {
    Rng a(o.seed + 99), b(o.seed + 99);
    const std::string ja = report_to_json(run_estimator(*c.rv, c.s, a)).dump();
    const std::string jb = report_to_json(run_estimator(*c.rv, c.s, b)).dump();
    identical = identical && ja == jb;
  }
  ExperimentConfig cfg;
  cfg.source.d = 3;
  cfg.trials = 5;
  cfg.seed = o.seed;
  cfg.estimator = "near_optimal";
  const bool sweep_same = run_trials(cfg, 200, 0).row == run_trials(cfg, 200, 0).row;

  double worst = 0.0;
  bool within = true;
  for (int e = 4; e <= 12; e += 2) {
    const double n = std::ldexp(1.0, e);
    for (BatteryKind kind : {BatteryKind::BallPairs, BatteryKind::HeavyLight}) {
      const RandomVariable x = battery_instance(kind, 4, o.seed + 900 + e);
      Rng rng(o.seed + e);
      const EstimateReport rep = near_optimal_estimator(x, n, delta, NoiseModel::ideal(), rng);
      const double ratio = rep.ledger.binary_queries / near_optimal_envelope(n, 4, delta);
      worst = std::max(worst, ratio);
      within = within && ratio <= 1.0;
    }
  }
  r.pass = identical && sweep_same && within;
  r.detail = std::string("reports ") + (identical ? "bit-identical" : "DIFFER") + " across " +
             std::to_string(cases.size()) + " estimator configurations, sweep rows " +
             (sweep_same ? "identical" : "DIFFER") + "; Algorithm 2 binary_queries / (C' n log2 n log2(d/delta)^3) <= " +
             fmt(worst) + " with C' = " + fmt(kNearOptimalCostEnvelope);
  return r;
}

// ---------------------------------------------------------------- 10

inline CriterionResult numerics(const AcceptanceOptions& o) {
  CriterionResult r{10, "Numerics", false, "", 0.0};
  Rng rng(o.seed ^ 10);
  double unitarity = 0.0, agreement = 0.0, roundtrip = 0.0, drift = 0.0;
  for (std::uint64_t m = 1; m <= 64; m *= 2) {
    const auto U = dense_axis_matrix(m, +1);
    for (std::uint64_t i = 0; i < m; ++i)
      for (std::uint64_t k = 0; k < m; ++k) {
        Complex s = 0.0;
        for (std::uint64_t j = 0; j < m; ++j) s += U[i * m + j] * std::conj(U[k * m + j]);
        unitarity = std::max(unitarity, std::abs(s - Complex(i == k ? 1.0 : 0.0)));
      }
  }
  for (const auto& [m, d] : std::vector<std::pair<std::uint64_t, std::size_t>>{{64, 1}, {16, 2}, {8, 3}, {4, 5}}) {
    const GridSpec spec(m, d);
    std::vector<Complex> amps(spec.size());
    double nn = 0.0;
    for (auto& a : amps) {
      a = Complex(standard_normal(rng), standard_normal(rng));
      nn += std::norm(a);
    }
    for (auto& a : amps) a /= std::sqrt(nn);
    const GridState st = GridState::full(spec, amps);
    for (int dir : {+1, -1}) {
      const auto dense = dense_qft(st, dir);
      const GridState fast = dir > 0 ? qft(st) : inverse_qft(st);
      for (std::size_t i = 0; i < dense.size(); ++i)
        agreement = std::max(agreement, std::abs(dense[i] - fast.amplitudes()[i]));
    }
    const GridState back = inverse_qft(qft(st));
    for (std::size_t i = 0; i < amps.size(); ++i) roundtrip = std::max(roundtrip, std::abs(back.amplitudes()[i] - amps[i]));
  }
  // One Algorithm-1 repetition in full-state form, norm tracked after every stage.
  const RandomVariable rv = battery_instance(BatteryKind::BallPairs, 2, o.seed + 10);
  const double L2 = expected_norm(rv);
  const BoundedParameters bp = bounded_parameters(L2, 20.0, 2, 0.1);
  const GridSpec spec(bp.m, 2);
  CostLedger ledger;
  const PhaseFunction phase = directional_phases_binary(rv, L2, bp.m, bp.alpha, 1.0 / 25.0, ledger);
  GridState s = uniform_superposition(spec).to_full();
  drift = std::max(drift, std::abs(s.norm() - 1.0));
  s = apply_phase_function(s, phase);
  drift = std::max(drift, std::abs(s.norm() - 1.0));
  s = inverse_qft(s);
  drift = std::max(drift, std::abs(s.norm() - 1.0));
  double total = 0.0;
  for (double p : measurement_distribution(s).joint) total += p;
  drift = std::max(drift, std::abs(total - 1.0));
  r.pass = unitarity <= 1e-10 && agreement <= 1e-10 && roundtrip <= 1e-10 && drift <= 1e-9;
  r.detail = "unitarity " + fmt(unitarity) + ", FFT vs dense " + fmt(agreement) + ", round trip " + fmt(roundtrip) +
             ", norm drift over a repetition at m=" + std::to_string(bp.m) + " " + fmt(drift);
  return r;
}

}  // namespace acceptance

using CriterionFn = std::function<CriterionResult(const AcceptanceOptions&)>;

struct Criterion {
  int id;
  std::string title;
  CriterionFn fn;
};

inline std::vector<Criterion> acceptance_criteria() {
  using namespace acceptance;
  return {{1, "Phase-estimation concentration", phase_estimation_concentration},
          {2, "Grid tail inequalities", truncation_tails},
          {3, "Algorithm 1 error-bound suite", bounded_error_suite},
          {4, "Algorithm 2 structural inequalities", near_optimal_structure},
          {5, "Scaling separation", scaling_separation},
          {6, "Phase-model bound suite", phase_model_suite},
          {7, "Hard-instance moment identities", hard_instance_moments},
          {8, "Classical floor probe", classical_floor},
          {9, "Determinism and cost", determinism_and_cost},
          {10, "Numerics", numerics}};
}

inline CriterionResult run_criterion(const Criterion& c, const AcceptanceOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r{c.id, c.title, false, "", 0.0};
  try {
    r = c.fn(o);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string format_result(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] criterion %2d %s (%.1fs): ", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
                r.seconds);
  return head + r.detail;
}

}  // namespace qmeanlab
