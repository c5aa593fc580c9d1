#pragma once

// Experiment orchestration: estimator dispatch by name, seeded trial batteries,
// sweeps, row export/import, slope fitting and regime classification.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qmeanlab/battery.hpp"
#include "qmeanlab/core.hpp"
#include "qmeanlab/distribution_io.hpp"
#include "qmeanlab/estimators_classical.hpp"
#include "qmeanlab/estimators_quantum.hpp"
#include "qmeanlab/hardness.hpp"
#include "qmeanlab/oracles.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"

namespace qmeanlab {

using nlohmann::json;

// ---------------------------------------------------------------- regimes

enum class Regime { Trivial, PhaseLimited, ExperimentLimited, SampleLimited };

inline std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Trivial: return "TRIVIAL";
    case Regime::PhaseLimited: return "PHASE_LIMITED";
    case Regime::ExperimentLimited: return "EXPERIMENT_LIMITED";
    case Regime::SampleLimited: return "SAMPLE_LIMITED";
  }
  return "?";
}

/// Ties between the two terms of a max go to PHASE_LIMITED.
inline Regime regime_classify(double n, double nprime, std::size_t d, double delta) {
  const double dd = static_cast<double>(d);
  if (nprime < dd || n < log2_d_over_delta(d, delta)) return Regime::Trivial;
  const double phase_term = dd / nprime;
  if (n >= dd) return phase_term >= std::sqrt(dd) / n ? Regime::PhaseLimited : Regime::ExperimentLimited;
  return phase_term >= 1.0 / std::sqrt(n) ? Regime::PhaseLimited : Regime::SampleLimited;
}

/// Whether a phase-model dispatch branch is the one the regime map predicts.
inline bool branch_matches_regime(const std::string& branch, Regime r, double n, std::size_t d) {
  if (r == Regime::Trivial) return branch == "trivial";
  return branch == (n < static_cast<double>(d) ? "low_precision" : "high_precision");
}

// ---------------------------------------------------------------- noise

inline NoiseModel parse_noise(const std::string& text, std::uint64_t seed = 0) {
  if (text == "ideal") return NoiseModel::ideal();
  const std::string prefix = "perturbed:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string rest = text.substr(prefix.size());
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw InvalidArgument("noise \"" + text + "\": expected perturbed:EPS,ETA");
    try {
      const double eps = std::stod(rest.substr(0, comma));
      const double eta = std::stod(rest.substr(comma + 1));
      return NoiseModel::perturbed(eps, eta, seed);
    } catch (const std::logic_error&) {
      throw InvalidArgument("noise \"" + text + "\": EPS and ETA must be numbers");
    }
  }
  throw InvalidArgument("noise \"" + text + "\": expected ideal or perturbed:EPS,ETA");
}

// ---------------------------------------------------------------- hard families

struct HardSpec {
  std::string family = "low";  // low | high | fracphase
  std::size_t n = 16;
  std::size_t d = 64;
  double sigma = 1.0;
  std::size_t alpha = 4;
  std::uint64_t seed = 0;
  HighPrecisionNormalization normalization = HighPrecisionNormalization::Exact;
};

struct HardInstance {
  RandomVariable rv;
  Vec designed_mean;
  std::vector<std::uint8_t> bits;
  json metadata;
};

inline std::string normalization_name(HighPrecisionNormalization n) {
  switch (n) {
    case HighPrecisionNormalization::Exact: return "exact";
    case HighPrecisionNormalization::Definition: return "definition";
    case HighPrecisionNormalization::TraceFormula: return "trace_formula";
  }
  return "?";
}

inline HighPrecisionNormalization normalization_from_name(const std::string& s) {
  if (s == "exact") return HighPrecisionNormalization::Exact;
  if (s == "definition") return HighPrecisionNormalization::Definition;
  if (s == "trace_formula") return HighPrecisionNormalization::TraceFormula;
  throw InvalidArgument("unknown normalization \"" + s + "\" (expected exact, definition or trace_formula)");
}

inline HardInstance generate_hard(const HardSpec& s) {
  Rng rng(s.seed);
  HardInstance out{RandomVariable::point_mass(Vec{0.0}), {}, {}, json::object()};
  if (s.family == "low") {
    out.bits = balanced_bits(s.alpha * s.n, rng);
    out.rv = hard_rv_low_precision(s.n, s.d, s.sigma, out.bits, s.alpha);
    out.designed_mean = low_precision_designed_mean(s.n, s.d, s.sigma, out.bits, s.alpha);
  } else if (s.family == "high") {
    require(s.d >= 1 && (s.alpha * s.n) % s.d == 0, "hard: high family needs alpha*n divisible by d");
    const SearchParityInstance inst = search_parity_instance(s.d, s.alpha * s.n / s.d, rng);
    out.bits = inst.b;
    out.rv = hard_rv_high_precision(s.n, s.d, s.sigma, inst, s.alpha, s.normalization);
    out.designed_mean = high_precision_designed_mean(s.n, s.d, s.sigma, inst, s.alpha, s.normalization);
    out.metadata["normalization"] = normalization_name(s.normalization);
  } else if (s.family == "fracphase") {
    out.bits = random_bits(s.d, rng);
    out.rv = fractional_phase_rv(s.d, s.n, out.bits);
    out.designed_mean = fractional_phase_designed_mean(s.d, s.n, out.bits);
  } else {
    throw InvalidArgument("unknown hard family \"" + s.family + "\" (expected low, high or fracphase)");
  }
  const MomentSummary mom = moments(out.rv);
  out.metadata["family"] = s.family;
  out.metadata["n"] = s.n;
  out.metadata["d"] = s.d;
  out.metadata["sigma"] = s.sigma;
  out.metadata["alpha"] = s.alpha;
  out.metadata["seed"] = s.seed;
  out.metadata["bits"] = std::vector<int>(out.bits.begin(), out.bits.end());
  out.metadata["designed_mean"] = out.designed_mean;
  out.metadata["trace_cov"] = mom.cov_trace;
  out.metadata["spectral_norm_cov"] = mom.spectral_norm;
  return out;
}

// ---------------------------------------------------------------- config

struct RvSource {
  enum class Kind { Inline, File, Battery, Hard };
  Kind kind = Kind::Battery;
  json spec;  // Inline
  std::string path;  // File
  BatteryKind battery = BatteryKind::BallPairs;
  std::size_t d = 2;
  double scale = 1.0;
  HardSpec hard;
};

struct ExperimentConfig {
  RvSource source;
  std::string estimator = "bounded";
  double n = 64.0;
  double nprime = 0.0;
  double delta = 0.1;
  std::optional<double> L2;
  std::string noise = "ideal";
  std::uint64_t noise_seed = 0;
  OracleConfig oracle;
  bool force_full_state = false;
  int trials = 1;
  std::uint64_t seed = 0;
  enum class Sweep { None, N, NNprime };
  Sweep sweep = Sweep::None;
  std::vector<double> n_grid;
  std::vector<double> nprime_grid;
  std::string output;
  std::string format = "csv";
  unsigned threads = 1;
};

inline void require_increasing(const std::vector<double>& g, const std::string& name) {
  require(!g.empty(), "config: " + name + " grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i)
    require(g[i] > g[i - 1], "config: " + name + " grid is not strictly increasing at index " + std::to_string(i));
}

inline void validate(const ExperimentConfig& c) {
  require(c.trials >= 1, "config: trials must be at least 1");
  require(c.delta > 0.0 && c.delta < 1.0, "config: delta must lie in (0,1)");
  require(c.threads >= 1, "config: threads must be at least 1");
  if (c.sweep == ExperimentConfig::Sweep::N) require_increasing(c.n_grid, "n");
  if (c.sweep == ExperimentConfig::Sweep::NNprime) {
    require_increasing(c.n_grid, "n");
    require_increasing(c.nprime_grid, "nprime");
  }
  require(c.format == "csv" || c.format == "json", "config: format must be csv or json");
  parse_noise(c.noise, c.noise_seed);
}

inline RvSource parse_source(const json& j) {
  RvSource s;
  const std::string type = j.at("type").get<std::string>();
  if (type == "inline") {
    s.kind = RvSource::Kind::Inline;
    s.spec = j.at("spec");
  } else if (type == "file") {
    s.kind = RvSource::Kind::File;
    s.path = j.at("path").get<std::string>();
  } else if (type == "battery") {
    s.kind = RvSource::Kind::Battery;
    s.battery = battery_from_name(j.at("distribution").get<std::string>());
    s.d = j.value("d", std::size_t{2});
    s.scale = j.value("scale", 1.0);
  } else if (type == "hard") {
    s.kind = RvSource::Kind::Hard;
    s.hard.family = j.at("family").get<std::string>();
    s.hard.n = j.value("n", s.hard.n);
    s.hard.d = j.value("d", s.hard.d);
    s.hard.sigma = j.value("sigma", s.hard.sigma);
    s.hard.alpha = j.value("alpha", s.hard.alpha);
    s.hard.seed = j.value("seed", s.hard.seed);
    if (j.contains("normalization")) s.hard.normalization = normalization_from_name(j["normalization"].get<std::string>());
  } else {
    throw InvalidArgument("config: source.type \"" + type + "\" is not one of inline, file, battery, hard");
  }
  return s;
}

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("source")) c.source = parse_source(j["source"]);
    c.estimator = j.value("estimator", c.estimator);
    c.n = j.value("n", c.n);
    c.nprime = j.value("nprime", c.nprime);
    c.delta = j.value("delta", c.delta);
    if (j.contains("L2")) c.L2 = j["L2"].get<double>();
    c.noise = j.value("noise", c.noise);
    c.noise_seed = j.value("noise_seed", c.noise_seed);
    if (j.contains("oracle")) {
      const json& o = j["oracle"];
      c.oracle.cost_constant = o.value("cost_constant", c.oracle.cost_constant);
      c.oracle.quantile_c = o.value("quantile_c", c.oracle.quantile_c);
      c.oracle.exact_quantiles = o.value("exact_quantiles", c.oracle.exact_quantiles);
    }
    c.force_full_state = j.value("full_state", c.force_full_state);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      const std::string axis = s.value("axis", std::string("none"));
      if (axis == "none") c.sweep = ExperimentConfig::Sweep::None;
      else if (axis == "n") c.sweep = ExperimentConfig::Sweep::N;
      else if (axis == "n_nprime") c.sweep = ExperimentConfig::Sweep::NNprime;
      else throw InvalidArgument("config: sweep.axis \"" + axis + "\" is not one of none, n, n_nprime");
      if (s.contains("n")) c.n_grid = s["n"].get<std::vector<double>>();
      if (s.contains("nprime")) c.nprime_grid = s["nprime"].get<std::vector<double>>();
    }
    c.output = j.value("output", c.output);
    c.format = j.value("format", c.format);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open \"" + path + "\" for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open \"" + path + "\" for writing");
  out << text;
  if (!out) throw InvalidArgument("write to \"" + path + "\" failed");
}

inline ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config \"" + path + "\": " + e.what());
  }
  return parse_config(j);
}

/// The random variable a trial with this seed runs against.
inline RandomVariable source_rv(const RvSource& s, std::uint64_t trial_seed) {
  switch (s.kind) {
    case RvSource::Kind::Inline: return distribution_from_json(s.spec);
    case RvSource::Kind::File: return parse_distribution_spec(read_text_file(s.path));
    case RvSource::Kind::Battery: return battery_instance(s.battery, s.d, trial_seed, s.scale);
    case RvSource::Kind::Hard: return generate_hard(s.hard).rv;
  }
  throw InvalidArgument("source_rv: unknown source kind");
}

// ---------------------------------------------------------------- estimator dispatch

struct RunSettings {
  std::string estimator = "bounded";
  double n = 0.0;
  double nprime = 0.0;
  double delta = 0.1;
  std::optional<double> L2;
  NoiseModel noise;
  OracleConfig oracle;
  bool force_full_state = false;
};

inline const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names = {"bounded", "near_optimal", "euclidean", "classical",
                                                 "qphase",  "qlowprec",     "phase_dispatch"};
  return names;
}

/// E||X||_2 when positive, else 1.
inline double default_L2(const RandomVariable& rv) {
  const double en = expected_norm(rv);
  return en > 0.0 ? std::min(en, 1.0) : 1.0;
}

inline EstimateReport run_estimator(const RandomVariable& rv, const RunSettings& s, Rng& rng) {
  if (s.estimator == "bounded") {
    BoundedOptions o;
    o.oracle = s.oracle;
    o.force_full_state = s.force_full_state;
    return bounded_estimator(rv, s.L2 ? *s.L2 : default_L2(rv), s.n, s.delta, s.noise, rng, o);
  }
  if (s.estimator == "near_optimal" || s.estimator == "euclidean") {
    NearOptimalOptions o;
    o.oracle = s.oracle;
    return s.estimator == "near_optimal" ? near_optimal_estimator(rv, s.n, s.delta, s.noise, rng, o)
                                         : euclidean_estimator(rv, s.n, s.delta, s.noise, rng, o);
  }
  if (s.estimator == "classical") {
    EstimateReport rep;
    rep.estimator_id = "classical";
    rep.branch = "median_of_means";
    rep.truth = mean(rv);
    rep.params.n = s.n;
    rep.params.delta = s.delta;
    rep.params.noise = s.noise;
    rep.params.seed = rng.seed();
    rep.estimate = subgaussian_estimate(rv, static_cast<std::size_t>(std::floor(s.n)), s.delta, rng, &rep.ledger).first;
    finalize_errors(rep);
    return rep;
  }
  PhaseModelOptions po;
  po.oracle = s.oracle;
  if (s.estimator == "qphase") return qphase_estimator(rv, s.n, s.nprime, s.delta, s.noise, rng, po);
  if (s.estimator == "qlowprec") return qlowprec_estimator(rv, s.n, s.nprime, s.delta, s.noise, rng, po);
  if (s.estimator == "phase_dispatch") return phase_model_dispatch(rv, s.n, s.nprime, s.delta, s.noise, rng, po);
  throw InvalidArgument("unknown estimator \"" + s.estimator + "\"");
}

enum class ErrorNorm { Linf, L2 };

struct FailBound {
  double value = 0.0;
  ErrorNorm norm = ErrorNorm::Linf;
};

inline double classical_l2_bound(const RandomVariable& rv, double n, double delta) {
  const MomentSummary m = moments(rv);
  return std::sqrt(m.cov_trace / n) + std::sqrt(m.spectral_norm * std::log2(1.0 / delta) / n);
}

/// The error level a report is checked against, per estimator and branch.
inline FailBound fail_bound(const EstimateReport& rep, const RandomVariable& rv) {
  const std::size_t d = rv.dim();
  const double dd = static_cast<double>(d);
  const double n = rep.params.n;
  const double np = rep.params.nprime;
  const double delta = rep.params.delta;
  const double lg = log2_d_over_delta(d, delta);
  const std::string& id = rep.estimator_id;
  if (id == "bounded") return {std::sqrt(rep.params.L2) * lg / n, ErrorNorm::Linf};
  if (id == "near_optimal") return {std::sqrt(moments(rv).cov_trace) * lg / n, ErrorNorm::Linf};
  if (id == "classical" || id == "euclidean") {
    if (id == "euclidean" && rep.branch == "quantum")
      return {std::sqrt(dd * moments(rv).cov_trace) * lg / n, ErrorNorm::L2};
    return {classical_l2_bound(rv, std::max(std::floor(n), std::ceil(std::log2(1.0 / delta))), delta), ErrorNorm::L2};
  }
  if (rep.branch == "trivial") return {1.0, ErrorNorm::Linf};
  if (id == "qphase" || rep.branch == "high_precision")
    return {std::max(std::sqrt(dd) / n, dd / np) * lg, ErrorNorm::Linf};
  if (id == "qlowprec" || rep.branch == "low_precision")
    return {std::max(1.0 / std::sqrt(n), dd / np) * lg, ErrorNorm::Linf};
  throw InvalidArgument("fail_bound: no bound for estimator \"" + id + "\"");
}

inline bool exceeds(const EstimateReport& rep, const FailBound& b) {
  const double err = b.norm == ErrorNorm::Linf ? rep.err_inf : rep.err_l2;
  return !(err <= b.value);
}

// ---------------------------------------------------------------- trials

struct SweepRow {
  std::string estimator;
  double n = 0.0;
  double nprime = 0.0;
  std::size_t d = 0;
  double delta = 0.0;
  double median_err_inf = 0.0;
  double median_err_l2 = 0.0;
  double fail_rate = 0.0;
  double experiments = 0.0;
  double binary_queries = 0.0;
  double phase_queries = 0.0;
  std::uint64_t classical_samples = 0;
  std::uint64_t seed_base = 0;

  bool operator==(const SweepRow&) const = default;
};

struct TrialOutcome {
  std::uint64_t seed = 0;
  std::optional<EstimateReport> report;
  std::optional<FailBound> bound;
  bool failed = false;
  std::string error;
};

struct TrialBattery {
  std::vector<TrialOutcome> trials;
  SweepRow row;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline RunSettings settings_for(const ExperimentConfig& c, double n, double nprime) {
  RunSettings s;
  s.estimator = c.estimator;
  s.n = n;
  s.nprime = nprime;
  s.delta = c.delta;
  s.L2 = c.L2;
  s.noise = parse_noise(c.noise, c.noise_seed);
  s.oracle = c.oracle;
  s.force_full_state = c.force_full_state;
  return s;
}

inline TrialOutcome run_one_trial(const ExperimentConfig& c, const RunSettings& s, std::uint64_t seed) {
  TrialOutcome t;
  t.seed = seed;
  try {
    const RandomVariable rv = source_rv(c.source, seed);
    Rng rng(seed);
    EstimateReport rep = run_estimator(rv, s, rng);
    t.bound = fail_bound(rep, rv);
    t.failed = exceeds(rep, *t.bound);
    t.report = std::move(rep);
  } catch (const std::exception& e) {
    t.failed = true;
    t.error = e.what();
  }
  return t;
}

/// Trial i runs with seed base+i; errored trials count as failures.
inline TrialBattery run_trials(const ExperimentConfig& c, double n, double nprime) {
  validate(c);
  const RunSettings s = settings_for(c, n, nprime);
  const auto T = static_cast<std::size_t>(c.trials);
  TrialBattery out;
  out.trials.resize(T);
  const unsigned workers = std::min<unsigned>(c.threads, static_cast<unsigned>(T));
  if (workers <= 1) {
    for (std::size_t i = 0; i < T; ++i) out.trials[i] = run_one_trial(c, s, c.seed + i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < T; i = next++) out.trials[i] = run_one_trial(c, s, c.seed + i);
      });
    for (auto& th : pool) th.join();
  }

  SweepRow& row = out.row;
  row.estimator = c.estimator;
  row.n = n;
  row.nprime = nprime;
  row.delta = c.delta;
  row.seed_base = c.seed;
  std::vector<double> ei, e2;
  std::size_t fails = 0;
  for (const TrialOutcome& t : out.trials) {
    if (t.failed) ++fails;
    if (!t.report) continue;
    const EstimateReport& r = *t.report;
    row.d = r.truth.size();
    if (row.nprime == 0.0) row.nprime = r.params.nprime;
    ei.push_back(r.err_inf);
    e2.push_back(r.err_l2);
    row.experiments += r.ledger.experiments;
    row.binary_queries += r.ledger.binary_queries;
    row.phase_queries += r.ledger.phase_queries;
    row.classical_samples += r.ledger.classical_samples;
  }
  row.median_err_inf = median_of(ei);
  row.median_err_l2 = median_of(e2);
  row.fail_rate = static_cast<double>(fails) / static_cast<double>(T);
  return out;
}

inline std::vector<std::pair<double, double>> sweep_points(const ExperimentConfig& c) {
  std::vector<std::pair<double, double>> pts;
  switch (c.sweep) {
    case ExperimentConfig::Sweep::None: pts.emplace_back(c.n, c.nprime); break;
    case ExperimentConfig::Sweep::N:
      for (double n : c.n_grid) pts.emplace_back(n, c.nprime);
      break;
    case ExperimentConfig::Sweep::NNprime:
      for (double n : c.n_grid)
        for (double np : c.nprime_grid) pts.emplace_back(n, np);
      break;
  }
  return pts;
}

inline std::vector<SweepRow> run_sweep(const ExperimentConfig& c) {
  std::vector<SweepRow> rows;
  for (const auto& [n, np] : sweep_points(c)) rows.push_back(run_trials(c, n, np).row);
  return rows;
}

// ---------------------------------------------------------------- export

inline const std::string& csv_header() {
  static const std::string h =
      "estimator,n,nprime,d,delta,median_err_inf,median_err_l2,fail_rate,experiments,binary_queries,phase_queries,"
      "classical_samples,seed_base";
  return h;
}

inline std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = csv_header() + "\n";
  for (const SweepRow& r : rows) {
    out += r.estimator + "," + format_g17(r.n) + "," + format_g17(r.nprime) + "," + std::to_string(r.d) + "," +
           format_g17(r.delta) + "," + format_g17(r.median_err_inf) + "," + format_g17(r.median_err_l2) + "," +
           format_g17(r.fail_rate) + "," + format_g17(r.experiments) + "," + format_g17(r.binary_queries) + "," +
           format_g17(r.phase_queries) + "," + std::to_string(r.classical_samples) + "," +
           std::to_string(r.seed_base) + "\n";
  }
  return out;
}

inline json row_to_json(const SweepRow& r) {
  return json{{"estimator", r.estimator},
              {"n", r.n},
              {"nprime", r.nprime},
              {"d", r.d},
              {"delta", r.delta},
              {"median_err_inf", r.median_err_inf},
              {"median_err_l2", r.median_err_l2},
              {"fail_rate", r.fail_rate},
              {"experiments", r.experiments},
              {"binary_queries", r.binary_queries},
              {"phase_queries", r.phase_queries},
              {"classical_samples", r.classical_samples},
              {"seed_base", r.seed_base}};
}

inline double json_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline SweepRow row_from_json(const json& j) {
  SweepRow r;
  r.estimator = j.at("estimator").get<std::string>();
  r.n = json_number(j.at("n"));
  r.nprime = json_number(j.at("nprime"));
  r.d = j.at("d").get<std::size_t>();
  r.delta = json_number(j.at("delta"));
  r.median_err_inf = json_number(j.at("median_err_inf"));
  r.median_err_l2 = json_number(j.at("median_err_l2"));
  r.fail_rate = json_number(j.at("fail_rate"));
  r.experiments = json_number(j.at("experiments"));
  r.binary_queries = json_number(j.at("binary_queries"));
  r.phase_queries = json_number(j.at("phase_queries"));
  r.classical_samples = j.at("classical_samples").get<std::uint64_t>();
  r.seed_base = j.at("seed_base").get<std::uint64_t>();
  return r;
}

/// nlohmann serializes doubles with round-trip precision (17 significant digits at most).
inline std::string rows_to_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const SweepRow& r : rows) arr.push_back(row_to_json(r));
  return arr.dump(2) + "\n";
}

inline std::vector<SweepRow> rows_from_json(std::string_view text) {
  std::vector<SweepRow> rows;
  try {
    const json arr = json::parse(text);
    for (const json& j : arr) rows.push_back(row_from_json(j));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("sweep rows: ") + e.what());
  }
  return rows;
}

enum class ExportFormat { CSV, JSON };

inline void export_rows(const std::vector<SweepRow>& rows, ExportFormat f, const std::string& path) {
  write_text_file(path, f == ExportFormat::CSV ? rows_to_csv(rows) : rows_to_json(rows));
}

inline std::vector<SweepRow> import_rows(const std::string& path) { return rows_from_json(read_text_file(path)); }

inline json ledger_to_json(const CostLedger& l) {
  return json{{"experiments", l.experiments},
              {"binary_queries", l.binary_queries},
              {"phase_queries", l.phase_queries},
              {"classical_samples", l.classical_samples},
              {"quantile_calls", l.quantile_calls}};
}

inline json report_to_json(const EstimateReport& r) {
  json j{{"estimator", r.estimator_id},
         {"branch", r.branch},
         {"estimate", r.estimate},
         {"truth", r.truth},
         {"err_inf", r.err_inf},
         {"err_l2", r.err_l2},
         {"ledger", ledger_to_json(r.ledger)},
         {"params",
          {{"n", r.params.n},
           {"nprime", r.params.nprime},
           {"delta", r.params.delta},
           {"L2", r.params.L2},
           {"noise", r.params.noise.describe()},
           {"seed", r.params.seed},
           {"m", r.params.m},
           {"alpha", r.params.alpha},
           {"repetitions", r.params.repetitions},
           {"quantile_c", r.params.quantile_c}}},
         {"warnings", r.warnings}};
  if (r.trace) {
    const NearOptimalTrace& t = *r.trace;
    json slices = json::array();
    for (const SliceRecord& s : t.slices)
      slices.push_back({{"j", s.j},
                        {"a_lo", s.a_lo},
                        {"a_hi", s.a_hi},
                        {"L2", s.L2},
                        {"m", s.m},
                        {"skipped", s.skipped},
                        {"expected_norm", s.expected_norm},
                        {"exact_mean", s.exact_mean},
                        {"estimate", s.estimate}});
    j["trace"] = {{"k", t.k},
                  {"nprime", t.nprime},
                  {"quantile_c", t.quantile_c},
                  {"eta", t.eta},
                  {"a", t.a},
                  {"y_second_moment", t.y_second_moment},
                  {"tail_mean", t.tail_mean},
                  {"slices", slices}};
  }
  return j;
}

inline void export_reports(const std::vector<EstimateReport>& reports, const std::string& path) {
  json arr = json::array();
  for (const EstimateReport& r : reports) arr.push_back(report_to_json(r));
  write_text_file(path, arr.dump(2) + "\n");
}

// ---------------------------------------------------------------- slopes

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// OLS of log2 y on log2 x.
inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "fit_slope: x and y differ in length");
  require(x.size() >= 4, "fit_slope: needs at least 4 points, got " + std::to_string(x.size()));
  const auto k = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "fit_slope: nonpositive value at point " + std::to_string(i));
    lx.push_back(std::log2(x[i]));
    ly.push_back(std::log2(y[i]));
    sx += lx.back();
    sy += ly.back();
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  require(sxx > 0.0, "fit_slope: x values are all equal");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

inline double row_field(const SweepRow& r, const std::string& name) {
  if (name == "n") return r.n;
  if (name == "nprime") return r.nprime;
  if (name == "median_err_inf") return r.median_err_inf;
  if (name == "median_err_l2") return r.median_err_l2;
  if (name == "fail_rate") return r.fail_rate;
  if (name == "experiments") return r.experiments;
  if (name == "binary_queries") return r.binary_queries;
  if (name == "phase_queries") return r.phase_queries;
  if (name == "classical_samples") return static_cast<double>(r.classical_samples);
  throw InvalidArgument("unknown sweep field \"" + name + "\"");
}

inline SlopeFit fit_slope(const std::vector<SweepRow>& rows, const std::string& x, const std::string& y) {
  std::vector<double> xs, ys;
  for (const SweepRow& r : rows) {
    xs.push_back(row_field(r, x));
    ys.push_back(row_field(r, y));
  }
  return fit_slope(xs, ys);
}

// ---------------------------------------------------------------- plot data

enum class PlotKind { ErrorVsBudget, RegimeMap };

inline std::string plot_data(const std::vector<SweepRow>& rows, PlotKind kind) {
  require(!rows.empty(), "emit_plot_data: no rows");
  std::string out;
  if (kind == PlotKind::ErrorVsBudget) {
    out = "n nprime median_err_inf median_err_l2 fail_rate\n";
    for (const SweepRow& r : rows)
      out += format_g17(r.n) + " " + format_g17(r.nprime) + " " + format_g17(r.median_err_inf) + " " +
             format_g17(r.median_err_l2) + " " + format_g17(r.fail_rate) + "\n";
  } else {
    out = "n nprime regime\n";
    for (const SweepRow& r : rows)
      out += format_g17(r.n) + " " + format_g17(r.nprime) + " " +
             regime_name(regime_classify(r.n, r.nprime, r.d, r.delta)) + "\n";
  }
  return out;
}

inline void emit_plot_data(const std::vector<SweepRow>& rows, PlotKind kind, const std::string& path) {
  write_text_file(path, plot_data(rows, kind));
}

/// Bare rows spanning an (n, n') grid, for regime maps without running trials.
inline std::vector<SweepRow> regime_grid(const std::vector<double>& ns, const std::vector<double>& nps, std::size_t d,
                                         double delta) {
  std::vector<SweepRow> rows;
  for (double n : ns)
    for (double np : nps) {
      SweepRow r;
      r.estimator = "regime";
      r.n = n;
      r.nprime = np;
      r.d = d;
      r.delta = delta;
      rows.push_back(r);
    }
  return rows;
}

}  // namespace qmeanlab
