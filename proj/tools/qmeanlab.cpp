#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qmeanlab/qmeanlab.hpp"

namespace {

using namespace qmeanlab;

int cmd_estimate(const std::string& spec_path, const RunSettings& settings, std::uint64_t seed,
                 const std::string& out_path) {
  const RandomVariable rv = parse_distribution_spec(read_text_file(spec_path));
  Rng rng(seed);
  const EstimateReport rep = run_estimator(rv, settings, rng);
  const std::string text = report_to_json(rep).dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
  return 0;
}

int cmd_sweep(const std::string& config_path, std::string out_path, std::string format, const std::string& plot,
              const std::string& plot_path) {
  ExperimentConfig cfg = load_config(config_path);
  if (out_path.empty()) out_path = cfg.output;
  if (format.empty()) format = cfg.format;
  const std::vector<SweepRow> rows = run_sweep(cfg);
  const ExportFormat f = format == "json" ? ExportFormat::JSON : ExportFormat::CSV;
  if (out_path.empty())
    std::cout << (f == ExportFormat::JSON ? rows_to_json(rows) : rows_to_csv(rows));
  else
    export_rows(rows, f, out_path);
  if (!plot.empty()) {
    const PlotKind kind = plot == "regime_map" ? PlotKind::RegimeMap : PlotKind::ErrorVsBudget;
    if (plot_path.empty())
      std::cout << plot_data(rows, kind);
    else
      emit_plot_data(rows, kind, plot_path);
  }
  return 0;
}

int cmd_hard(const HardSpec& spec, const std::string& out_path) {
  const HardInstance inst = generate_hard(spec);
  const std::string dist = serialize_distribution_spec(inst.rv);
  if (out_path.empty()) {
    json doc;
    doc["distribution"] = json::parse(dist);
    doc["metadata"] = inst.metadata;
    std::cout << doc.dump(2) << "\n";
  } else {
    write_text_file(out_path, dist);
    write_text_file(out_path + ".meta.json", inst.metadata.dump(2) + "\n");
  }
  return 0;
}

int cmd_check(bool quick, int only) {
  AcceptanceOptions opt;
  if (quick) opt.trial_scale = 0.1;
  int failed = 0;
  for (const Criterion& c : acceptance_criteria()) {
    if (only != 0 && c.id != only) continue;
    const CriterionResult r = run_criterion(c, opt);
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
    failed += !r.pass;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmeanlab: quantum multivariate mean estimation lab"};
  app.require_subcommand(1);

  auto* est = app.add_subcommand("estimate", "Run one estimator on a distribution spec");
  std::string spec_path, est_out, noise = "ideal";
  RunSettings settings;
  std::uint64_t seed = 0, noise_seed = 0;
  double L2 = 0.0;
  est->add_option("--spec", spec_path, "Distribution spec (JSON)")->required()->check(CLI::ExistingFile);
  est->add_option("--estimator", settings.estimator, "Estimator id")
      ->required()
      ->check(CLI::IsMember(estimator_names()));
  est->add_option("--n", settings.n, "Budget n")->required();
  est->add_option("--nprime", settings.nprime, "Phase-query budget n'");
  est->add_option("--delta", settings.delta, "Failure probability")->required();
  est->add_option("--seed", seed, "Seed")->required();
  est->add_option("--noise", noise, "ideal | perturbed:EPS,ETA");
  est->add_option("--noise-seed", noise_seed, "Seed of the oracle perturbation");
  est->add_option("--L2", L2, "Upper bound on E||X||_2 (bounded estimator)");
  est->add_flag("--exact-quantiles", settings.oracle.exact_quantiles, "Quantile oracle returns exact quantiles");
  est->add_option("--quantile-c", settings.oracle.quantile_c, "Quantile oracle constant c");
  est->add_option("--cost-constant", settings.oracle.cost_constant, "Cost constant C");
  est->add_flag("--full-state", settings.force_full_state, "Simulate the full lattice");
  est->add_option("--output", est_out, "Write the report here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Run a configured trial battery or sweep");
  std::string config_path, sweep_out, sweep_format, plot, plot_path;
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--output", sweep_out, "Output path (overrides the config)");
  sweep->add_option("--format", sweep_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--plot", plot, "error_vs_budget | regime_map")
      ->check(CLI::IsMember({"error_vs_budget", "regime_map"}));
  sweep->add_option("--plot-output", plot_path, "Plot data path");

  auto* hard = app.add_subcommand("hard", "Generate a hard instance");
  HardSpec hs;
  std::string hard_out, normalization = "exact";
  hard->add_option("--family", hs.family, "low | high | fracphase")
      ->required()
      ->check(CLI::IsMember({"low", "high", "fracphase"}));
  hard->add_option("--n", hs.n, "n");
  hard->add_option("--d", hs.d, "d (d' for fracphase)");
  hard->add_option("--sigma", hs.sigma, "sigma");
  hard->add_option("--alpha", hs.alpha, "alpha");
  hard->add_option("--seed", hs.seed, "seed");
  hard->add_option("--normalization", normalization, "exact | definition | trace_formula (high family)")
      ->check(CLI::IsMember({"exact", "definition", "trace_formula"}));
  hard->add_option("--output", hard_out, "Spec path; metadata goes to <path>.meta.json");

  auto* check = app.add_subcommand("check", "Run the acceptance criteria");
  bool quick = false;
  int only = 0;
  check->add_flag("--quick", quick, "Use a tenth of the trials");
  check->add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 10));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*est) {
      settings.noise = parse_noise(noise, noise_seed);
      if (L2 > 0.0) settings.L2 = L2;
      return cmd_estimate(spec_path, settings, seed, est_out);
    }
    if (*sweep) return cmd_sweep(config_path, sweep_out, sweep_format, plot, plot_path);
    if (*hard) {
      hs.normalization = normalization_from_name(normalization);
      return cmd_hard(hs, hard_out);
    }
    if (*check) return cmd_check(quick, only);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qmeanlab: %s\n", e.what());
    return 2;
  }
  return 0;
}
