#include <filesystem>
#include <memory>
#include <optional>
#include <cmath>
#include <sstream>

#include "cli.hpp"
#include "expdesign/diagnostics.hpp"
#include "expdesign/errors.hpp"
#include "expdesign/io.hpp"
#include "expdesign/simlab.hpp"

namespace expdesign::cli {

namespace {

namespace fs = std::filesystem;
using io::format_double;

struct SimulateOptions {
  std::string profile;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 1;
  std::optional<std::size_t> n_pairs;
  std::optional<std::size_t> settings;
  std::optional<std::size_t> allocations;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> sims;
  bool skip_ols = false;
};

constexpr const char* kFamilyWise =
    "Bonferroni-adjusted Welch t-tests on per-setting mean squared errors, per model";

void run_table1(const SimulateOptions& o, const fs::path& dir, RunManifest& manifest) {
  const std::size_t sims = o.sims.value_or(1000);
  manifest.config["simulations"] = sims;
  manifest.config["subjects"] = 40;
  manifest.config["covariate"] = "U(0, 3)";
  manifest.config["noise_sd"] = 0.1;
  manifest.config["beta_t"] = 1.0;
  const Table1Result r = table1_experiment(o.seed, sims, o.threads);

  std::ostringstream csv;
  csv << "design,mean_log10_imbalance,mse_linear,mse_nonlinear\n";
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    csv << to_string(row.design) << ',' << format_double(row.mean_log10_imbalance) << ','
        << format_double(row.mse_linear) << ',' << format_double(row.mse_nonlinear) << '\n';
    rows.push_back({{"design", to_string(row.design)},
                    {"mean_log10_imbalance", row.mean_log10_imbalance},
                    {"mse_linear", row.mse_linear},
                    {"mse_nonlinear", row.mse_nonlinear}});
  }
  io::write_text(dir / "table1.csv", csv.str());

  std::ostringstream tests;
  tests << "model,first,second,p_value\n";
  Json comparisons = Json::array();
  for (const auto& c : r.comparisons) {
    tests << to_string(c.model) << ',' << to_string(c.first) << ',' << to_string(c.second) << ','
          << format_double(c.p_value) << '\n';
    comparisons.push_back({{"model", to_string(c.model)},
                           {"first", to_string(c.first)},
                           {"second", to_string(c.second)},
                           {"p_value", c.p_value}});
  }
  io::write_text(dir / "table1_tests.csv", tests.str());
  write_json(dir / "table1.json", {{"simulations", r.simulations},
                                   {"rows", rows},
                                   {"paired_t_tests", comparisons}});
}

ScenarioConfig scenario_for(const SimulateOptions& o) {
  ScenarioConfig c;
  c.designs = default_designs();
  c.seed = o.seed;
  c.threads = o.threads;
  if (o.profile == "fig2-full") {
    c.n_settings = 50;
    c.n_allocations = 500;
  } else {
    c.n_settings = 20;
    c.n_allocations = 200;
  }
  if (o.profile == "normal-covariates") c.covariate_dist = CovariateDist::StandardNormal;
  if (o.n_pairs) c.n_pairs = *o.n_pairs;
  if (o.settings) c.n_settings = *o.settings;
  if (o.allocations) c.n_allocations = *o.allocations;
  c.keep_draws = !o.skip_ols;
  return c;
}

Json scenario_json(const ScenarioConfig& c) {
  Json designs = Json::array();
  for (const auto& d : c.designs) designs.push_back(to_string(d.kind));
  Json models = Json::array();
  for (ModelTag m : c.models) models.push_back(to_string(m));
  return {{"n_pairs", c.n_pairs},
          {"p", c.p},
          {"covariate_dist", to_string(c.covariate_dist)},
          {"noise_sd", c.noise_sd},
          {"beta_t", c.beta_t},
          {"n_settings", c.n_settings},
          {"n_allocations", c.n_allocations},
          {"designs", designs},
          {"models", models},
          {"convention", c.convention == EffectConvention::Half ? "half" : "unit"},
          {"rerandomization", "quantile(0.01) from a 10000-candidate pilot pool"},
          {"threads", c.threads}};
}

void run_mse_profile(const SimulateOptions& o, const fs::path& dir, RunManifest& manifest) {
  const ScenarioConfig config = scenario_for(o);
  manifest.config["scenario"] = scenario_json(config);
  const MseTable table = run_mse_experiment(config);
  manifest.warnings.insert(manifest.warnings.end(), table.warnings.begin(), table.warnings.end());

  std::ostringstream mse;
  mse << "design,model,mse,std_error\n";
  std::ostringstream long_form;
  long_form << "design,model,setting,mean_squared_error\n";
  Json cells = Json::array();
  for (const auto& c : table.cells) {
    mse << to_string(c.design) << ',' << to_string(c.model) << ',' << format_double(c.mse) << ','
        << format_double(c.std_error) << '\n';
    for (std::size_t s = 0; s < c.setting_means.size(); ++s) {
      long_form << to_string(c.design) << ',' << to_string(c.model) << ',' << s << ','
                << format_double(c.setting_means[s]) << '\n';
    }
    cells.push_back({{"design", to_string(c.design)},
                     {"model", to_string(c.model)},
                     {"mse", c.mse},
                     {"std_error", c.std_error}});
  }
  io::write_text(dir / "mse.csv", mse.str());
  io::write_text(dir / "setting_means.csv", long_form.str());

  std::ostringstream pairs;
  pairs << "model,first,second,difference,p_value,adjusted_p,stars\n";
  Json grid = Json::array();
  for (const auto& c : pairwise_mse_comparisons(table)) {
    pairs << to_string(c.model) << ',' << to_string(c.first) << ',' << to_string(c.second) << ','
          << format_double(c.difference) << ',' << format_double(c.p_value) << ','
          << format_double(c.adjusted_p) << ',' << c.stars << '\n';
    grid.push_back({{"model", to_string(c.model)},
                    {"first", to_string(c.first)},
                    {"second", to_string(c.second)},
                    {"difference", c.difference},
                    {"p_value", c.p_value},
                    {"adjusted_p", c.adjusted_p},
                    {"stars", c.stars}});
  }
  io::write_text(dir / "pairwise.csv", pairs.str());

  std::ostringstream findings_csv;
  findings_csv << "finding,holds,detail\n";
  Json findings = Json::array();
  for (const auto& f : evaluate_findings(table)) {
    findings_csv << f.name << ',' << (f.holds ? "true" : "false") << ",\"" << f.detail << "\"\n";
    findings.push_back({{"finding", f.name}, {"holds", f.holds}, {"detail", f.detail}});
  }
  io::write_text(dir / "findings.csv", findings_csv.str());

  Json ols = nullptr;
  if (!o.skip_ols) {
    const stats::OlsFit fit = ols_analysis(table);
    std::ostringstream csv;
    csv << "term,estimate,std_error,t_value,p_value\n";
    ols = Json::array();
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      csv << fit.names[j] << ',' << format_double(fit.estimate(k)) << ','
          << format_double(fit.std_error(k)) << ',' << format_double(fit.t_value(k)) << ','
          << format_double(fit.p_value(k)) << '\n';
      ols.push_back({{"term", fit.names[j]},
                     {"estimate", fit.estimate(k)},
                     {"std_error", fit.std_error(k)},
                     {"t_value", fit.t_value(k)},
                     {"p_value", fit.p_value(k)}});
    }
    io::write_text(dir / "ols.csv", csv.str());
  }

  write_json(dir / "results.json", {{"cells", cells},
                                    {"family_wise_method", kFamilyWise},
                                    {"pairwise", grid},
                                    {"findings", findings},
                                    {"ols", ols}});
}

void run_rates(const SimulateOptions& o, const fs::path& dir, RunManifest& manifest) {
  const std::vector<std::size_t> grid{16, 32, 64, 128, 256};
  const std::size_t reps = o.reps.value_or(500);
  const DesignKind kinds[] = {DesignKind::BCRD, DesignKind::M, DesignKind::G, DesignKind::MG};
  manifest.config["n_grid_pairs"] = grid;
  manifest.config["replicates"] = reps;
  manifest.config["covariate"] = "U(0, 1), one column";
  manifest.config["threads"] = o.threads;

  std::ostringstream slopes;
  slopes << "design,slope,switch_slope\n";
  std::ostringstream medians;
  medians << "design,n_pairs,median_abs_mean_diff,median_switches\n";
  Json studies = Json::array();
  for (DesignKind kind : kinds) {
    DesignSpec spec;
    spec.kind = kind;
    const RateStudy r = imbalance_rate_study(spec, grid, reps, o.seed, o.threads);
    slopes << to_string(kind) << ',' << format_double(r.slope) << ','
           << format_double(r.switch_slope) << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
      medians << to_string(kind) << ',' << grid[i] << ',' << format_double(r.median_imbalance[i])
              << ',' << format_double(r.median_switches[i]) << '\n';
    }
    studies.push_back({{"design", to_string(kind)},
                       {"slope", r.slope},
                       {"switch_slope", std::isnan(r.switch_slope) ? Json(nullptr) : Json(r.switch_slope)},
                       {"median_abs_mean_diff", r.median_imbalance},
                       {"median_switches", r.median_switches}});
  }
  io::write_text(dir / "slopes.csv", slopes.str());
  io::write_text(dir / "rates.csv", medians.str());
  write_json(dir / "rates.json", {{"n_grid_pairs", grid}, {"replicates", reps}, {"studies", studies}});
}

void run_simulate(const SimulateOptions& o, const Context& ctx) {
  RunManifest manifest("simulate", ctx.argv);
  manifest.seed = o.seed;
  manifest.config["profile"] = o.profile;
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + o.out_dir);

  if (o.profile == "table1") {
    run_table1(o, dir, manifest);
  } else if (o.profile == "rates") {
    run_rates(o, dir, manifest);
  } else {
    run_mse_profile(o, dir, manifest);
  }
  manifest.write(dir / "manifest.json");
  report_warnings(manifest.warnings);
}

}  // namespace

void add_simulate_command(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<SimulateOptions>();
  CLI::App* cmd = app.add_subcommand("simulate", "Run a simulation profile");
  cmd->add_option("--profile", o->profile, "Simulation profile")
      ->required()
      ->check(CLI::IsMember({"table1", "fig2-desk", "fig2-full", "rates", "normal-covariates"}));
  cmd->add_option("--seed", o->seed, "Root seed")->required();
  cmd->add_option("--out-dir", o->out_dir, "Output directory")->required();
  cmd->add_option("--threads", o->threads, "Worker cap; does not change results")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--n-pairs", o->n_pairs, "MSE profiles: pairs per setting (default 50)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  cmd->add_option("--settings", o->settings, "MSE profiles: number of covariate settings");
  cmd->add_option("--allocations", o->allocations, "MSE profiles: allocations per setting");
  cmd->add_option("--reps", o->reps, "rates: replicates per size (default 500)");
  cmd->add_option("--sims", o->sims, "table1: simulations (default 1000)");
  cmd->add_flag("--skip-ols", o->skip_ols, "MSE profiles: skip the regression over all draws");
  cmd->callback([o, &ctx] { run_simulate(*o, ctx); });
}

}  // namespace expdesign::cli
