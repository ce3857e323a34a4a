#include <cmath>
#include <iostream>
#include <memory>
#include <optional>

#include "cli.hpp"
#include "expdesign/errors.hpp"
#include "expdesign/inference.hpp"
#include "expdesign/io.hpp"
#include "options.hpp"

namespace expdesign::cli {

namespace {

struct InferOptions {
  std::string allocation;
  std::size_t row = 0;
  std::string responses;
  std::string covariates;
  double beta0 = 0.0;
  double level = 0.95;
  std::size_t draws = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  std::optional<double> grid_step;
  std::string out;
  DesignFlags design;
};

// Covariates only shape the null distribution of covariate-aware designs.
// BCRD ignores them, so a placeholder index column stands in when none is given.
CovariateMatrix covariates_for(const InferOptions& o, DesignKind kind, Index subjects) {
  if (!o.covariates.empty()) return io::read_covariates(o.covariates);
  if (kind != DesignKind::BCRD) {
    throw UsageError("--covariates is required for design " + std::string(to_string(kind)));
  }
  return CovariateMatrix(Eigen::VectorXd::LinSpaced(subjects, 0.0, static_cast<double>(subjects - 1)));
}

// Centered on the estimate, +-8 null standard errors, 801 points.
GridSpec default_grid(const Allocation& w, const Responses& y) {
  const double est = diff_in_means_estimator(w, y);
  const Eigen::VectorXd& v = y.values();
  const double sd = std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
  double half = 8.0 * sd / std::sqrt(static_cast<double>(v.size()));
  if (!(half > 0.0)) half = 1.0;
  return {est - half, est + half, half / 400.0};
}

void run_infer(const InferOptions& o, const Context& ctx) {
  RunManifest manifest("infer", ctx.argv);
  manifest.seed = o.seed;
  const auto allocations = io::read_allocations(o.allocation);
  if (o.row >= allocations.size()) {
    throw UsageError("--row " + std::to_string(o.row) + " but the file holds " +
                     std::to_string(allocations.size()) + " allocations");
  }
  const Allocation& w = allocations[o.row];
  const Responses y = io::read_responses(o.responses);
  if (static_cast<std::size_t>(y.size()) != w.size()) {
    throw DimensionError("allocation has " + std::to_string(w.size()) + " entries, responses " +
                         std::to_string(y.size()));
  }
  DesignSpec spec = o.design.spec();
  spec.seed = o.seed;
  const CovariateMatrix x = covariates_for(o, spec.kind, y.size());
  if (x.subjects() != y.size()) {
    throw DimensionError("covariates have " + std::to_string(x.subjects()) + " rows, responses " +
                         std::to_string(y.size()));
  }

  GridSpec grid = default_grid(w, y);
  if (o.grid_lo) grid.lo = *o.grid_lo;
  if (o.grid_hi) grid.hi = *o.grid_hi;
  if (o.grid_step) grid.step = *o.grid_step;

  const DesignSampler sampler(x, spec);
  const std::vector<Allocation> null_set = draw_null_allocations(sampler, o.draws, o.seed, o.threads);
  const RandTestResult test = randomization_test(w, y, null_set, o.beta0);
  const ConfidenceInterval ci = invert_ci(w, y, null_set, o.level, grid);

  Json out;
  out["estimate"] = diff_in_means_estimator(w, y);
  out["beta0"] = o.beta0;
  out["p_value"] = test.p_value;
  out["null_draws"] = test.null_draws;
  out["design"] = spec_json(spec);
  out["ci"] = {{"lower", ci.lower},
               {"upper", ci.upper},
               {"level", ci.level},
               {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"step", grid.step}}}};
  std::vector<std::string> warnings = test.warnings;
  warnings.insert(warnings.end(), ci.warnings.begin(), ci.warnings.end());
  out["warnings"] = warnings;

  std::cout << out.dump(2) << "\n";
  manifest.warnings = warnings;
  manifest.config = {{"allocation", o.allocation}, {"row", o.row},         {"responses", o.responses},
                     {"covariates", o.covariates}, {"beta0", o.beta0},     {"level", o.level},
                     {"draws", o.draws},           {"threads", o.threads}, {"design", spec_json(spec)},
                     {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"step", grid.step}}}};
  if (!o.out.empty()) {
    write_json(o.out, out);
    manifest.write(o.out + ".manifest.json");
  }
  report_warnings(warnings);
}

}  // namespace

void add_infer_command(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<InferOptions>();
  CLI::App* cmd = app.add_subcommand("infer", "Randomization test and confidence interval");
  cmd->add_option("--allocation", o->allocation, "Allocation CSV")->required();
  cmd->add_option("--row", o->row, "Allocation row to analyse (0-based)");
  cmd->add_option("--responses", o->responses, "Single-column response CSV")->required();
  cmd->add_option("--covariates", o->covariates, "Covariate CSV; required unless --design bcrd");
  cmd->add_option("--beta0", o->beta0, "Sharp null effect")->capture_default_str();
  cmd->add_option("--level", o->level, "Confidence level")->capture_default_str();
  cmd->add_option("--draws", o->draws, "Reference allocations")->capture_default_str();
  cmd->add_option("--seed", o->seed, "Root seed")->required();
  cmd->add_option("--threads", o->threads, "Worker cap; does not change results")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--grid-lo", o->grid_lo, "Lowest effect tested for the interval");
  cmd->add_option("--grid-hi", o->grid_hi, "Highest effect tested for the interval");
  cmd->add_option("--grid-step", o->grid_step, "Grid spacing");
  cmd->add_option("--out", o->out, "Also write the JSON result here");
  o->design.add_to(*cmd);
  cmd->callback([o, &ctx] { run_infer(*o, ctx); });
}

}  // namespace expdesign::cli
