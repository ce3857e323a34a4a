#include <algorithm>
#include <memory>

#include "cli.hpp"
#include "expdesign/designs.hpp"
#include "expdesign/errors.hpp"
#include "expdesign/io.hpp"
#include "expdesign/stats.hpp"
#include "options.hpp"

namespace expdesign::cli {

namespace {

struct DesignOptions {
  std::string input;
  std::string out;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool keep_path = false;
  DesignFlags design;
};

void run_design(const DesignOptions& o, const Context& ctx) {
  RunManifest manifest("design", ctx.argv);
  manifest.seed = o.seed;
  const CovariateMatrix x = io::read_covariates(o.input);
  DesignSpec spec = o.design.spec();
  spec.seed = o.seed;
  manifest.config = {{"input", o.input},     {"out", o.out},         {"count", o.count},
                     {"threads", o.threads}, {"design", spec_json(spec)}};

  const DesignSampler sampler(x, spec);
  const DesignSample sample = sample_design(sampler, o.count, o.seed, o.threads);

  std::vector<Allocation> allocations;
  std::vector<double> imbalances;
  Json draws = Json::array();
  for (std::size_t k = 0; k < sample.draws.size(); ++k) {
    const DesignDraw& d = sample.draws[k];
    allocations.push_back(d.allocation);
    imbalances.push_back(d.imbalance);
    Json j;
    j["index"] = k;
    j["imbalance"] = d.imbalance;
    j["switches"] = d.provenance.switches;
    j["candidates_screened"] = d.provenance.candidates_screened;
    j["duplicate"] = d.provenance.duplicate;
    if (o.keep_path) j["imbalance_path"] = d.provenance.imbalance_path;
    draws.push_back(std::move(j));
  }

  if (sample.duplicates_permitted) {
    manifest.warnings.push_back("fewer unique allocations than requested; duplicates included");
  }

  Json sidecar;
  sidecar["design"] = spec_json(spec);
  sidecar["subjects"] = x.subjects();
  sidecar["covariates"] = x.covariates();
  sidecar["seed"] = o.seed;
  sidecar["count"] = allocations.size();
  sidecar["attempts"] = sample.attempts;
  sidecar["duplicates_permitted"] = sample.duplicates_permitted;
  if (spec.kind == DesignKind::R || spec.kind == DesignKind::MR) {
    sidecar["threshold"] = sampler.threshold();
  }
  sidecar["median_imbalance"] = stats::median(imbalances);
  sidecar["mean_imbalance"] = stats::mean(imbalances);
  sidecar["draws"] = std::move(draws);

  io::write_allocations(o.out, allocations);
  write_json(o.out + ".json", sidecar);
  manifest.write(o.out + ".manifest.json");
  report_warnings(manifest.warnings);
}

}  // namespace

void add_design_command(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<DesignOptions>();
  CLI::App* cmd = app.add_subcommand("design", "Draw allocations for a covariate file");
  cmd->add_option("--input", o->input, "Covariate CSV (one row per subject)")->required();
  cmd->add_option("--out", o->out, "Allocation CSV; sidecars <out>.json and <out>.manifest.json")
      ->required();
  cmd->add_option("--count", o->count, "Number of allocations")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o->seed, "Root seed")->required();
  cmd->add_option("--threads", o->threads, "Worker cap; does not change results")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--imbalance-path", o->keep_path, "Record the imbalance after every switch");
  o->design.add_to(*cmd);
  cmd->callback([o, &ctx] { run_design(*o, ctx); });
}

}  // namespace expdesign::cli
