#pragma once

#include <string>

#include "cli.hpp"
#include "expdesign/designs.hpp"

namespace expdesign::cli {

// Design flags shared by the design and infer commands.
struct DesignFlags {
  std::string design = "bcrd";
  std::string rerand_mode = "quantile";
  double rerand_param = 0.01;
  std::size_t max_draws = 100000;
  std::size_t pilot_pool = 10000;
  double greedy_tolerance = 0.0;

  void add_to(CLI::App& cmd);
  DesignSpec spec() const;
};

Json spec_json(const DesignSpec& spec);

}  // namespace expdesign::cli
