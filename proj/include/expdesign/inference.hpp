#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "expdesign/core.hpp"
#include "expdesign/designs.hpp"

namespace expdesign {

struct RandTestResult {
  double observed_estimate = 0.0;  // estimate on the adjusted responses
  double p_value = 1.0;
  std::size_t null_draws = 0;
  double beta0 = 0.0;
  std::vector<std::string> warnings;
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  double grid_resolution = 0.0;
  double estimate = 0.0;
  std::vector<std::string> warnings;
};

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
};

/// Reference allocations for a randomization test: draw k uses the stream
/// (seed, null, k), so the set does not depend on `threads`.
std::vector<Allocation> draw_null_allocations(const DesignSampler& design, std::size_t n_draws,
                                              std::uint64_t seed, unsigned threads = 1);

/// Two-sided test of the sharp null y_i(T) - y_i(C) = beta0 against an
/// explicit reference set. p = (1 + #{|est(w')| >= |est(w_obs)|}) / (N + 1)
/// on responses adjusted by -beta0 * w_obs.
RandTestResult randomization_test(const Allocation& w_obs, const Responses& y,
                                  std::span<const Allocation> null_set, double beta0);

RandTestResult randomization_test(const Allocation& w_obs, const Responses& y,
                                  const DesignSampler& design, double beta0, std::size_t n_draws,
                                  std::uint64_t seed, unsigned threads = 1);

/// Hull of the grid points whose test p-value exceeds 1 - level. All grid
/// points share one reference set.
ConfidenceInterval invert_ci(const Allocation& w_obs, const Responses& y,
                             std::span<const Allocation> null_set, double level,
                             const GridSpec& grid);

ConfidenceInterval invert_ci(const Allocation& w_obs, const Responses& y,
                             const DesignSampler& design, double level, const GridSpec& grid,
                             std::size_t n_draws, std::uint64_t seed, unsigned threads = 1);

}  // namespace expdesign
