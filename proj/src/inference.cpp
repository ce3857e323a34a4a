#include "expdesign/inference.hpp"

#include <cmath>
#include <sstream>

#include "expdesign/errors.hpp"
#include "expdesign/parallel.hpp"

namespace expdesign {

namespace {

constexpr std::size_t kMinRecommendedDraws = 100;
// Estimates within this fraction of the response scale count as ties.
constexpr double kTieTolerance = 1e-10;

Eigen::VectorXd adjusted(const Allocation& w_obs, const Responses& y, double beta0) {
  return y.values() - beta0 * w_obs.as_vector();
}

// sum_i w_i y_i / 2n with a fixed summation order.
double estimate(std::span<const Sign> w, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * y(static_cast<Index>(i));
  return s / static_cast<double>(w.size());
}

void check_inputs(const Allocation& w_obs, const Responses& y, std::span<const Allocation> null_set) {
  if (static_cast<Index>(w_obs.size()) != y.size()) {
    throw DimensionError("allocation and responses differ in length");
  }
  if (null_set.empty()) throw UsageError("randomization test needs at least one reference draw");
  for (const auto& w : null_set) {
    if (w.size() != w_obs.size()) throw DimensionError("reference allocation has the wrong length");
  }
}

std::vector<std::string> draw_warnings(std::size_t n) {
  if (n >= kMinRecommendedDraws) return {};
  return {"only " + std::to_string(n) + " reference draws; at least " +
          std::to_string(kMinRecommendedDraws) + " are recommended"};
}

struct Counted {
  double observed;
  std::size_t at_least;
};

Counted count_extreme(const Allocation& w_obs, const Eigen::VectorXd& ya,
                      std::span<const Allocation> null_set) {
  const double obs = estimate(w_obs.signs(), ya);
  const double tol = kTieTolerance * ya.cwiseAbs().mean();
  std::size_t count = 0;
  for (const auto& w : null_set) {
    if (std::abs(estimate(w.signs(), ya)) >= std::abs(obs) - tol) ++count;
  }
  return {obs, count};
}

}  // namespace

std::vector<Allocation> draw_null_allocations(const DesignSampler& design, std::size_t n_draws,
                                              std::uint64_t seed, unsigned threads) {
  std::vector<Allocation> out(n_draws);
  parallel_for(n_draws, threads, [&](std::size_t k) {
    Engine rng = make_stream(seed, {stream_tag::kNull, k});
    out[k] = design.draw(rng).allocation;
  });
  return out;
}

RandTestResult randomization_test(const Allocation& w_obs, const Responses& y,
                                  std::span<const Allocation> null_set, double beta0) {
  check_inputs(w_obs, y, null_set);
  const Counted c = count_extreme(w_obs, adjusted(w_obs, y, beta0), null_set);
  RandTestResult out;
  out.observed_estimate = c.observed;
  out.null_draws = null_set.size();
  out.beta0 = beta0;
  out.p_value = static_cast<double>(1 + c.at_least) / static_cast<double>(null_set.size() + 1);
  out.warnings = draw_warnings(null_set.size());
  return out;
}

RandTestResult randomization_test(const Allocation& w_obs, const Responses& y,
                                  const DesignSampler& design, double beta0, std::size_t n_draws,
                                  std::uint64_t seed, unsigned threads) {
  const std::vector<Allocation> null_set = draw_null_allocations(design, n_draws, seed, threads);
  return randomization_test(w_obs, y, null_set, beta0);
}

ConfidenceInterval invert_ci(const Allocation& w_obs, const Responses& y,
                             std::span<const Allocation> null_set, double level,
                             const GridSpec& grid) {
  check_inputs(w_obs, y, null_set);
  if (!(level > 0.0 && level < 1.0)) throw UsageError("confidence level must be in (0, 1)");
  if (!(grid.step > 0.0) || !(grid.hi >= grid.lo)) {
    throw UsageError("grid needs lo <= hi and a positive step");
  }
  const double est = estimate(w_obs.signs(), y.values());
  if (est < grid.lo || est > grid.hi) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "grid [" << grid.lo << ", " << grid.hi << "] does not bracket the estimate " << est;
    throw UsageError(msg.str());
  }

  ConfidenceInterval ci;
  ci.level = level;
  ci.grid_resolution = grid.step;
  ci.estimate = est;
  ci.warnings = draw_warnings(null_set.size());
  const auto points = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9)) + 1;
  bool any = false;
  std::size_t first = 0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < points; ++k) {
    const double b = grid.lo + static_cast<double>(k) * grid.step;
    const Counted c = count_extreme(w_obs, adjusted(w_obs, y, b), null_set);
    const double p = static_cast<double>(1 + c.at_least) / static_cast<double>(null_set.size() + 1);
    if (p > 1.0 - level) {
      if (!any) first = k;
      last = k;
      any = true;
    }
  }
  if (!any) {
    throw DegenerateIntervalError("no grid point was accepted at level " + std::to_string(level) +
                                  "; widen the grid or refine its step");
  }
  ci.lower = grid.lo + static_cast<double>(first) * grid.step;
  ci.upper = grid.lo + static_cast<double>(last) * grid.step;
  if (first == 0 || last + 1 == points) {
    ci.warnings.push_back("interval reaches the edge of the grid and may be truncated");
  }
  return ci;
}

ConfidenceInterval invert_ci(const Allocation& w_obs, const Responses& y,
                             const DesignSampler& design, double level, const GridSpec& grid,
                             std::size_t n_draws, std::uint64_t seed, unsigned threads) {
  const std::vector<Allocation> null_set = draw_null_allocations(design, n_draws, seed, threads);
  return invert_ci(w_obs, y, null_set, level, grid);
}

}  // namespace expdesign
