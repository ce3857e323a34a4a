#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "expdesign/core.hpp"
#include "expdesign/designs.hpp"

namespace expdesign {

struct AssignmentCovariance {
  Eigen::MatrixXd covariance;  // 2n x 2n, normalised by the number of draws
  double accidental_bias = 0.0;  // largest eigenvalue of `covariance`
};

inline constexpr std::size_t kMinDiagnosticDraws = 1000;

/// Empirical covariance of the sign vectors. Passing min_draws = 0 allows
/// exact evaluation over an enumerated allocation space.
AssignmentCovariance assignment_covariance(std::span<const Allocation> draws,
                                           std::size_t min_draws = kMinDiagnosticDraws);

struct PairwiseProbabilities {
  Eigen::MatrixXd probability;  // P(w_i = w_j)
  Eigen::MatrixXd std_error;    // binomial standard error of each entry
};

PairwiseProbabilities pairwise_assignment_probabilities(std::span<const Allocation> draws,
                                                        std::size_t min_draws = kMinDiagnosticDraws);

struct RateStudy {
  DesignKind kind = DesignKind::BCRD;
  std::vector<std::size_t> n_grid;  // pair counts
  std::vector<double> median_imbalance;  // median |xbar_T - xbar_C| per n
  std::vector<double> median_switches;
  double slope = 0.0;  // of log10 median imbalance on log10 n
  double switch_slope = 0.0;  // of log10 median switches on log10 n; NaN if undefined
};

/// For each n in n_grid and each replicate, fresh U(0,1) covariates for 2n
/// subjects and one draw of the design; replicate r at size n uses the
/// streams (seed, replicate, n, r).
RateStudy imbalance_rate_study(const DesignSpec& spec, std::span<const std::size_t> n_grid,
                               std::size_t reps, std::uint64_t seed, unsigned threads = 1);

}  // namespace expdesign
