#include "expdesign/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "expdesign/errors.hpp"
#include "expdesign/parallel.hpp"
#include "expdesign/stats.hpp"

namespace expdesign {

namespace {

Eigen::MatrixXd stack(std::span<const Allocation> draws, std::size_t min_draws) {
  if (draws.empty() || draws.size() < min_draws) {
    throw UsageError("diagnostics need at least " + std::to_string(min_draws) + " draws (got " +
                     std::to_string(draws.size()) + ")");
  }
  const std::size_t m = draws.front().size();
  Eigen::MatrixXd w(static_cast<Index>(draws.size()), static_cast<Index>(m));
  for (std::size_t k = 0; k < draws.size(); ++k) {
    if (draws[k].size() != m) throw DimensionError("draws differ in length");
    for (std::size_t i = 0; i < m; ++i) w(static_cast<Index>(k), static_cast<Index>(i)) = draws[k][i];
  }
  return w;
}

}  // namespace

AssignmentCovariance assignment_covariance(std::span<const Allocation> draws, std::size_t min_draws) {
  const Eigen::MatrixXd w = stack(draws, min_draws);
  const Eigen::RowVectorXd mean = w.colwise().mean();
  const Eigen::MatrixXd centred = w.rowwise() - mean;
  AssignmentCovariance out;
  out.covariance = centred.transpose() * centred / static_cast<double>(w.rows());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.covariance, Eigen::EigenvaluesOnly);
  out.accidental_bias = eig.eigenvalues().maxCoeff();
  return out;
}

PairwiseProbabilities pairwise_assignment_probabilities(std::span<const Allocation> draws,
                                                        std::size_t min_draws) {
  const Eigen::MatrixXd w = stack(draws, min_draws);
  const double n = static_cast<double>(w.rows());
  // w_i w_j = 1 exactly when the signs agree.
  const Eigen::MatrixXd agree = (w.transpose() * w / n).array() * 0.5 + 0.5;
  PairwiseProbabilities out;
  out.probability = agree;
  out.std_error = (agree.array() * (1.0 - agree.array()) / n).sqrt();
  return out;
}

RateStudy imbalance_rate_study(const DesignSpec& spec, std::span<const std::size_t> n_grid,
                               std::size_t reps, std::uint64_t seed, unsigned threads) {
  const std::set<std::size_t> distinct(n_grid.begin(), n_grid.end());
  if (distinct.size() < 4 || distinct.size() != n_grid.size()) {
    throw UsageError("rate study needs at least four sizes, all distinct");
  }
  for (std::size_t n : n_grid) {
    if (n < 2) throw UsageError("rate study sizes must be at least 2 pairs");
  }
  if (reps < 200) throw UsageError("rate study needs at least 200 replicates per size");
  spec.validate();

  RateStudy out;
  out.kind = spec.kind;
  out.n_grid.assign(n_grid.begin(), n_grid.end());
  std::vector<double> log_n;
  std::vector<double> log_imb;
  std::vector<double> log_sw;
  bool switches_defined = spec.kind == DesignKind::G || spec.kind == DesignKind::MG;
  for (std::size_t n : n_grid) {
    std::vector<double> imbalance(reps);
    std::vector<double> switches(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
      Engine data = make_stream(seed, {stream_tag::kReplicate, n, r, stream_tag::kSetting});
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Eigen::MatrixXd x(static_cast<Index>(2 * n), 1);
      for (Index i = 0; i < x.rows(); ++i) x(i, 0) = u(data);
      const CovariateMatrix cov(std::move(x));
      DesignSpec local = spec;
      local.seed = derive_seed(seed, {stream_tag::kReplicate, n, r, stream_tag::kPilot});
      const DesignSampler sampler(cov, local);
      Engine rng = make_stream(seed, {stream_tag::kReplicate, n, r, stream_tag::kDraw});
      const DesignDraw d = sampler.draw(rng);
      imbalance[r] = abs_mean_diff(d.allocation, cov);
      switches[r] = static_cast<double>(d.provenance.switches);
    });
    const double med = stats::median(imbalance);
    const double med_sw = stats::median(switches);
    out.median_imbalance.push_back(med);
    out.median_switches.push_back(med_sw);
    log_n.push_back(std::log10(static_cast<double>(n)));
    log_imb.push_back(std::log10(med));
    if (med_sw > 0.0) {
      log_sw.push_back(std::log10(med_sw));
    } else {
      switches_defined = false;
    }
  }
  out.slope = stats::slope(log_n, log_imb);
  out.switch_slope = switches_defined ? stats::slope(log_n, log_sw)
                                      : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace expdesign
