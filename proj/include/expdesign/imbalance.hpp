#pragma once

#include <Eigen/Dense>

#include "expdesign/core.hpp"

namespace expdesign {

struct CovarianceOptions {
  // Above this condition number the covariance is treated as singular.
  double max_condition = 1e12;
  // Fall back to a truncated pseudo-inverse instead of raising.
  bool allow_pseudo_inverse = false;
  // Relative cutoff for singular values kept by the pseudo-inverse.
  double pinv_rtol = 1e-10;
};

/// Sample covariance of all subjects with its inverse, computed once and
/// shared by every imbalance evaluation on the same covariates.
class CovarianceContext {
 public:
  const Eigen::MatrixXd& sigma_hat() const noexcept { return sigma_hat_; }
  const Eigen::MatrixXd& sigma_inv() const noexcept { return sigma_inv_; }
  // W with W'W = sigma_inv; rows of x * W' have identity metric.
  const Eigen::MatrixXd& whitener() const noexcept { return whitener_; }
  double condition_estimate() const noexcept { return condition_; }
  bool pseudo_inverse() const noexcept { return pseudo_; }
  Index covariates() const noexcept { return sigma_hat_.rows(); }

  // Rows mapped into the whitened coordinate system.
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& rows) const;

 private:
  friend CovarianceContext covariance_context(const CovariateMatrix&, const CovarianceOptions&);

  Eigen::MatrixXd sigma_hat_;
  Eigen::MatrixXd sigma_inv_;
  Eigen::MatrixXd whitener_;
  double condition_ = 1.0;
  bool pseudo_ = false;
};

/// Unbiased (2n - 1 denominator) covariance and its inverse.
///
/// Throws SingularityError when the condition estimate exceeds
/// options.max_condition, unless allow_pseudo_inverse is set.
CovarianceContext covariance_context(const CovariateMatrix& x,
                                     const CovarianceOptions& options = {});

/// n (xbar_T - xbar_C)' S^-1 (xbar_T - xbar_C), with n the number of pairs.
double mahalanobis(const Allocation& w, const CovariateMatrix& x, const CovarianceContext& ctx);

/// Same quantity computed from within-pair differences and pair orientations.
double mahalanobis_from_diffs(const PairAssignment& z, const PairDiffMatrix& d,
                              const CovarianceContext& ctx);

/// |xbar_T - xbar_C| for a single covariate.
double abs_mean_diff(const Allocation& w, const CovariateMatrix& x);

/// Lower incomplete gamma function: integral of t^(s-1) e^-t over [0, x].
double lower_incomplete_gamma(double s, double x);

/// Regularised form P(s, x) = lower_incomplete_gamma(s, x) / Gamma(s).
double regularized_lower_gamma(double s, double x);

/// Multiplicative MSE reduction of rerandomisation at threshold a with p
/// covariates: 1 - (2/p) gamma(p/2 + 1, a/2) / gamma(p/2, a/2).
double eta(int p, double a);

}  // namespace expdesign
