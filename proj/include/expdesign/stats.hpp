#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace expdesign::stats {

double mean(std::span<const double> v);
double median(std::vector<double> v);
// Sample variance with n - 1 denominator.
double variance(std::span<const double> v);

/// Sum by recursive halving; the result depends only on the element order.
double pairwise_sum(std::span<const double> v);

/// Least-squares slope of y on x.
double slope(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of a t statistic.
double t_two_sided_p(double t, double df);

struct TTest {
  double difference = 0.0;  // mean(a) - mean(b)
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// Unequal-variance two-sample t-test.
TTest welch_t_test(std::span<const double> a, std::span<const double> b);
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct OlsFit {
  std::vector<std::string> names;
  Eigen::VectorXd estimate;
  Eigen::VectorXd std_error;
  Eigen::VectorXd t_value;
  Eigen::VectorXd p_value;
  double residual_sd = 0.0;
  double df = 0.0;
};

/// Ordinary least squares through a column-pivoted QR factorisation.
/// Throws CollinearityError when the design matrix is rank deficient.
OlsFit ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::vector<std::string> names);

}  // namespace expdesign::stats
