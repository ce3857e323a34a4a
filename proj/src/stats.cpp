#include "expdesign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "expdesign/errors.hpp"

namespace expdesign::stats {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double mean(std::span<const double> v) {
  if (v.empty()) throw UsageError("mean of an empty sample");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) throw UsageError("median of an empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw UsageError("variance needs at least two observations");
  const double m = mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

double slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("slope needs two equal-length samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw UsageError("slope needs distinct x values");
  return sxy / sxx;
}

double t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

namespace {

// Identical samples give 0/0; report no evidence of a difference.
TTest finish(double diff, double se, double df) {
  TTest out;
  out.difference = diff;
  out.df = df;
  if (se == 0.0) {
    out.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    out.p_value = diff == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.statistic = diff / se;
  out.p_value = t_two_sided_p(out.statistic, df);
  return out;
}

}  // namespace

TTest welch_t_test(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = variance(a) / na;
  const double vb = variance(b) / nb;
  const double se2 = va + vb;
  const double df = se2 == 0.0 ? na + nb - 2.0
                               : se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return finish(mean(a) - mean(b), std::sqrt(se2), df);
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  return finish(mean(d), std::sqrt(variance(d) / n), n - 1.0);
}

OlsFit ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::vector<std::string> names) {
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();
  if (y.size() != n) throw DimensionError("response length differs from design rows");
  if (static_cast<Eigen::Index>(names.size()) != k) throw DimensionError("one name per column required");
  if (n <= k) throw CollinearityError("OLS needs more observations than coefficients");

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k) {
    throw CollinearityError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                            " of " + std::to_string(k) + " columns)");
  }
  OlsFit fit;
  fit.names = std::move(names);
  fit.estimate = qr.solve(y);
  const Eigen::VectorXd resid = y - design * fit.estimate;
  fit.df = static_cast<double>(n - k);
  fit.residual_sd = std::sqrt(resid.squaredNorm() / fit.df);

  // (X'X)^-1 = P R^-1 R^-T P'.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::VectorXd diag_perm = rinv.rowwise().squaredNorm();
  Eigen::VectorXd diag(k);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index j = 0; j < k; ++j) diag(perm(j)) = diag_perm(j);

  fit.std_error = fit.residual_sd * diag.array().sqrt();
  fit.t_value = fit.estimate.array() / fit.std_error.array();
  fit.p_value.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) fit.p_value(j) = t_two_sided_p(fit.t_value(j), fit.df);
  return fit;
}

}  // namespace expdesign::stats
