#include "expdesign/imbalance.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "expdesign/errors.hpp"

namespace expdesign {

Eigen::MatrixXd CovarianceContext::whiten(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != covariates()) {
    throw DimensionError("cannot whiten rows with " + std::to_string(rows.cols()) +
                         " columns using a " + std::to_string(covariates()) +
                         "-covariate context");
  }
  return rows * whitener_.transpose();
}

CovarianceContext covariance_context(const CovariateMatrix& x, const CovarianceOptions& options) {
  const Eigen::MatrixXd& v = x.values();
  const Eigen::RowVectorXd mean = v.colwise().mean();
  const Eigen::MatrixXd centered = v.rowwise() - mean;
  CovarianceContext ctx;
  ctx.sigma_hat_ = (centered.transpose() * centered) / static_cast<double>(v.rows() - 1);
  // Exact symmetry; the product above is symmetric only up to round-off.
  ctx.sigma_hat_ = 0.5 * (ctx.sigma_hat_ + ctx.sigma_hat_.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ctx.sigma_hat_);
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double lmax = lambda(lambda.size() - 1);
  const double lmin = lambda(0);
  ctx.condition_ = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();

  if (ctx.condition_ <= options.max_condition) {
    Eigen::LLT<Eigen::MatrixXd> llt(ctx.sigma_hat_);
    if (llt.info() == Eigen::Success) {
      const Eigen::Index p = ctx.sigma_hat_.rows();
      const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
      // S = L L'  =>  S^-1 = L^-T L^-1, so W = L^-1.
      ctx.whitener_ = llt.matrixL().solve(identity);
      ctx.sigma_inv_ = llt.solve(identity);
      ctx.sigma_inv_ = 0.5 * (ctx.sigma_inv_ + ctx.sigma_inv_.transpose()).eval();
      return ctx;
    }
  }

  if (!options.allow_pseudo_inverse) {
    std::ostringstream msg;
    msg << "covariance matrix is effectively singular: condition estimate " << ctx.condition_
        << " exceeds threshold " << options.max_condition;
    throw SingularityError(msg.str(), ctx.condition_, options.max_condition);
  }

  ctx.pseudo_ = true;
  const double cutoff = options.pinv_rtol * lmax;
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > cutoff) inv_sqrt(i) = 1.0 / std::sqrt(lambda(i));
  }
  ctx.whitener_ = inv_sqrt.asDiagonal() * vecs.transpose();
  ctx.sigma_inv_ = ctx.whitener_.transpose() * ctx.whitener_;
  return ctx;
}

namespace {

double quadratic_imbalance(const Eigen::VectorXd& mean_diff, Index pairs,
                           const CovarianceContext& ctx) {
  return static_cast<double>(pairs) * mean_diff.dot(ctx.sigma_inv() * mean_diff);
}

}  // namespace

double mahalanobis(const Allocation& w, const CovariateMatrix& x, const CovarianceContext& ctx) {
  if (static_cast<Index>(w.size()) != x.subjects()) {
    throw DimensionError("allocation length " + std::to_string(w.size()) + " != " +
                         std::to_string(x.subjects()) + " subjects");
  }
  if (ctx.covariates() != x.covariates()) {
    throw DimensionError("covariance context does not match covariate count");
  }
  const Index n = x.pairs();
  const Eigen::VectorXd diff =
      x.values().transpose() * w.as_vector() / static_cast<double>(n);
  return quadratic_imbalance(diff, n, ctx);
}

double mahalanobis_from_diffs(const PairAssignment& z, const PairDiffMatrix& d,
                              const CovarianceContext& ctx) {
  if (static_cast<Index>(z.size()) != d.pairs()) {
    throw DimensionError("pair assignment length " + std::to_string(z.size()) + " != " +
                         std::to_string(d.pairs()) + " pairs");
  }
  if (ctx.covariates() != d.covariates()) {
    throw DimensionError("covariance context does not match covariate count");
  }
  Eigen::VectorXd zv(d.pairs());
  for (std::size_t i = 0; i < z.size(); ++i) zv(static_cast<Index>(i)) = z[i];
  const Index n = d.pairs();
  const Eigen::VectorXd diff = d.values().transpose() * zv / static_cast<double>(n);
  return quadratic_imbalance(diff, n, ctx);
}

double abs_mean_diff(const Allocation& w, const CovariateMatrix& x) {
  if (x.covariates() != 1) {
    throw UsageError("abs_mean_diff is defined for a single covariate (got " +
                     std::to_string(x.covariates()) + ")");
  }
  if (static_cast<Index>(w.size()) != x.subjects()) {
    throw DimensionError("allocation length does not match subject count");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x.values()(static_cast<Index>(i), 0);
  return std::abs(acc / static_cast<double>(x.pairs()));
}

}  // namespace expdesign
