#include <cmath>
#include <random>

#include "doctest.h"
#include "expdesign/errors.hpp"
#include "expdesign/rng.hpp"
#include "expdesign/stats.hpp"

using namespace expdesign;

TEST_CASE("summary statistics") {
  CHECK(stats::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(stats::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(stats::mean(v) == 2.5);
  CHECK(stats::variance(v) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(stats::median({}), UsageError);

  std::vector<double> many(1001);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = 0.1 * static_cast<double>(i);
  CHECK(stats::pairwise_sum(many) == doctest::Approx(0.1 * 1000 * 1001 / 2).epsilon(1e-14));

  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2.5, 4.5, 6.5, 8.5, 10.5};
  CHECK(stats::slope(x, y) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("t-tests against frozen reference values") {
  // Reference values from scipy.stats ttest_ind(equal_var=False) / ttest_rel.
  const std::vector<double> a{1, 2, 3, 4, 5.5};
  const std::vector<double> b{2, 4, 6, 8, 11};
  const stats::TTest w = stats::welch_t_test(a, b);
  CHECK(w.statistic == doctest::Approx(-1.7750548363729914).epsilon(1e-12));
  CHECK(w.df == doctest::Approx(5.88235294117647).epsilon(1e-12));
  CHECK(w.p_value == doctest::Approx(0.12722518922234663).epsilon(1e-9));
  const stats::TTest p = stats::paired_t_test(a, b);
  CHECK(p.statistic == doctest::Approx(-3.9691432779197755).epsilon(1e-12));
  CHECK(p.p_value == doctest::Approx(0.016550539701028162).epsilon(1e-9));
  CHECK(stats::t_two_sided_p(2.5, 7.3) == doctest::Approx(0.039650234665600415).epsilon(1e-9));

  const stats::TTest same = stats::welch_t_test(a, a);
  CHECK(same.p_value == 1.0);
  CHECK(stats::welch_t_test(std::vector<double>{1, 1, 1}, std::vector<double>{1, 1, 1}).p_value == 1.0);
}

TEST_CASE("ordinary least squares") {
  SUBCASE("six points against explicit normal equations") {
    Eigen::MatrixXd x(6, 3);
    x << 1, 0.5, 1, 1, 1.5, 0, 1, 2.0, 1, 1, 3.5, 0, 1, 4.0, 1, 1, 6.0, 1;
    Eigen::VectorXd y(6);
    y << 1.2, 2.9, 3.1, 6.2, 5.9, 9.4;
    const stats::OlsFit fit = stats::ols(x, y, {"(Intercept)", "x", "g"});
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    const Eigen::VectorXd beta = xtx_inv * x.transpose() * y;
    const Eigen::VectorXd resid = y - x * beta;
    const double s2 = resid.squaredNorm() / 3.0;
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(fit.estimate(j) == doctest::Approx(beta(j)).epsilon(1e-10));
      CHECK(fit.std_error(j) == doctest::Approx(std::sqrt(s2 * xtx_inv(j, j))).epsilon(1e-10));
    }
    // statsmodels reference.
    CHECK(fit.estimate(1) == doctest::Approx(1.5035830618892503).epsilon(1e-12));
    CHECK(fit.std_error(2) == doctest::Approx(0.2516561412179277).epsilon(1e-10));
    CHECK(fit.p_value(1) == doctest::Approx(0.00018071292335711126).epsilon(1e-8));
  }

  SUBCASE("saturated two-group model recovers the group means") {
    Eigen::MatrixXd x(5, 2);
    x << 1, 0, 1, 0, 1, 1, 1, 1, 1, 1;
    Eigen::VectorXd y(5);
    y << 2, 4, 10, 11, 12;
    const stats::OlsFit fit = stats::ols(x, y, {"(Intercept)", "B"});
    CHECK(fit.estimate(0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(fit.estimate(1) == doctest::Approx(8.0).epsilon(1e-13));
  }

  SUBCASE("synthetic data recovers known coefficients") {
    Engine rng = make_stream(61);
    std::normal_distribution<double> g(0.0, 1.0);
    const Eigen::Index n = 500;
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    const Eigen::Vector3d truth(0.5, -2.0, 3.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      x.row(i) << 1.0, g(rng), g(rng);
      y(i) = x.row(i).dot(truth) + 0.7 * g(rng);
    }
    const stats::OlsFit fit = stats::ols(x, y, {"a", "b", "c"});
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(fit.estimate(j) - truth(j)) < 3 * fit.std_error(j));
    CHECK(fit.residual_sd == doctest::Approx(0.7).epsilon(0.1));
  }

  SUBCASE("rank deficiency") {
    Eigen::MatrixXd x(4, 3);
    x << 1, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1;
    CHECK_THROWS_AS(stats::ols(x, Eigen::Vector4d(1, 2, 3, 4), {"a", "b", "c"}), CollinearityError);
    CHECK_THROWS_AS(stats::ols(x.leftCols(2), Eigen::Vector4d(1, 2, 3, 4), {"a"}), DimensionError);
  }
}
