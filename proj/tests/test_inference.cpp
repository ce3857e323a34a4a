#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "expdesign/errors.hpp"
#include "expdesign/inference.hpp"
#include "test_util.hpp"

using namespace expdesign;

namespace {

DesignSampler bcrd_sampler(const CovariateMatrix& x) {
  DesignSpec spec;
  spec.kind = DesignKind::BCRD;
  return DesignSampler(x, spec);
}

}  // namespace

TEST_CASE("randomization test matches full enumeration at 2n=6") {
  const Eigen::VectorXd yv = (Eigen::VectorXd(6) << 3.1, -0.4, 2.2, 0.9, -1.7, 4.0).finished();
  const Responses y(yv);
  const auto all = testutil::all_balanced(6);
  for (const auto& obs_signs : all) {
    const Allocation w_obs(obs_signs);
    for (double beta0 : {0.0, 0.8, -1.3}) {
      // Oracle: share of the 20 allocations at least as extreme, computed
      // from explicit group means.
      const Eigen::VectorXd ya = yv - beta0 * w_obs.as_vector();
      auto stat = [&](const std::vector<Sign>& w) {
        double t = 0, c = 0;
        for (int i = 0; i < 6; ++i) (w[static_cast<std::size_t>(i)] > 0 ? t : c) += ya(i);
        return std::abs(t / 3 - c / 3);
      };
      const double obs = stat(obs_signs);
      int extreme = 0;
      for (const auto& w : all) extreme += stat(w) >= obs - 1e-12;
      const double exact = extreme / 20.0;

      std::vector<Allocation> others;
      for (const auto& w : all) {
        if (w != obs_signs) others.emplace_back(w);
      }
      const RandTestResult r = randomization_test(w_obs, y, others, beta0);
      CHECK(r.p_value == doctest::Approx(exact).epsilon(1e-15));
      CHECK(r.null_draws == 19);
      CHECK_FALSE(r.warnings.empty());
    }
  }

  SUBCASE("sampled reference set converges to the exact p-value") {
    Engine data = make_stream(71);
    const CovariateMatrix x(testutil::uniform_matrix(6, 1, data));
    const Allocation w_obs({1, -1, 1, -1, -1, 1});
    const RandTestResult r = randomization_test(w_obs, y, bcrd_sampler(x), 0.0, 20000, 72);
    const double obs = std::abs(diff_in_means_estimator(w_obs, y));
    int extreme = 0;
    for (const auto& w : all) extreme += std::abs(diff_in_means_estimator(Allocation(w), y)) >= obs - 1e-12;
    const double exact = extreme / 20.0;
    const double sigma = std::sqrt(exact * (1 - exact) / 20000.0);
    CHECK(std::abs(r.p_value - exact) < 4 * sigma + 1.0 / 20001);
    CHECK(r.warnings.empty());
  }
}

TEST_CASE("randomization test properties") {
  Engine rng = make_stream(73);
  const CovariateMatrix x(testutil::uniform_matrix(20, 2, rng));
  const DesignSampler sampler = bcrd_sampler(x);
  const Allocation w_obs = sample_bcrd(20, rng);
  const Eigen::VectorXd noise = testutil::normal_vector(20, rng);

  SUBCASE("extreme effect gives the smallest attainable p-value") {
    const Responses y(10.0 * w_obs.as_vector() + 1e-6 * noise);
    const RandTestResult r = randomization_test(w_obs, y, sampler, 0.0, 500, 74);
    CHECK(r.p_value == doctest::Approx(1.0 / 501.0).epsilon(1e-15));
    CHECK(r.observed_estimate == doctest::Approx(10.0).epsilon(1e-6));
  }

  SUBCASE("shift equivariance is exact") {
    const Responses y(noise);
    for (double c : {0.5, -2.25, 7.0}) {
      const Responses shifted(noise + c * w_obs.as_vector());
      const RandTestResult a = randomization_test(w_obs, y, sampler, 0.3, 400, 75);
      const RandTestResult b = randomization_test(w_obs, shifted, sampler, 0.3 + c, 400, 75);
      CHECK(a.p_value == b.p_value);
      CHECK(b.observed_estimate == doctest::Approx(a.observed_estimate).epsilon(1e-12));
    }
  }

  SUBCASE("p-value bounds and thread independence") {
    const Responses y(noise);
    const RandTestResult one = randomization_test(w_obs, y, sampler, 0.0, 300, 76, 1);
    const RandTestResult four = randomization_test(w_obs, y, sampler, 0.0, 300, 76, 4);
    CHECK(one.p_value == four.p_value);
    CHECK(one.p_value >= 1.0 / 301);
    CHECK(one.p_value <= 1.0);
    CHECK_FALSE(randomization_test(w_obs, y, sampler, 0.0, 50, 76).warnings.empty());
    CHECK_THROWS_AS(randomization_test(w_obs, Responses(Eigen::VectorXd::Zero(4)), sampler, 0.0, 100, 1),
                    DimensionError);
  }

  SUBCASE("null p-values are centred") {
    double sum = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
      const Responses y(testutil::normal_vector(20, rng));
      sum += randomization_test(w_obs, y, sampler, 0.0, 200, 1000 + static_cast<std::uint64_t>(rep)).p_value;
    }
    CHECK(std::abs(sum / 200 - 0.5) < 0.05);
  }
}

TEST_CASE("confidence intervals by test inversion") {
  Engine rng = make_stream(77);
  const CovariateMatrix x(testutil::uniform_matrix(40, 1, rng));
  const DesignSampler sampler = bcrd_sampler(x);
  const Allocation w_obs = sample_bcrd(40, rng);
  const Eigen::VectorXd base = 0.3 * x.values().col(0) + testutil::normal_vector(40, rng, 0.2);
  const Responses y(base + 1.0 * w_obs.as_vector());
  const std::vector<Allocation> null_set = draw_null_allocations(sampler, 1000, 78);
  const GridSpec grid{0.0, 2.0, 0.005};

  const ConfidenceInterval ci95 = invert_ci(w_obs, y, null_set, 0.95, grid);
  const ConfidenceInterval ci80 = invert_ci(w_obs, y, null_set, 0.80, grid);
  const ConfidenceInterval ci50 = invert_ci(w_obs, y, null_set, 0.50, grid);
  CHECK(ci95.lower <= ci95.estimate);
  CHECK(ci95.upper >= ci95.estimate);
  CHECK(ci95.warnings.empty());
  // Nested in the level.
  CHECK(ci95.lower <= ci80.lower);
  CHECK(ci80.lower <= ci50.lower);
  CHECK(ci50.upper <= ci80.upper);
  CHECK(ci80.upper <= ci95.upper);
  CHECK(ci50.upper - ci50.lower < ci95.upper - ci95.lower);
  const ConfidenceInterval narrow = invert_ci(w_obs, y, null_set, 0.2, GridSpec{0.0, 2.0, 0.001});
  CHECK(narrow.upper - narrow.lower <= 0.3 * (ci95.upper - ci95.lower));
  CHECK(narrow.lower <= narrow.estimate);
  CHECK(narrow.upper >= narrow.estimate);

  // Shifting the effect shifts both endpoints.
  const double beta = 0.75;
  const Responses shifted(y.values() + beta * w_obs.as_vector());
  const ConfidenceInterval moved =
      invert_ci(w_obs, shifted, null_set, 0.95, GridSpec{grid.lo + beta, grid.hi + beta, grid.step});
  CHECK(moved.lower == doctest::Approx(ci95.lower + beta).epsilon(1e-9));
  CHECK(moved.upper == doctest::Approx(ci95.upper + beta).epsilon(1e-9));

  CHECK_THROWS_AS(invert_ci(w_obs, y, null_set, 0.95, GridSpec{5.0, 6.0, 0.1}), UsageError);
  const Responses exact(10.0 * w_obs.as_vector());
  CHECK_THROWS_AS(invert_ci(w_obs, exact, null_set, 0.95, GridSpec{9.93, 10.07, 0.0101}),
                  DegenerateIntervalError);
  const ConfidenceInterval via_sampler = invert_ci(w_obs, y, sampler, 0.95, grid, 1000, 78);
  CHECK(via_sampler.lower == ci95.lower);
  CHECK(via_sampler.upper == ci95.upper);
}
