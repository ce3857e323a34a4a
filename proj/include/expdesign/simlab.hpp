#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "expdesign/core.hpp"
#include "expdesign/designs.hpp"
#include "expdesign/stats.hpp"

namespace expdesign {

enum class ModelTag { Z, L, LsNL, LNL, NL, IntroLinear, IntroQuadratic };

inline constexpr ModelTag kStudyModels[] = {ModelTag::Z, ModelTag::L, ModelTag::LsNL, ModelTag::LNL,
                                            ModelTag::NL};

std::string_view to_string(ModelTag tag);
ModelTag parse_model_tag(std::string_view name);
// Covariate count the response function is defined on.
Index model_covariates(ModelTag tag);

/// Unit: y = beta w + f + e, estimated by w'y / 2n.
/// Half: y = beta w / 2 + f + e, estimated by ybar_T - ybar_C.
enum class EffectConvention { Unit, Half };

struct ResponseModel {
  ModelTag tag = ModelTag::Z;
  EffectConvention convention = EffectConvention::Unit;
};

/// f evaluated on one subject's covariates.
double response_function(ModelTag tag, const Eigen::Ref<const Eigen::RowVectorXd>& x);

Responses evaluate_response(const ResponseModel& model, const CovariateMatrix& x,
                            const Allocation& w, double beta_t, const Eigen::VectorXd& noise);

/// Effect estimate matching the convention of `model`.
double effect_estimate(EffectConvention convention, const Allocation& w, const Responses& y);

// U(-sqrt 3, sqrt 3), U(0, 3), N(0, 1).
enum class CovariateDist { UniformSym, UniformZeroThree, StandardNormal };

std::string_view to_string(CovariateDist dist);
CovariateDist parse_covariate_dist(std::string_view name);

struct ScenarioConfig {
  std::size_t n_pairs = 50;
  Index p = 2;
  CovariateDist covariate_dist = CovariateDist::UniformSym;
  double noise_sd = 0.5;
  double beta_t = 1.0;
  std::size_t n_settings = 20;
  std::size_t n_allocations = 200;
  std::vector<DesignSpec> designs;  // kind and screening options; seeds are derived
  std::vector<ModelTag> models{std::begin(kStudyModels), std::end(kStudyModels)};
  EffectConvention convention = EffectConvention::Half;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // Retain every squared error (needed by ols_analysis).
  bool keep_draws = false;

  void validate() const;
};

/// The six designs with default options.
std::vector<DesignSpec> default_designs();

struct Setting {
  CovariateMatrix x;
  Eigen::VectorXd noise;
};

/// Covariates and noise of one setting, from the stream (seed, setting, index).
Setting generate_setting(const ScenarioConfig& config, std::size_t setting_index);

struct MseCell {
  DesignKind design = DesignKind::BCRD;
  ModelTag model = ModelTag::Z;
  double mse = 0.0;
  double std_error = 0.0;  // across settings
  std::vector<double> setting_means;
  std::vector<double> squared_errors;  // setting-major; only with keep_draws
};

struct MseTable {
  std::vector<DesignKind> designs;
  std::vector<ModelTag> models;
  std::vector<MseCell> cells;  // design-major
  std::vector<std::string> warnings;

  const MseCell& cell(DesignKind design, ModelTag model) const;
};

/// Each setting builds one covariance context and one match, shared by all
/// designs. Allocation draws for (setting s, design d) use seeds derived from
/// (seed, design, s, d); every model is evaluated on the same draws.
MseTable run_mse_experiment(const ScenarioConfig& config);

struct Table1Row {
  DesignKind design = DesignKind::G;
  double mean_log10_imbalance = 0.0;  // of |xbar_T - xbar_C|
  double mse_linear = 0.0;
  double mse_nonlinear = 0.0;
};

struct Table1Comparison {
  ModelTag model = ModelTag::IntroLinear;
  DesignKind first = DesignKind::G;
  DesignKind second = DesignKind::M;
  double p_value = 1.0;  // paired t-test on per-simulation squared errors
};

struct Table1Result {
  std::vector<Table1Row> rows;
  std::vector<Table1Comparison> comparisons;
  std::size_t simulations = 0;
};

/// 2n = 40 subjects, one U(0, 3) covariate, noise sd 0.1, half convention
/// with beta = 1, designs G, M, MG. Fresh covariates and noise per simulation.
Table1Result table1_experiment(std::uint64_t seed, std::size_t simulations = 1000,
                               unsigned threads = 1);

/// Squared error regressed on full design x model dummy coding. The first
/// entry of each level list is the reference level.
stats::OlsFit ols_analysis(std::span<const double> squared_errors,
                           std::span<const std::string> design_labels,
                           std::span<const std::string> model_labels,
                           std::span<const std::string> design_levels,
                           std::span<const std::string> model_levels);

/// Convenience overload over a table built with keep_draws. BCRD and Z are the
/// reference levels when present.
stats::OlsFit ols_analysis(const MseTable& table);

struct PairComparison {
  ModelTag model = ModelTag::Z;
  DesignKind first = DesignKind::BCRD;
  DesignKind second = DesignKind::R;
  double difference = 0.0;  // mse(first) - mse(second)
  double p_value = 1.0;
  double adjusted_p = 1.0;  // Bonferroni over the pairs of one model
  std::string stars;
};

/// Welch t-tests on per-setting means for every design pair within each
/// model, Bonferroni-adjusted per model.
std::vector<PairComparison> pairwise_mse_comparisons(const MseTable& table);

std::string significance_stars(double p);

struct Finding {
  std::string name;
  bool holds = false;
  std::string detail;
};

/// Qualitative design rankings of the MSE study as point-estimate orderings.
/// "Tied" means a Bonferroni-adjusted Welch p-value of at least `alpha`.
///   matched-hybrid-best: per non-null model, min(MR, MG) is best or tied.
///   bcrd-worst: per non-null model, BCRD is worst or tied.
///   linear-m-lags: L, max(G, R, MR, MG) < M.
///   nonlinear-matching-best: NL, max(M, MR, MG) < min(BCRD, R, G).
///   mixed-ordering: LsNL and LNL, max(MR, MG) < M < min(G, R).
///   r-lags-g: L, LsNL and LNL, R >= G.
///   null-no-differences: no Z pair significant at `alpha`.
/// Findings whose models or designs are absent from the table are skipped.
std::vector<Finding> evaluate_findings(const MseTable& table, double alpha = 0.05);

}  // namespace expdesign
