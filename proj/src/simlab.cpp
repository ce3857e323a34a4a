#include "expdesign/simlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>

#include "expdesign/errors.hpp"
#include "expdesign/matching.hpp"
#include "expdesign/parallel.hpp"

namespace expdesign {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

constexpr ModelTag kAllModels[] = {ModelTag::Z,  ModelTag::L,           ModelTag::LsNL,
                                   ModelTag::LNL, ModelTag::NL,         ModelTag::IntroLinear,
                                   ModelTag::IntroQuadratic};

double convention_scale(EffectConvention c) { return c == EffectConvention::Half ? 0.5 : 1.0; }

}  // namespace

std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::Z: return "Z";
    case ModelTag::L: return "L";
    case ModelTag::LsNL: return "LsNL";
    case ModelTag::LNL: return "LNL";
    case ModelTag::NL: return "NL";
    case ModelTag::IntroLinear: return "linear";
    case ModelTag::IntroQuadratic: return "nonlinear";
  }
  return "?";
}

ModelTag parse_model_tag(std::string_view name) {
  for (ModelTag t : kAllModels) {
    if (upper(to_string(t)) == upper(name)) return t;
  }
  throw UsageError("unknown response model '" + std::string(name) + "'");
}

Index model_covariates(ModelTag tag) {
  switch (tag) {
    case ModelTag::IntroLinear:
    case ModelTag::IntroQuadratic: return 1;
    case ModelTag::Z: return 0;
    default: return 2;
  }
}

double response_function(ModelTag tag, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  switch (tag) {
    case ModelTag::Z: return 0.0;
    case ModelTag::L: return 3 * x(0) + 3 * x(1);
    case ModelTag::LsNL: return 3 * x(0) + 3 * x(1) + x(0) * x(0);
    case ModelTag::LNL: return 3 * x(0) + 3 * x(1) + x(0) * x(0) + x(1) * x(1) + x(0) * x(1);
    case ModelTag::NL: return x(0) * x(0) + x(1) * x(1) + x(0) * x(1);
    case ModelTag::IntroLinear: return x(0);
    case ModelTag::IntroQuadratic: return x(0) * x(0);
  }
  return 0.0;
}

Responses evaluate_response(const ResponseModel& model, const CovariateMatrix& x,
                            const Allocation& w, double beta_t, const Eigen::VectorXd& noise) {
  const Index m = x.subjects();
  if (static_cast<Index>(w.size()) != m || noise.size() != m) {
    throw DimensionError("allocation, noise and covariates differ in length");
  }
  const Index need = model_covariates(model.tag);
  const bool intro = model.tag == ModelTag::IntroLinear || model.tag == ModelTag::IntroQuadratic;
  if ((intro && x.covariates() != 1) || (!intro && need > 0 && x.covariates() != need)) {
    throw DimensionError("model " + std::string(to_string(model.tag)) + " needs " +
                         std::to_string(need) + " covariate(s), got " +
                         std::to_string(x.covariates()));
  }
  const double effect = convention_scale(model.convention) * beta_t;
  Eigen::VectorXd y(m);
  for (Index i = 0; i < m; ++i) {
    y(i) = effect * w[static_cast<std::size_t>(i)] + response_function(model.tag, x.row(i)) + noise(i);
  }
  return Responses(std::move(y));
}

double effect_estimate(EffectConvention convention, const Allocation& w, const Responses& y) {
  return diff_in_means_estimator(w, y) / convention_scale(convention);
}

std::string_view to_string(CovariateDist dist) {
  switch (dist) {
    case CovariateDist::UniformSym: return "uniform_sym";
    case CovariateDist::UniformZeroThree: return "uniform_0_3";
    case CovariateDist::StandardNormal: return "standard_normal";
  }
  return "?";
}

CovariateDist parse_covariate_dist(std::string_view name) {
  for (CovariateDist d : {CovariateDist::UniformSym, CovariateDist::UniformZeroThree,
                          CovariateDist::StandardNormal}) {
    if (to_string(d) == name) return d;
  }
  throw UsageError("unknown covariate distribution '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
  if (n_pairs < 2) throw UsageError("n_pairs must be at least 2");
  if (p < 1) throw UsageError("p must be positive");
  if (!(noise_sd >= 0.0)) throw UsageError("noise_sd must be >= 0");
  if (!std::isfinite(beta_t)) throw UsageError("beta_T must be finite");
  if (n_settings < 2) throw UsageError("n_settings must be at least 2");
  if (n_allocations < 1) throw UsageError("n_allocations must be positive");
  if (designs.empty()) throw UsageError("no designs configured");
  if (models.empty()) throw UsageError("no response models configured");
  for (const auto& d : designs) d.validate();
}

std::vector<DesignSpec> default_designs() {
  std::vector<DesignSpec> out;
  for (DesignKind k : kAllDesigns) {
    DesignSpec s;
    s.kind = k;
    out.push_back(s);
  }
  return out;
}

Setting generate_setting(const ScenarioConfig& config, std::size_t setting_index) {
  Engine rng = make_stream(config.seed, {stream_tag::kSetting, setting_index});
  const auto m = static_cast<Index>(2 * config.n_pairs);
  Eigen::MatrixXd x(m, config.p);
  const double r3 = std::sqrt(3.0);
  std::uniform_real_distribution<double> sym(-r3, r3);
  std::uniform_real_distribution<double> zero_three(0.0, 3.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < config.p; ++j) {
      switch (config.covariate_dist) {
        case CovariateDist::UniformSym: x(i, j) = sym(rng); break;
        case CovariateDist::UniformZeroThree: x(i, j) = zero_three(rng); break;
        case CovariateDist::StandardNormal: x(i, j) = normal(rng); break;
      }
    }
  }
  Engine noise_rng = make_stream(config.seed, {stream_tag::kNoise, setting_index});
  std::normal_distribution<double> eps(0.0, 1.0);
  Eigen::VectorXd noise(m);
  for (Index i = 0; i < m; ++i) noise(i) = config.noise_sd * eps(noise_rng);
  return {CovariateMatrix(std::move(x)), std::move(noise)};
}

const MseCell& MseTable::cell(DesignKind design, ModelTag model) const {
  for (const auto& c : cells) {
    if (c.design == design && c.model == model) return c;
  }
  throw UsageError("no MSE cell for design " + std::string(to_string(design)) + " and model " +
                   std::string(to_string(model)));
}

MseTable run_mse_experiment(const ScenarioConfig& config) {
  config.validate();
  const std::size_t n_designs = config.designs.size();
  const std::size_t n_models = config.models.size();
  const std::size_t per = config.n_allocations;

  // squared[s][d][m] holds the n_allocations squared errors.
  std::vector<std::vector<std::vector<std::vector<double>>>> squared(config.n_settings);
  std::vector<std::vector<std::string>> setting_warnings(config.n_settings);

  parallel_for(config.n_settings, config.threads, [&](std::size_t s) {
    const Setting setting = generate_setting(config, s);
    const CovarianceContext ctx = covariance_context(setting.x);
    std::optional<MatchStructure> match;
    const bool any_matched = std::any_of(config.designs.begin(), config.designs.end(),
                                         [](const DesignSpec& d) { return uses_matching(d.kind); });
    if (any_matched) match = match_subjects(setting.x, ctx);

    auto& out = squared[s];
    out.assign(n_designs, std::vector<std::vector<double>>(n_models));
    for (std::size_t d = 0; d < n_designs; ++d) {
      DesignSpec spec = config.designs[d];
      spec.seed = derive_seed(config.seed, {stream_tag::kPilot, s, d});
      const DesignSampler sampler(setting.x, spec, ctx,
                                  uses_matching(spec.kind) ? match : std::nullopt);
      const DesignSample sample =
          sample_design(sampler, per, derive_seed(config.seed, {stream_tag::kDesign, s, d}), 1);
      if (sample.duplicates_permitted) {
        setting_warnings[s].push_back("setting " + std::to_string(s) + ", design " +
                                      std::string(to_string(spec.kind)) +
                                      ": allocation space too small for unique draws");
      }
      for (std::size_t mi = 0; mi < n_models; ++mi) {
        const ResponseModel model{config.models[mi], config.convention};
        auto& errs = out[d][mi];
        errs.reserve(per);
        for (const auto& draw : sample.draws) {
          const Responses y = evaluate_response(model, setting.x, draw.allocation, config.beta_t,
                                                setting.noise);
          const double err = effect_estimate(config.convention, draw.allocation, y) - config.beta_t;
          errs.push_back(err * err);
        }
      }
    }
  });

  MseTable table;
  for (const auto& d : config.designs) table.designs.push_back(d.kind);
  table.models = config.models;
  for (auto& w : setting_warnings) {
    table.warnings.insert(table.warnings.end(), w.begin(), w.end());
  }
  for (std::size_t d = 0; d < n_designs; ++d) {
    for (std::size_t mi = 0; mi < n_models; ++mi) {
      MseCell cell;
      cell.design = config.designs[d].kind;
      cell.model = config.models[mi];
      for (std::size_t s = 0; s < config.n_settings; ++s) {
        const auto& errs = squared[s][d][mi];
        cell.setting_means.push_back(stats::mean(errs));
        if (config.keep_draws) cell.squared_errors.insert(cell.squared_errors.end(), errs.begin(), errs.end());
      }
      cell.mse = stats::mean(cell.setting_means);
      cell.std_error = std::sqrt(stats::variance(cell.setting_means) /
                                 static_cast<double>(config.n_settings));
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

Table1Result table1_experiment(std::uint64_t seed, std::size_t simulations, unsigned threads) {
  if (simulations < 2) throw UsageError("table1 needs at least two simulations");
  constexpr DesignKind kDesigns[] = {DesignKind::G, DesignKind::M, DesignKind::MG};
  constexpr ModelTag kModels[] = {ModelTag::IntroLinear, ModelTag::IntroQuadratic};
  constexpr std::size_t kSubjects = 40;
  constexpr double kNoiseSd = 0.1;
  constexpr double kBeta = 1.0;

  // [design][sim]
  std::vector<std::vector<double>> log_imb(3, std::vector<double>(simulations));
  std::vector<std::vector<std::vector<double>>> sq(
      2, std::vector<std::vector<double>>(3, std::vector<double>(simulations)));

  parallel_for(simulations, threads, [&](std::size_t k) {
    Engine data = make_stream(seed, {stream_tag::kSetting, k});
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::normal_distribution<double> eps(0.0, kNoiseSd);
    Eigen::MatrixXd xv(static_cast<Index>(kSubjects), 1);
    for (Index i = 0; i < xv.rows(); ++i) xv(i, 0) = u(data);
    Eigen::VectorXd noise(static_cast<Index>(kSubjects));
    for (Index i = 0; i < noise.size(); ++i) noise(i) = eps(data);
    const CovariateMatrix x(std::move(xv));
    const CovarianceContext ctx = covariance_context(x);
    const MatchStructure match = match_subjects(x, ctx);
    for (std::size_t d = 0; d < 3; ++d) {
      Engine rng = make_stream(seed, {stream_tag::kDesign, k, d});
      DesignDraw draw;
      switch (kDesigns[d]) {
        case DesignKind::G: draw = sample_g(x, ctx, rng); break;
        case DesignKind::M: draw = sample_m(x, ctx, match, rng); break;
        default: draw = sample_mg(x, ctx, match, rng); break;
      }
      log_imb[d][k] = std::log10(abs_mean_diff(draw.allocation, x));
      for (std::size_t m = 0; m < 2; ++m) {
        const ResponseModel model{kModels[m], EffectConvention::Half};
        const Responses y = evaluate_response(model, x, draw.allocation, kBeta, noise);
        const double err = effect_estimate(EffectConvention::Half, draw.allocation, y) - kBeta;
        sq[m][d][k] = err * err;
      }
    }
  });

  Table1Result out;
  out.simulations = simulations;
  for (std::size_t d = 0; d < 3; ++d) {
    Table1Row row;
    row.design = kDesigns[d];
    row.mean_log10_imbalance = stats::mean(log_imb[d]);
    row.mse_linear = stats::mean(sq[0][d]);
    row.mse_nonlinear = stats::mean(sq[1][d]);
    out.rows.push_back(row);
  }
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = a + 1; b < 3; ++b) {
        Table1Comparison c;
        c.model = kModels[m];
        c.first = kDesigns[a];
        c.second = kDesigns[b];
        c.p_value = stats::paired_t_test(sq[m][a], sq[m][b]).p_value;
        out.comparisons.push_back(c);
      }
    }
  }
  return out;
}

stats::OlsFit ols_analysis(std::span<const double> squared_errors,
                           std::span<const std::string> design_labels,
                           std::span<const std::string> model_labels,
                           std::span<const std::string> design_levels,
                           std::span<const std::string> model_levels) {
  const std::size_t n = squared_errors.size();
  if (design_labels.size() != n || model_labels.size() != n) {
    throw DimensionError("one design and one model label per squared error required");
  }
  if (design_levels.size() < 2 || model_levels.size() < 2) {
    throw UsageError("OLS analysis needs at least two designs and two models");
  }
  auto level_index = [](std::span<const std::string> levels, const std::string& v) {
    const auto it = std::find(levels.begin(), levels.end(), v);
    if (it == levels.end()) throw UsageError("label '" + v + "' is not a declared level");
    return static_cast<std::size_t>(it - levels.begin());
  };
  const std::size_t nd = design_levels.size() - 1;
  const std::size_t nm = model_levels.size() - 1;
  const std::size_t k = 1 + nd + nm + nd * nm;

  std::vector<std::string> names{"(Intercept)"};
  for (std::size_t d = 1; d <= nd; ++d) names.push_back(design_levels[d]);
  for (std::size_t m = 1; m <= nm; ++m) names.push_back(model_levels[m]);
  for (std::size_t m = 1; m <= nm; ++m)
    for (std::size_t d = 1; d <= nd; ++d) names.push_back(design_levels[d] + ":" + model_levels[m]);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(k));
  Eigen::VectorXd y(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Index>(i);
    const std::size_t d = level_index(design_levels, design_labels[i]);
    const std::size_t m = level_index(model_levels, model_labels[i]);
    x(r, 0) = 1.0;
    if (d > 0) x(r, static_cast<Index>(d)) = 1.0;
    if (m > 0) x(r, static_cast<Index>(nd + m)) = 1.0;
    if (d > 0 && m > 0) x(r, static_cast<Index>(nd + nm + (m - 1) * nd + d)) = 1.0;
    y(r) = squared_errors[i];
  }
  return stats::ols(x, y, std::move(names));
}

stats::OlsFit ols_analysis(const MseTable& table) {
  std::vector<std::string> design_levels;
  std::vector<std::string> model_levels;
  auto add_design = [&](DesignKind k) {
    const std::string s(to_string(k));
    if (std::find(design_levels.begin(), design_levels.end(), s) == design_levels.end()) design_levels.push_back(s);
  };
  auto add_model = [&](ModelTag t) {
    const std::string s(to_string(t));
    if (std::find(model_levels.begin(), model_levels.end(), s) == model_levels.end()) model_levels.push_back(s);
  };
  if (std::find(table.designs.begin(), table.designs.end(), DesignKind::BCRD) != table.designs.end()) add_design(DesignKind::BCRD);
  if (std::find(table.models.begin(), table.models.end(), ModelTag::Z) != table.models.end()) add_model(ModelTag::Z);
  for (DesignKind k : table.designs) add_design(k);
  for (ModelTag t : table.models) add_model(t);

  std::vector<double> values;
  std::vector<std::string> dl;
  std::vector<std::string> ml;
  for (const auto& cell : table.cells) {
    if (cell.squared_errors.empty()) {
      throw UsageError("OLS analysis needs per-draw squared errors (run with keep_draws)");
    }
    values.insert(values.end(), cell.squared_errors.begin(), cell.squared_errors.end());
    dl.insert(dl.end(), cell.squared_errors.size(), std::string(to_string(cell.design)));
    ml.insert(ml.end(), cell.squared_errors.size(), std::string(to_string(cell.model)));
  }
  return ols_analysis(values, dl, ml, design_levels, model_levels);
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::vector<PairComparison> pairwise_mse_comparisons(const MseTable& table) {
  std::vector<PairComparison> out;
  const std::size_t nd = table.designs.size();
  const double family = static_cast<double>(nd * (nd - 1) / 2);
  for (ModelTag model : table.models) {
    for (std::size_t a = 0; a < nd; ++a) {
      for (std::size_t b = a + 1; b < nd; ++b) {
        const MseCell& ca = table.cell(table.designs[a], model);
        const MseCell& cb = table.cell(table.designs[b], model);
        const stats::TTest t = stats::welch_t_test(ca.setting_means, cb.setting_means);
        PairComparison c;
        c.model = model;
        c.first = table.designs[a];
        c.second = table.designs[b];
        c.difference = ca.mse - cb.mse;
        c.p_value = t.p_value;
        c.adjusted_p = std::min(1.0, t.p_value * family);
        c.stars = significance_stars(c.adjusted_p);
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

namespace {

bool has(const std::vector<DesignKind>& v, DesignKind d) {
  return std::find(v.begin(), v.end(), d) != v.end();
}
bool has(const std::vector<ModelTag>& v, ModelTag m) {
  return std::find(v.begin(), v.end(), m) != v.end();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

}  // namespace

std::vector<Finding> evaluate_findings(const MseTable& table, double alpha) {
  using D = DesignKind;
  const auto comparisons = pairwise_mse_comparisons(table);
  auto adjusted = [&](ModelTag m, D a, D b) {
    for (const auto& c : comparisons) {
      if (c.model == m && ((c.first == a && c.second == b) || (c.first == b && c.second == a))) {
        return c.adjusted_p;
      }
    }
    return 1.0;
  };
  auto mse = [&](D d, ModelTag m) { return table.cell(d, m).mse; };
  auto all_designs = [&](std::initializer_list<D> ds) {
    for (D d : ds) {
      if (!has(table.designs, d)) return false;
    }
    return true;
  };
  std::vector<ModelTag> informative;
  for (ModelTag m : table.models) {
    if (m != ModelTag::Z) informative.push_back(m);
  }

  std::vector<Finding> out;
  if (all_designs({D::MR, D::MG}) && !informative.empty()) {
    Finding f{"matched-hybrid-best", true, ""};
    for (ModelTag m : informative) {
      D best = table.designs.front();
      for (D d : table.designs) {
        if (mse(d, m) < mse(best, m)) best = d;
      }
      const D hybrid = mse(D::MR, m) <= mse(D::MG, m) ? D::MR : D::MG;
      const double p = hybrid == best ? 1.0 : adjusted(m, hybrid, best);
      const bool ok = p >= alpha;
      f.holds = f.holds && ok;
      f.detail += std::string(to_string(m)) + ": best " + std::string(to_string(best)) + ", " +
                  std::string(to_string(hybrid)) + " adj p " + fmt(p) + (ok ? "; " : " FAILS; ");
    }
    out.push_back(std::move(f));
  }
  if (has(table.designs, D::BCRD) && table.designs.size() > 1 && !informative.empty()) {
    Finding f{"bcrd-worst", true, ""};
    for (ModelTag m : informative) {
      D worst = table.designs.front();
      for (D d : table.designs) {
        if (mse(d, m) > mse(worst, m)) worst = d;
      }
      const double p = worst == D::BCRD ? 1.0 : adjusted(m, D::BCRD, worst);
      const bool ok = p >= alpha;
      f.holds = f.holds && ok;
      f.detail += std::string(to_string(m)) + ": worst " + std::string(to_string(worst)) +
                  ", adj p " + fmt(p) + (ok ? "; " : " FAILS; ");
    }
    out.push_back(std::move(f));
  }
  if (has(table.models, ModelTag::L) && all_designs({D::G, D::R, D::MR, D::MG, D::M})) {
    const ModelTag m = ModelTag::L;
    const double top = std::max({mse(D::G, m), mse(D::R, m), mse(D::MR, m), mse(D::MG, m)});
    out.push_back({"linear-m-lags", top < mse(D::M, m),
                   "max(G,R,MR,MG) " + fmt(top) + " vs M " + fmt(mse(D::M, m))});
  }
  if (has(table.models, ModelTag::NL) && all_designs({D::M, D::MR, D::MG, D::BCRD, D::R, D::G})) {
    const ModelTag m = ModelTag::NL;
    const double matched = std::max({mse(D::M, m), mse(D::MR, m), mse(D::MG, m)});
    const double unmatched = std::min({mse(D::BCRD, m), mse(D::R, m), mse(D::G, m)});
    out.push_back({"nonlinear-matching-best", matched < unmatched,
                   "max(M,MR,MG) " + fmt(matched) + " vs min(BCRD,R,G) " + fmt(unmatched)});
  }
  if (all_designs({D::MR, D::MG, D::M, D::G, D::R})) {
    Finding f{"mixed-ordering", true, ""};
    bool any = false;
    for (ModelTag m : {ModelTag::LsNL, ModelTag::LNL}) {
      if (!has(table.models, m)) continue;
      any = true;
      const double hybrid = std::max(mse(D::MR, m), mse(D::MG, m));
      const double unmatched = std::min(mse(D::G, m), mse(D::R, m));
      const bool ok = hybrid < mse(D::M, m) && mse(D::M, m) < unmatched;
      f.holds = f.holds && ok;
      f.detail += std::string(to_string(m)) + ": " + fmt(hybrid) + " < " + fmt(mse(D::M, m)) +
                  " < " + fmt(unmatched) + (ok ? "; " : " FAILS; ");
    }
    if (any) out.push_back(std::move(f));
  }
  if (all_designs({D::R, D::G})) {
    Finding f{"r-lags-g", true, ""};
    bool any = false;
    for (ModelTag m : {ModelTag::L, ModelTag::LsNL, ModelTag::LNL}) {
      if (!has(table.models, m)) continue;
      any = true;
      const bool ok = mse(D::R, m) >= mse(D::G, m);
      f.holds = f.holds && ok;
      f.detail += std::string(to_string(m)) + ": R " + fmt(mse(D::R, m)) + " G " +
                  fmt(mse(D::G, m)) + (ok ? "; " : " FAILS; ");
    }
    if (any) out.push_back(std::move(f));
  }
  if (has(table.models, ModelTag::Z)) {
    std::size_t significant = 0;
    double min_p = 1.0;
    for (const auto& c : comparisons) {
      if (c.model != ModelTag::Z) continue;
      min_p = std::min(min_p, c.adjusted_p);
      if (c.adjusted_p < alpha) ++significant;
    }
    out.push_back({"null-no-differences", significant == 0,
                   std::to_string(significant) + " significant pairs, smallest adj p " + fmt(min_p)});
  }
  return out;
}

}  // namespace expdesign
