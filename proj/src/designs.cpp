#include "expdesign/designs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "expdesign/errors.hpp"
#include "expdesign/matching.hpp"
#include "expdesign/parallel.hpp"

namespace expdesign {

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::BCRD: return "BCRD";
    case DesignKind::R: return "R";
    case DesignKind::G: return "G";
    case DesignKind::M: return "M";
    case DesignKind::MR: return "MR";
    case DesignKind::MG: return "MG";
  }
  return "?";
}

DesignKind parse_design_kind(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (DesignKind k : kAllDesigns) {
    if (to_string(k) == upper) return k;
  }
  throw UsageError("unknown design '" + std::string(name) + "' (expected bcrd|r|g|m|mr|mg)");
}

bool uses_matching(DesignKind kind) {
  return kind == DesignKind::M || kind == DesignKind::MR || kind == DesignKind::MG;
}

std::string describe(const RerandMode& mode) {
  std::ostringstream out;
  out.precision(17);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Threshold>) {
          out << "threshold(" << m.a << ")";
        } else if constexpr (std::is_same_v<T, Quantile>) {
          out << "quantile(" << m.q << ")";
        } else {
          out << "best_of(" << m.n << ")";
        }
      },
      mode);
  return out.str();
}

void DesignSpec::validate() const {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Threshold>) {
          if (!(m.a >= 0.0)) throw UsageError("rerandomization threshold must be >= 0");
        } else if constexpr (std::is_same_v<T, Quantile>) {
          if (!(m.q > 0.0 && m.q <= 1.0)) throw UsageError("rerandomization quantile must be in (0, 1]");
        } else {
          if (m.n < 1) throw UsageError("best-of count must be positive");
        }
      },
      rerand);
  if (max_candidate_draws < 1) throw UsageError("max_candidate_draws must be positive");
  if (pilot_pool < 1) throw UsageError("pilot_pool must be positive");
  if (unique_attempt_factor < 1) throw UsageError("unique_attempt_factor must be positive");
  if (!(greedy_tolerance >= 0.0)) throw UsageError("greedy tolerance must be >= 0");
}

namespace {

// Rows of a whitened point set in contiguous row-major storage.
struct PointSet {
  std::vector<double> data;
  std::size_t count = 0;
  std::size_t dim = 0;

  explicit PointSet(const Eigen::MatrixXd& rows)
      : data(static_cast<std::size_t>(rows.size())),
        count(static_cast<std::size_t>(rows.rows())),
        dim(static_cast<std::size_t>(rows.cols())) {
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        data[i * dim + k] = rows(static_cast<Index>(i), static_cast<Index>(k));
      }
    }
  }
  const double* row(std::size_t i) const { return data.data() + i * dim; }
};

// (1/n) || sum_i sign_i v_i ||^2 in whitened coordinates equals the
// Mahalanobis imbalance, n being the number of pairs.
double signed_sum(const PointSet& pts, std::span<const Sign> signs, std::vector<double>& s) {
  s.assign(pts.dim, 0.0);
  for (std::size_t i = 0; i < pts.count; ++i) {
    const double* r = pts.row(i);
    for (std::size_t k = 0; k < pts.dim; ++k) s[k] += signs[i] * r[k];
  }
  double sq = 0.0;
  for (double v : s) sq += v * v;
  return sq;
}

struct SwitchOutcome {
  std::size_t switches = 0;
  std::vector<double> path;
};

// Best-improvement swap search shared by G (subjects) and MG (pair
// differences): each move flips one +1 entry and one -1 entry.
SwitchOutcome greedy_switch(const PointSet& pts, std::vector<Sign>& signs, double scale,
                            double tolerance) {
  SwitchOutcome out;
  std::vector<double> s;
  double current = scale * signed_sum(pts, signs, s);
  out.path.push_back(current);

  const std::size_t dim = pts.dim;
  std::vector<double> u(dim);
  std::vector<std::size_t> plus;
  std::vector<std::size_t> minus;
  const std::size_t max_switches = 10 * pts.count + 100;
  while (out.switches < max_switches) {
    plus.clear();
    minus.clear();
    for (std::size_t i = 0; i < signs.size(); ++i) (signs[i] > 0 ? plus : minus).push_back(i);

    double best = current;
    std::size_t best_i = 0;
    std::size_t best_j = 0;
    bool found = false;
    for (std::size_t i : plus) {
      const double* ri = pts.row(i);
      for (std::size_t k = 0; k < dim; ++k) u[k] = s[k] - 2.0 * ri[k];
      for (std::size_t j : minus) {
        const double* rj = pts.row(j);
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double t = u[k] + 2.0 * rj[k];
          sq += t * t;
        }
        const double value = scale * sq;
        if (value < best) {
          best = value;
          best_i = i;
          best_j = j;
          found = true;
        }
      }
    }
    if (!found || current - best <= tolerance) break;
    signs[best_i] = -1;
    signs[best_j] = 1;
    const double next = scale * signed_sum(pts, signs, s);
    // Guard against a round-off induced non-decrease.
    if (!(next < current)) {
      signs[best_i] = 1;
      signs[best_j] = -1;
      signed_sum(pts, signs, s);
      break;
    }
    current = next;
    ++out.switches;
    out.path.push_back(current);
  }
  return out;
}

std::vector<Sign> bcrd_signs(std::size_t subjects, Engine& rng) {
  std::vector<Sign> w(subjects);
  for (std::size_t i = 0; i < subjects; ++i) w[i] = i < subjects / 2 ? Sign{1} : Sign{-1};
  std::shuffle(w.begin(), w.end(), rng);
  return w;
}

std::vector<Sign> coin_signs(std::size_t count, Engine& rng) {
  std::vector<Sign> z(count);
  for (auto& v : z) v = (rng() >> 63) ? Sign{1} : Sign{-1};
  return z;
}

void check_match(const CovariateMatrix& x, const MatchStructure& m) {
  if (m.subjects() != x.subjects()) {
    throw DimensionError("match structure does not cover the covariate rows");
  }
}

}  // namespace

Allocation sample_bcrd(Index subjects, Engine& rng) {
  if (subjects < 2 || subjects % 2 != 0) {
    throw UsageError("BCRD needs a positive even subject count (got " + std::to_string(subjects) +
                     ")");
  }
  return Allocation(bcrd_signs(static_cast<std::size_t>(subjects), rng));
}

PairAssignment sample_pair_orientations(std::size_t pairs, Engine& rng) {
  return PairAssignment(coin_signs(pairs, rng));
}

DesignDraw greedy_pair_switch(const CovariateMatrix& x, const CovarianceContext& ctx,
                              const Allocation& w0, double tolerance) {
  if (static_cast<Index>(w0.size()) != x.subjects()) {
    throw DimensionError("starting allocation does not match subject count");
  }
  const PointSet pts(ctx.whiten(x.values()));
  std::vector<Sign> signs(w0.signs().begin(), w0.signs().end());
  SwitchOutcome outcome =
      greedy_switch(pts, signs, 1.0 / static_cast<double>(x.pairs()), tolerance);
  DesignDraw draw;
  draw.allocation = Allocation(std::move(signs));
  draw.imbalance = mahalanobis(draw.allocation, x, ctx);
  draw.provenance.switches = outcome.switches;
  draw.provenance.imbalance_path = std::move(outcome.path);
  return draw;
}

DesignDraw sample_g(const CovariateMatrix& x, const CovarianceContext& ctx, Engine& rng,
                    double tolerance) {
  return greedy_pair_switch(x, ctx, sample_bcrd(x.subjects(), rng), tolerance);
}

DesignDraw sample_m(const CovariateMatrix& x, const CovarianceContext& ctx,
                    const MatchStructure& m, Engine& rng) {
  check_match(x, m);
  PairAssignment z = sample_pair_orientations(m.size(), rng);
  DesignDraw draw;
  draw.allocation = expand_pair_assignment(z, m);
  draw.imbalance = mahalanobis(draw.allocation, x, ctx);
  draw.pair_assignment = std::move(z);
  return draw;
}

double quantile_threshold(std::vector<double> pool, double q) {
  if (pool.empty()) throw UsageError("quantile of an empty pool");
  if (!(q > 0.0 && q <= 1.0)) throw UsageError("quantile must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(pool.size())));
  const std::size_t idx = std::clamp<std::size_t>(k, 1, pool.size()) - 1;
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(idx), pool.end());
  return pool[idx];
}

PairSwitchResult greedy_pair_of_pairs(const PairDiffMatrix& d, const CovarianceContext& ctx,
                                      const PairAssignment& z0, double tolerance) {
  if (static_cast<Index>(z0.size()) != d.pairs()) {
    throw DimensionError("pair assignment does not match the number of pair differences");
  }
  const PointSet pts(ctx.whiten(d.values()));
  std::vector<Sign> signs(z0.signs().begin(), z0.signs().end());
  SwitchOutcome outcome =
      greedy_switch(pts, signs, 1.0 / static_cast<double>(d.pairs()), tolerance);
  return {PairAssignment(std::move(signs)), outcome.switches, std::move(outcome.path)};
}

DesignDraw sample_mg(const CovariateMatrix& x, const CovarianceContext& ctx,
                     const MatchStructure& m, Engine& rng, double tolerance) {
  check_match(x, m);
  const PairDiffMatrix d = pair_diffs(x, m);
  PairSwitchResult res =
      greedy_pair_of_pairs(d, ctx, sample_pair_orientations(m.size(), rng), tolerance);
  DesignDraw draw;
  draw.allocation = expand_pair_assignment(res.z, m);
  draw.imbalance = mahalanobis(draw.allocation, x, ctx);
  draw.provenance.switches = res.switches;
  draw.provenance.imbalance_path = std::move(res.imbalance_path);
  draw.pair_assignment = std::move(res.z);
  return draw;
}

DesignDraw sample_rerandomization(const CovariateMatrix& x, const CovarianceContext& ctx,
                                  const DesignSpec& spec, Engine& rng) {
  DesignSpec r = spec;
  r.kind = DesignKind::R;
  return DesignSampler(x, r, ctx, std::nullopt).draw(rng);
}

DesignDraw sample_mr(const CovariateMatrix& x, const CovarianceContext& ctx,
                     const MatchStructure& m, const DesignSpec& spec, Engine& rng) {
  check_match(x, m);
  DesignSpec r = spec;
  r.kind = DesignKind::MR;
  return DesignSampler(x, r, ctx, m).draw(rng);
}

DesignSampler::DesignSampler(const CovariateMatrix& x, const DesignSpec& spec,
                             const CovarianceOptions& options)
    : x_(x), spec_(spec), ctx_(covariance_context(x, options)) {
  spec_.validate();
  if (uses_matching(spec_.kind)) match_ = match_subjects(x_, ctx_);
  prepare();
}

DesignSampler::DesignSampler(const CovariateMatrix& x, const DesignSpec& spec,
                             CovarianceContext ctx, std::optional<MatchStructure> match)
    : x_(x), spec_(spec), ctx_(std::move(ctx)), match_(std::move(match)) {
  spec_.validate();
  if (ctx_.covariates() != x_.covariates()) {
    throw DimensionError("covariance context does not match covariate count");
  }
  if (uses_matching(spec_.kind)) {
    if (!match_) match_ = match_subjects(x_, ctx_);
    check_match(x_, *match_);
  }
  prepare();
}

void DesignSampler::prepare() {
  whitened_rows_ = ctx_.whiten(x_.values());
  if (match_) whitened_diffs_ = ctx_.whiten(pair_diffs(x_, *match_).values());
  threshold_ = std::numeric_limits<double>::infinity();
  if (spec_.kind != DesignKind::R && spec_.kind != DesignKind::MR) return;
  const bool pairs = spec_.kind == DesignKind::MR;
  if (const auto* t = std::get_if<Threshold>(&spec_.rerand)) {
    threshold_ = t->a;
  } else if (const auto* q = std::get_if<Quantile>(&spec_.rerand)) {
    Engine pilot = make_stream(spec_.seed, {stream_tag::kPilot});
    std::vector<double> pool(spec_.pilot_pool);
    for (double& v : pool) v = screened_imbalance(draw_base(pilot, pairs), pairs);
    threshold_ = quantile_threshold(std::move(pool), q->q);
  }
}

std::vector<Sign> DesignSampler::draw_base(Engine& rng, bool pairs) const {
  if (pairs) return coin_signs(match_->size(), rng);
  return bcrd_signs(static_cast<std::size_t>(x_.subjects()), rng);
}

double DesignSampler::screened_imbalance(std::span<const Sign> signs, bool pairs) const {
  const Eigen::MatrixXd& rows = pairs ? whitened_diffs_ : whitened_rows_;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(rows.cols());
  for (std::size_t i = 0; i < signs.size(); ++i) s += signs[i] * rows.row(static_cast<Index>(i)).transpose();
  return s.squaredNorm() / static_cast<double>(x_.pairs());
}

DesignDraw DesignSampler::finish(std::vector<Sign> signs, Provenance provenance, bool pairs) const {
  DesignDraw draw;
  if (pairs) {
    PairAssignment z(std::move(signs));
    draw.allocation = expand_pair_assignment(z, *match_);
    draw.pair_assignment = std::move(z);
  } else {
    draw.allocation = Allocation(std::move(signs));
  }
  draw.imbalance = mahalanobis(draw.allocation, x_, ctx_);
  draw.provenance = std::move(provenance);
  return draw;
}

DesignDraw DesignSampler::draw_rerandomized(Engine& rng, bool pairs) const {
  Provenance prov;
  if (const auto* b = std::get_if<BestOf>(&spec_.rerand)) {
    std::vector<Sign> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < b->n; ++k) {
      std::vector<Sign> cand = draw_base(rng, pairs);
      const double v = screened_imbalance(cand, pairs);
      if (v < best_value) {
        best_value = v;
        best = std::move(cand);
      }
    }
    prov.candidates_screened = b->n;
    return finish(std::move(best), std::move(prov), pairs);
  }
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < spec_.max_candidate_draws; ++k) {
    std::vector<Sign> cand = draw_base(rng, pairs);
    const double v = screened_imbalance(cand, pairs);
    best_value = std::min(best_value, v);
    if (v <= threshold_) {
      prov.candidates_screened = k + 1;
      return finish(std::move(cand), std::move(prov), pairs);
    }
  }
  std::ostringstream msg;
  msg << "no candidate met imbalance threshold " << threshold_ << " within "
      << spec_.max_candidate_draws << " draws (best " << best_value << ")";
  throw ExhaustionError(msg.str(), best_value, spec_.max_candidate_draws);
}

DesignDraw DesignSampler::draw(Engine& rng) const {
  switch (spec_.kind) {
    case DesignKind::BCRD: {
      Provenance prov;
      prov.candidates_screened = 1;
      return finish(bcrd_signs(static_cast<std::size_t>(x_.subjects()), rng), std::move(prov),
                    false);
    }
    case DesignKind::R: return draw_rerandomized(rng, false);
    case DesignKind::MR: return draw_rerandomized(rng, true);
    case DesignKind::M: {
      Provenance prov;
      prov.candidates_screened = 1;
      return finish(coin_signs(match_->size(), rng), std::move(prov), true);
    }
    case DesignKind::G: {
      const PointSet pts(whitened_rows_);
      std::vector<Sign> signs = bcrd_signs(static_cast<std::size_t>(x_.subjects()), rng);
      SwitchOutcome out = greedy_switch(pts, signs, 1.0 / static_cast<double>(x_.pairs()),
                                        spec_.greedy_tolerance);
      Provenance prov;
      prov.switches = out.switches;
      prov.imbalance_path = std::move(out.path);
      return finish(std::move(signs), std::move(prov), false);
    }
    case DesignKind::MG: {
      const PointSet pts(whitened_diffs_);
      std::vector<Sign> signs = coin_signs(match_->size(), rng);
      SwitchOutcome out = greedy_switch(pts, signs, 1.0 / static_cast<double>(x_.pairs()),
                                        spec_.greedy_tolerance);
      Provenance prov;
      prov.switches = out.switches;
      prov.imbalance_path = std::move(out.path);
      return finish(std::move(signs), std::move(prov), true);
    }
  }
  throw UsageError("unknown design kind");
}

DesignSample sample_design(const DesignSampler& sampler, std::size_t count, std::uint64_t seed,
                           unsigned threads) {
  if (count < 1) throw UsageError("sample_design needs count >= 1");
  DesignSample out;
  out.draws.reserve(count);
  const std::size_t budget = sampler.spec().unique_attempt_factor * count;
  std::set<Allocation> seen;
  std::vector<DesignDraw> rejected;

  while (out.draws.size() < count && out.attempts < budget) {
    const std::size_t batch = std::min(count - out.draws.size(), budget - out.attempts);
    std::vector<std::optional<DesignDraw>> results(batch);
    const std::size_t first = out.attempts;
    parallel_for(batch, threads, [&](std::size_t i) {
      Engine rng = make_stream(seed, {stream_tag::kDraw, first + i});
      results[i] = sampler.draw(rng);
    });
    out.attempts += batch;
    for (auto& r : results) {
      if (count == 1 || seen.insert(r->allocation).second) {
        out.draws.push_back(std::move(*r));
      } else if (rejected.size() < count) {
        rejected.push_back(std::move(*r));
      }
    }
  }
  if (out.draws.size() < count) {
    out.duplicates_permitted = true;
    for (auto& r : rejected) {
      if (out.draws.size() == count) break;
      r.provenance.duplicate = true;
      out.draws.push_back(std::move(r));
    }
    // Spaces smaller than count: recycle accepted draws in order.
    for (std::size_t i = 0; out.draws.size() < count; ++i) {
      DesignDraw copy = out.draws[i];
      copy.provenance.duplicate = true;
      out.draws.push_back(std::move(copy));
    }
  }
  return out;
}

DesignSample sample_design(const DesignSpec& spec, const CovariateMatrix& x, std::size_t count,
                           unsigned threads) {
  const DesignSampler sampler(x, spec);
  return sample_design(sampler, count, spec.seed, threads);
}

}  // namespace expdesign
