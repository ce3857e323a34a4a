#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "expdesign/core.hpp"
#include "expdesign/imbalance.hpp"
#include "expdesign/rng.hpp"

namespace expdesign {

enum class DesignKind { BCRD, R, G, M, MR, MG };

inline constexpr DesignKind kAllDesigns[] = {DesignKind::BCRD, DesignKind::R, DesignKind::G,
                                             DesignKind::M,    DesignKind::MR, DesignKind::MG};

std::string_view to_string(DesignKind kind);
DesignKind parse_design_kind(std::string_view name);  // case-insensitive
bool uses_matching(DesignKind kind);

/// Keep the first candidate with imbalance <= a.
struct Threshold {
  double a;
};
/// Calibrate a as the empirical q-quantile of a pilot pool, then threshold.
struct Quantile {
  double q;
};
/// Keep the least imbalanced of n candidates.
struct BestOf {
  std::size_t n;
};
using RerandMode = std::variant<Threshold, Quantile, BestOf>;

std::string describe(const RerandMode& mode);

struct DesignSpec {
  DesignKind kind = DesignKind::BCRD;
  // Screening rule for R and MR; the default retains the best 1%.
  RerandMode rerand = Quantile{0.01};
  // Candidate budget per accepted R/MR draw.
  std::size_t max_candidate_draws = 100000;
  // Candidates used to calibrate a quantile threshold.
  std::size_t pilot_pool = 10000;
  // Greedy search stops once the best available reduction is <= this.
  double greedy_tolerance = 0.0;
  // sample_design gives up on uniqueness after this many attempts per draw.
  std::size_t unique_attempt_factor = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Provenance {
  std::size_t switches = 0;
  std::size_t candidates_screened = 0;
  // Set when sample_design could not find enough unique allocations.
  bool duplicate = false;
  // Imbalance before the first switch and after each accepted switch.
  std::vector<double> imbalance_path;
};

struct DesignDraw {
  Allocation allocation;
  double imbalance = 0.0;  // Mahalanobis imbalance of `allocation`
  Provenance provenance;
  std::optional<PairAssignment> pair_assignment;  // matched designs only
};

Allocation sample_bcrd(Index subjects, Engine& rng);

/// n independent fair-coin pair orientations.
PairAssignment sample_pair_orientations(std::size_t pairs, Engine& rng);

/// Greedy pair switching: repeatedly apply the treated/control swap with the
/// largest imbalance reduction until no swap improves by more than `tolerance`.
DesignDraw greedy_pair_switch(const CovariateMatrix& x, const CovarianceContext& ctx,
                              const Allocation& w0, double tolerance = 0.0);

DesignDraw sample_g(const CovariateMatrix& x, const CovarianceContext& ctx, Engine& rng,
                    double tolerance = 0.0);

DesignDraw sample_m(const CovariateMatrix& x, const CovarianceContext& ctx,
                    const MatchStructure& m, Engine& rng);

/// Empirical q-quantile (order statistic ceil(q N)) of candidate imbalances.
double quantile_threshold(std::vector<double> pool, double q);

/// R design. A quantile rule is calibrated from a pilot pool drawn on the
/// stream (spec.seed, pilot) on every call; DesignSampler caches it instead.
DesignDraw sample_rerandomization(const CovariateMatrix& x, const CovarianceContext& ctx,
                                  const DesignSpec& spec, Engine& rng);

DesignDraw sample_mr(const CovariateMatrix& x, const CovarianceContext& ctx,
                     const MatchStructure& m, const DesignSpec& spec, Engine& rng);

struct PairSwitchResult {
  PairAssignment z;
  std::size_t switches = 0;
  std::vector<double> imbalance_path;
};

/// Greedy pair-of-pairs switching on within-pair differences: flips one
/// T/C-oriented and one C/T-oriented pair together, which keeps every match.
PairSwitchResult greedy_pair_of_pairs(const PairDiffMatrix& d, const CovarianceContext& ctx,
                                      const PairAssignment& z0, double tolerance = 0.0);

DesignDraw sample_mg(const CovariateMatrix& x, const CovarianceContext& ctx,
                     const MatchStructure& m, Engine& rng, double tolerance = 0.0);

/// Everything one design needs for repeated draws on fixed covariates: the
/// covariance context, the optimal match (matched designs) and the calibrated
/// rerandomisation threshold. Immutable after construction.
class DesignSampler {
 public:
  DesignSampler(const CovariateMatrix& x, const DesignSpec& spec,
                const CovarianceOptions& options = {});
  // Reuse an existing context and (for matched designs) match structure.
  DesignSampler(const CovariateMatrix& x, const DesignSpec& spec, CovarianceContext ctx,
                std::optional<MatchStructure> match);

  DesignDraw draw(Engine& rng) const;

  const DesignSpec& spec() const noexcept { return spec_; }
  const CovariateMatrix& covariates() const noexcept { return x_; }
  const CovarianceContext& context() const noexcept { return ctx_; }
  const std::optional<MatchStructure>& match() const noexcept { return match_; }
  // Acceptance threshold for R/MR (infinite when not thresholding).
  double threshold() const noexcept { return threshold_; }

 private:
  void prepare();
  double screened_imbalance(std::span<const Sign> signs, bool pairs) const;
  DesignDraw finish(std::vector<Sign> signs, Provenance provenance, bool pairs) const;
  DesignDraw draw_rerandomized(Engine& rng, bool pairs) const;
  std::vector<Sign> draw_base(Engine& rng, bool pairs) const;

  CovariateMatrix x_;
  DesignSpec spec_;
  CovarianceContext ctx_;
  std::optional<MatchStructure> match_;
  Eigen::MatrixXd whitened_rows_;   // subjects x p
  Eigen::MatrixXd whitened_diffs_;  // pairs x p
  double threshold_ = 0.0;
};

struct DesignSample {
  std::vector<DesignDraw> draws;
  std::size_t attempts = 0;
  bool duplicates_permitted = false;
};

/// `count` draws, unique when possible. Attempt k uses the stream
/// (seed, draw, k); attempts are generated in parallel and accepted in index
/// order, so the result is independent of `threads`.
DesignSample sample_design(const DesignSampler& sampler, std::size_t count, std::uint64_t seed,
                           unsigned threads = 1);

DesignSample sample_design(const DesignSpec& spec, const CovariateMatrix& x, std::size_t count,
                           unsigned threads = 1);

}  // namespace expdesign
