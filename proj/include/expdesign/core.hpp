#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace expdesign {

using Sign = std::int8_t;
using Index = Eigen::Index;

/// Pre-treatment covariates: one row per subject, one column per covariate.
///
/// Rows must be even in number (2n subjects forming n pairs) and at least 4.
/// Entries must be finite and no column may be constant.
class CovariateMatrix {
 public:
  explicit CovariateMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Index subjects() const noexcept { return values_.rows(); }
  Index pairs() const noexcept { return values_.rows() / 2; }
  Index covariates() const noexcept { return values_.cols(); }
  auto row(Index i) const { return values_.row(i); }

 private:
  Eigen::MatrixXd values_;
};

/// A single treatment/control assignment: +1 treated, -1 control, zero sum.
class Allocation {
 public:
  Allocation() = default;
  explicit Allocation(std::vector<Sign> signs);

  std::size_t size() const noexcept { return signs_.size(); }
  Sign operator[](std::size_t i) const { return signs_[i]; }
  std::span<const Sign> signs() const noexcept { return signs_; }

  Eigen::VectorXd as_vector() const;
  Allocation negated() const;

  friend bool operator==(const Allocation&, const Allocation&) = default;
  friend auto operator<=>(const Allocation&, const Allocation&) = default;

 private:
  std::vector<Sign> signs_;
};

/// Partition of the subjects 0..2n-1 into n unordered pairs.
///
/// Each stored pair is normalised so that first < second. Pair order is
/// preserved from construction and defines the indexing of PairAssignment and
/// PairDiffMatrix rows.
class MatchStructure {
 public:
  using Pair = std::pair<Index, Index>;

  MatchStructure() = default;
  MatchStructure(std::vector<Pair> pairs, Index subjects);

  std::span<const Pair> pairs() const noexcept { return pairs_; }
  const Pair& operator[](std::size_t i) const { return pairs_[i]; }
  std::size_t size() const noexcept { return pairs_.size(); }
  Index subjects() const noexcept { return subjects_; }

  // Index of the pair containing subject s.
  std::size_t pair_of(Index s) const { return pair_of_[static_cast<std::size_t>(s)]; }

 private:
  std::vector<Pair> pairs_;
  std::vector<std::size_t> pair_of_;
  Index subjects_ = 0;
};

/// Orientation of each matched pair; +1 treats the lower-index subject.
class PairAssignment {
 public:
  PairAssignment() = default;
  explicit PairAssignment(std::vector<Sign> signs);

  std::size_t size() const noexcept { return signs_.size(); }
  Sign operator[](std::size_t i) const { return signs_[i]; }
  std::span<const Sign> signs() const noexcept { return signs_; }
  PairAssignment negated() const;

  friend bool operator==(const PairAssignment&, const PairAssignment&) = default;

 private:
  std::vector<Sign> signs_;
};

/// Row i holds covariates of the lower-index subject of pair i minus those of
/// the higher-index subject.
class PairDiffMatrix {
 public:
  explicit PairDiffMatrix(Eigen::MatrixXd diffs);

  const Eigen::MatrixXd& values() const noexcept { return diffs_; }
  Index pairs() const noexcept { return diffs_.rows(); }
  Index covariates() const noexcept { return diffs_.cols(); }

 private:
  Eigen::MatrixXd diffs_;
};

class Responses {
 public:
  explicit Responses(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }

 private:
  Eigen::VectorXd values_;
};

Allocation expand_pair_assignment(const PairAssignment& z, const MatchStructure& m);

PairDiffMatrix pair_diffs(const CovariateMatrix& x, const MatchStructure& m);

/// w'y / 2n, i.e. half the treated-minus-control difference in means.
double diff_in_means_estimator(const Allocation& w, const Responses& y);

/// Average over pairs of z_i (y_r - y_s) / 2. Identical to the difference in
/// means of the expanded allocation.
double matched_pair_estimator(const PairAssignment& z, const MatchStructure& m,
                              const Responses& y);

}  // namespace expdesign
