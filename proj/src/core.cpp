#include "expdesign/core.hpp"

#include <cmath>
#include <string>

#include "expdesign/errors.hpp"

namespace expdesign {

namespace {

void check_signs(std::span<const Sign> signs, const char* what) {
  for (Sign s : signs) {
    if (s != 1 && s != -1) {
      throw UsageError(std::string(what) + " entries must be +1 or -1");
    }
  }
}

}  // namespace

CovariateMatrix::CovariateMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  const Index rows = values_.rows();
  if (rows < 4 || rows % 2 != 0) {
    throw UsageError("covariate matrix needs an even number of rows, at least 4 (got " +
                     std::to_string(rows) + ")");
  }
  if (values_.cols() < 1) {
    throw UsageError("covariate matrix needs at least one column");
  }
  if (!values_.allFinite()) {
    throw DomainError("covariate matrix contains non-finite entries");
  }
  for (Index j = 0; j < values_.cols(); ++j) {
    const auto col = values_.col(j);
    if ((col.array() == col(0)).all()) {
      throw UsageError("covariate column " + std::to_string(j) + " is constant");
    }
  }
}

Allocation::Allocation(std::vector<Sign> signs) : signs_(std::move(signs)) {
  check_signs(signs_, "allocation");
  long sum = 0;
  for (Sign s : signs_) sum += s;
  if (sum != 0) {
    throw UsageError("allocation is not balanced (sum " + std::to_string(sum) + ")");
  }
}

Eigen::VectorXd Allocation::as_vector() const {
  Eigen::VectorXd v(static_cast<Index>(signs_.size()));
  for (std::size_t i = 0; i < signs_.size(); ++i) v(static_cast<Index>(i)) = signs_[i];
  return v;
}

Allocation Allocation::negated() const {
  std::vector<Sign> out(signs_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Sign>(-signs_[i]);
  return Allocation(std::move(out));
}

MatchStructure::MatchStructure(std::vector<Pair> pairs, Index subjects)
    : pairs_(std::move(pairs)), subjects_(subjects) {
  if (subjects_ != 2 * static_cast<Index>(pairs_.size())) {
    throw DimensionError("match structure with " + std::to_string(pairs_.size()) +
                         " pairs cannot cover " + std::to_string(subjects_) + " subjects");
  }
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  pair_of_.assign(static_cast<std::size_t>(subjects_), kUnset);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    auto& [r, s] = pairs_[i];
    if (r == s) throw UsageError("pair joins subject " + std::to_string(r) + " to itself");
    if (r > s) std::swap(r, s);
    if (r < 0 || s >= subjects_) {
      throw DimensionError("pair index out of range: {" + std::to_string(r) + "," +
                           std::to_string(s) + "}");
    }
    for (Index k : {r, s}) {
      auto& slot = pair_of_[static_cast<std::size_t>(k)];
      if (slot != kUnset) {
        throw UsageError("subject " + std::to_string(k) + " appears in more than one pair");
      }
      slot = i;
    }
  }
}

PairAssignment::PairAssignment(std::vector<Sign> signs) : signs_(std::move(signs)) {
  check_signs(signs_, "pair assignment");
}

PairAssignment PairAssignment::negated() const {
  std::vector<Sign> out(signs_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Sign>(-signs_[i]);
  return PairAssignment(std::move(out));
}

PairDiffMatrix::PairDiffMatrix(Eigen::MatrixXd diffs) : diffs_(std::move(diffs)) {
  if (!diffs_.allFinite()) throw DomainError("pair differences contain non-finite entries");
}

Responses::Responses(Eigen::VectorXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw DomainError("responses contain non-finite entries");
}

Allocation expand_pair_assignment(const PairAssignment& z, const MatchStructure& m) {
  if (z.size() != m.size()) {
    throw DimensionError("pair assignment has " + std::to_string(z.size()) +
                         " entries but the match structure has " + std::to_string(m.size()) +
                         " pairs");
  }
  std::vector<Sign> w(static_cast<std::size_t>(m.subjects()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto [r, s] = m[i];
    w[static_cast<std::size_t>(r)] = z[i];
    w[static_cast<std::size_t>(s)] = static_cast<Sign>(-z[i]);
  }
  return Allocation(std::move(w));
}

PairDiffMatrix pair_diffs(const CovariateMatrix& x, const MatchStructure& m) {
  if (m.subjects() != x.subjects()) {
    throw DimensionError("match structure covers " + std::to_string(m.subjects()) +
                         " subjects, covariates have " + std::to_string(x.subjects()));
  }
  Eigen::MatrixXd d(static_cast<Index>(m.size()), x.covariates());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto [r, s] = m[i];
    d.row(static_cast<Index>(i)) = x.row(r) - x.row(s);
  }
  return PairDiffMatrix(std::move(d));
}

double diff_in_means_estimator(const Allocation& w, const Responses& y) {
  if (static_cast<Index>(w.size()) != y.size()) {
    throw DimensionError("allocation length " + std::to_string(w.size()) +
                         " != responses length " + std::to_string(y.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * y.values()(static_cast<Index>(i));
  return acc / static_cast<double>(w.size());
}

double matched_pair_estimator(const PairAssignment& z, const MatchStructure& m,
                              const Responses& y) {
  if (z.size() != m.size() || m.subjects() != y.size()) {
    throw DimensionError("pair assignment, match structure and responses disagree in size");
  }
  const auto& v = y.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto [r, s] = m[i];
    acc += 0.5 * z[i] * (v(r) - v(s));
  }
  return acc / static_cast<double>(m.size());
}

}  // namespace expdesign
