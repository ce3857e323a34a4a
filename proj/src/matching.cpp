#include "expdesign/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "expdesign/errors.hpp"

namespace expdesign {

DistanceMatrix::DistanceMatrix(Eigen::MatrixXd d) : d_(std::move(d)) {
  if (d_.rows() != d_.cols()) throw DimensionError("distance matrix must be square");
  for (Index r = 0; r < d_.rows(); ++r) {
    if (d_(r, r) != 0.0) throw UsageError("distance matrix diagonal must be zero");
    for (Index s = r + 1; s < d_.cols(); ++s) {
      if (!std::isfinite(d_(r, s)) || d_(r, s) < 0.0) {
        throw DomainError("distances must be finite and nonnegative");
      }
      if (d_(r, s) != d_(s, r)) throw UsageError("distance matrix must be symmetric");
    }
  }
}

DistanceMatrix mahalanobis_distance_matrix(const CovariateMatrix& x, const CovarianceContext& ctx) {
  const Eigen::MatrixXd z = ctx.whiten(x.values());
  const Index m = z.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (Index r = 0; r < m; ++r) {
    for (Index s = r + 1; s < m; ++s) {
      const double v = (z.row(r) - z.row(s)).squaredNorm();
      d(r, s) = v;
      d(s, r) = v;
    }
  }
  return DistanceMatrix(std::move(d));
}

namespace {

void require_even(Index subjects) {
  if (subjects % 2 != 0) {
    throw UsageError("perfect matching needs an even subject count (got " +
                     std::to_string(subjects) + ")");
  }
}

}  // namespace

MatchStructure optimal_match(const DistanceMatrix& d) {
  const Index m = d.size();
  require_even(m);
  if (m < 2) throw UsageError("matching needs at least two subjects");
  const double dmax = d.values().maxCoeff();
  // Maximising (dmax - d) over maximum-cardinality (perfect) matchings
  // minimises the total distance.
  std::vector<blossom::Edge> edges;
  edges.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Index r = 0; r < m; ++r) {
    for (Index s = r + 1; s < m; ++s) {
      edges.push_back({static_cast<int>(r), static_cast<int>(s), dmax - d(r, s)});
    }
  }
  const std::vector<int> mate = blossom::max_weight_matching(static_cast<int>(m), edges, true);
  std::vector<MatchStructure::Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(m / 2));
  for (Index r = 0; r < m; ++r) {
    const int s = mate[static_cast<std::size_t>(r)];
    if (s < 0) throw Error("blossom solver returned an imperfect matching");
    if (r < s) pairs.emplace_back(r, s);
  }
  return MatchStructure(std::move(pairs), m);
}

namespace {

struct BruteForce {
  const DistanceMatrix& d;
  std::vector<bool> used;
  std::vector<MatchStructure::Pair> current;
  std::vector<MatchStructure::Pair> best;
  double best_total = std::numeric_limits<double>::infinity();

  void recurse(double total) {
    Index first = 0;
    while (first < d.size() && used[static_cast<std::size_t>(first)]) ++first;
    if (first == d.size()) {
      if (total < best_total) {
        best_total = total;
        best = current;
      }
      return;
    }
    used[static_cast<std::size_t>(first)] = true;
    for (Index s = first + 1; s < d.size(); ++s) {
      if (used[static_cast<std::size_t>(s)]) continue;
      used[static_cast<std::size_t>(s)] = true;
      current.emplace_back(first, s);
      recurse(total + d(first, s));
      current.pop_back();
      used[static_cast<std::size_t>(s)] = false;
    }
    used[static_cast<std::size_t>(first)] = false;
  }
};

}  // namespace

MatchStructure brute_force_match(const DistanceMatrix& d) {
  const Index m = d.size();
  require_even(m);
  if (m > 12) {
    throw UsageError("brute-force matching is limited to 12 subjects (got " +
                     std::to_string(m) + ")");
  }
  if (m < 2) throw UsageError("matching needs at least two subjects");
  BruteForce search{d, std::vector<bool>(static_cast<std::size_t>(m), false), {}, {}};
  search.recurse(0.0);
  return MatchStructure(std::move(search.best), m);
}

double total_intramatch_distance(const MatchStructure& m, const DistanceMatrix& d) {
  if (m.subjects() != d.size()) {
    throw DimensionError("match structure covers " + std::to_string(m.subjects()) +
                         " subjects but distance matrix is " + std::to_string(d.size()));
  }
  double total = 0.0;
  for (const auto& [r, s] : m.pairs()) total += d(r, s);
  return total;
}

MatchStructure match_subjects(const CovariateMatrix& x, const CovarianceContext& ctx) {
  if (x.covariates() == 1) {
    const auto& col = x.values().col(0);
    std::vector<Index> order(static_cast<std::size_t>(x.subjects()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return col(a) < col(b); });
    std::vector<MatchStructure::Pair> pairs;
    pairs.reserve(order.size() / 2);
    for (std::size_t i = 0; i + 1 < order.size(); i += 2) pairs.emplace_back(order[i], order[i + 1]);
    return MatchStructure(std::move(pairs), x.subjects());
  }
  return optimal_match(mahalanobis_distance_matrix(x, ctx));
}

}  // namespace expdesign
