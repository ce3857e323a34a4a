#pragma once

#include <vector>

#include <Eigen/Dense>

#include "expdesign/core.hpp"
#include "expdesign/imbalance.hpp"

namespace expdesign {

/// Symmetric, nonnegative subject-by-subject distances with a zero diagonal.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(Eigen::MatrixXd d);

  const Eigen::MatrixXd& values() const noexcept { return d_; }
  Index size() const noexcept { return d_.rows(); }
  double operator()(Index r, Index s) const { return d_(r, s); }

 private:
  Eigen::MatrixXd d_;
};

/// Squared Mahalanobis distance (x_r - x_s)' S^-1 (x_r - x_s) for every pair.
DistanceMatrix mahalanobis_distance_matrix(const CovariateMatrix& x, const CovarianceContext& ctx);

/// Minimum total-distance perfect matching (exact; weighted blossom algorithm).
MatchStructure optimal_match(const DistanceMatrix& d);

/// Exhaustive search over all perfect matchings. Limited to 12 subjects.
MatchStructure brute_force_match(const DistanceMatrix& d);

double total_intramatch_distance(const MatchStructure& m, const DistanceMatrix& d);

/// Optimal match on squared Mahalanobis distance. A single covariate is
/// matched by pairing neighbours in sorted order, which is the exact optimum
/// for a convex cost on the line; otherwise the blossom solver runs.
MatchStructure match_subjects(const CovariateMatrix& x, const CovarianceContext& ctx);

namespace blossom {

struct Edge {
  int u;
  int v;
  double weight;
};

/// Maximum-weight matching on a general graph (Edmonds / Galil, O(V^3)).
/// With max_cardinality set, the result maximises weight among the matchings
/// of maximum cardinality. Returns mate[v], or -1 for unmatched vertices.
std::vector<int> max_weight_matching(int vertices, const std::vector<Edge>& edges,
                                     bool max_cardinality);

}  // namespace blossom

}  // namespace expdesign
