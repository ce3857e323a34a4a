#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "expdesign/core.hpp"
#include "expdesign/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, expdesign::Engine& rng,
                                      double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Eigen::VectorXd normal_vector(Eigen::Index n, expdesign::Engine& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

inline expdesign::MatchStructure random_match(Eigen::Index subjects, expdesign::Engine& rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(subjects));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<expdesign::MatchStructure::Pair> pairs;
  for (std::size_t i = 0; i < perm.size(); i += 2) pairs.emplace_back(perm[i], perm[i + 1]);
  return expdesign::MatchStructure(std::move(pairs), subjects);
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

// All balanced +-1 vectors of the given even length, in lexicographic order.
inline std::vector<std::vector<expdesign::Sign>> all_balanced(int subjects) {
  std::vector<std::vector<expdesign::Sign>> out;
  for (unsigned mask = 0; mask < (1u << subjects); ++mask) {
    if (__builtin_popcount(mask) != subjects / 2) continue;
    std::vector<expdesign::Sign> w(static_cast<std::size_t>(subjects));
    for (int i = 0; i < subjects; ++i) w[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1 : -1;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace testutil
