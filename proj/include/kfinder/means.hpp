#pragma once

// Exact solvers for Centered 1-means (center restricted to the input points)
// and its outlier variant (best size-m subset).

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kfinder/linalg.hpp"

namespace kfinder {

struct CenteredOneMeansResult {
  Index center_index = 0;
  double cost = 0.0;
  /// Sorted ascending; always contains center_index.
  IndexSet selected;
};

namespace detail {

inline double squared_distance(const PointSet& X, Index a, Index b) {
  return (X.point(a) - X.point(b)).squaredNorm();
}

/// Candidate ordering around a center: the center itself first (dist -1),
/// then by squared distance, ties to the smaller point index.
struct Ranked {
  double dist;
  Index index;
};

inline bool ranked_less(const Ranked& a, const Ranked& b) {
  return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
}

/// Shared core: `dist(a, b)` returns the squared distance between points a, b.
template <class Dist>
CenteredOneMeansResult outlier_core(std::span<const Index> subset, Index m, const Dist& dist) {
  if (subset.empty()) throw Error("empty-subset");
  if (m < 1) throw Error("bad-m", "m must be positive");
  if (m > subset.size()) throw Error("m-too-large");

  IndexSet candidates(subset.begin(), subset.end());
  std::sort(candidates.begin(), candidates.end());

  auto rank = [&](Index c, std::vector<Ranked>& r) {
    r.clear();
    for (Index i : candidates) r.push_back({i == c ? -1.0 : dist(c, i), i});
    if (m < r.size())
      std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(m - 1), r.end(),
                       ranked_less);
  };

  double best = std::numeric_limits<double>::infinity();
  Index best_center = candidates.front();
  std::vector<Ranked> r;
  r.reserve(candidates.size());
  for (Index c : candidates) {
    rank(c, r);
    double cost = 0.0;
    for (Index t = 0; t < m; ++t) cost += std::max(r[t].dist, 0.0);
    if (cost < best) {
      best = cost;
      best_center = c;
    }
  }

  rank(best_center, r);
  CenteredOneMeansResult out;
  out.center_index = best_center;
  out.selected.reserve(m);
  for (Index t = 0; t < m; ++t) out.selected.push_back(r[t].index);
  std::sort(out.selected.begin(), out.selected.end());
  for (Index i : out.selected) out.cost += i == best_center ? 0.0 : dist(best_center, i);
  return out;
}

}  // namespace detail

inline CenteredOneMeansResult outlier_centered_one_means(const PointSet& X,
                                                         std::span<const Index> subset, Index m) {
  detail::check_subset(X, subset);
  return detail::outlier_core(subset, m, [&](Index a, Index b) {
    return detail::squared_distance(X, a, b);
  });
}

/// Same as above with a precomputed n x n matrix of squared distances.
inline CenteredOneMeansResult outlier_centered_one_means(const Matrix& sq_dist,
                                                         std::span<const Index> subset, Index m) {
  return detail::outlier_core(subset, m, [&](Index a, Index b) {
    return sq_dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  });
}

/// All pairwise squared distances of X.
inline Matrix squared_distance_matrix(const PointSet& X) {
  const auto n = static_cast<Eigen::Index>(X.size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> P = X.matrix();
  Matrix D(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    D(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = (P.row(i) - P.row(j)).squaredNorm();
  }
  return D;
}

inline CenteredOneMeansResult centered_one_means(const PointSet& X, std::span<const Index> subset) {
  detail::check_subset(X, subset);
  return outlier_centered_one_means(X, subset, subset.size());
}

/// Checks sigma^2 <= opt/|X| <= 4 d sigma^2 (+1e-9). `effective_dim` overrides
/// d, e.g. with the rank of the subspace a projected set lives in.
inline bool sigma_cost_bracket_check(const PointSet& X, std::span<const Index> subset,
                                     std::optional<Index> effective_dim = std::nullopt) {
  detail::check_subset(X, subset);
  const double s = sigma(X, subset);
  const double avg = centered_one_means(X, subset).cost / static_cast<double>(subset.size());
  const double d = static_cast<double>(effective_dim.value_or(X.dim()));
  const double tol = 1e-9 * std::max(1.0, avg);
  return s * s <= avg + tol && avg <= 4.0 * d * s * s + tol;
}

}  // namespace kfinder
