#pragma once

// Point sets, centered spectral deviation, SVD subspaces and projections.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kfinder/error.hpp"

namespace kfinder {

using Index = std::size_t;
using IndexSet = std::vector<Index>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline IndexSet iota_set(Index n) {
  IndexSet s(n);
  std::iota(s.begin(), s.end(), Index{0});
  return s;
}

/// Immutable n x d array of finite coordinates. Copies share storage.
class PointSet {
 public:
  PointSet() : points_(std::make_shared<const Matrix>(Matrix(0, 0))) {}

  explicit PointSet(Matrix points) {
    if (points.rows() < 1 || points.cols() < 1)
      throw Error("empty-point-set", "need n >= 1 and d >= 1");
    if (!points.allFinite()) throw Error("non-finite", "coordinates must be finite");
    points_ = std::make_shared<const Matrix>(std::move(points));
  }

  Index size() const { return static_cast<Index>(points_->rows()); }
  Index dim() const { return static_cast<Index>(points_->cols()); }
  bool empty() const { return points_->rows() == 0; }
  const Matrix& matrix() const { return *points_; }
  auto point(Index i) const { return points_->row(static_cast<Eigen::Index>(i)); }
  IndexSet all() const { return iota_set(size()); }

 private:
  std::shared_ptr<const Matrix> points_;
};

namespace detail {

inline void check_subset(const PointSet& X, std::span<const Index> subset) {
  if (subset.empty()) throw Error("empty-subset");
  for (Index i : subset)
    if (i >= X.size()) throw Error("bad-index", std::to_string(i));
}

}  // namespace detail

/// Rows of X selected by `subset`, in subset order.
inline Matrix gather(const PointSet& X, std::span<const Index> subset) {
  Matrix out(static_cast<Eigen::Index>(subset.size()), static_cast<Eigen::Index>(X.dim()));
  for (std::size_t r = 0; r < subset.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = X.point(subset[r]);
  return out;
}

inline Vector mean(const PointSet& X, std::span<const Index> subset) {
  detail::check_subset(X, subset);
  Vector mu = Vector::Zero(static_cast<Eigen::Index>(X.dim()));
  for (Index i : subset) mu += X.point(i).transpose();
  return mu / static_cast<double>(subset.size());
}

inline Vector mean(const PointSet& X) { return mean(X, X.all()); }

/// Top singular triple of a dense matrix. `value` is the spectral norm, `right`
/// the unit right singular vector (length cols), `left` the unit left singular
/// vector (length rows). Both vectors are zero when the matrix is zero.
struct SingularTriple {
  double value = 0.0;
  Vector right;
  Vector left;
  /// Second singular value; the gap value - second tells whether the top pair is simple.
  double second = 0.0;
};

/// Largest singular triple, computed from the symmetric eigenproblem of the
/// smaller Gram matrix (A^T A or A A^T).
inline SingularTriple top_singular(const Matrix& A) {
  SingularTriple out;
  out.right = Vector::Zero(A.cols());
  out.left = Vector::Zero(A.rows());
  if (A.rows() == 0 || A.cols() == 0) return out;
  if (A.cols() <= A.rows()) {
    Matrix G = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const auto n = G.rows();
    double lam = std::max(es.eigenvalues()(n - 1), 0.0);
    out.value = std::sqrt(lam);
    out.second = n > 1 ? std::sqrt(std::max(es.eigenvalues()(n - 2), 0.0)) : 0.0;
    if (out.value > 0.0) {
      out.right = es.eigenvectors().col(n - 1);
      out.left = A * out.right / out.value;
    }
  } else {
    Matrix G = A * A.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const auto n = G.rows();
    double lam = std::max(es.eigenvalues()(n - 1), 0.0);
    out.value = std::sqrt(lam);
    out.second = n > 1 ? std::sqrt(std::max(es.eigenvalues()(n - 2), 0.0)) : 0.0;
    if (out.value > 0.0) {
      out.left = es.eigenvectors().col(n - 1);
      out.right = A.transpose() * out.left / out.value;
    }
  }
  return out;
}

inline double spectral_norm(const Matrix& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  if (A.cols() <= A.rows()) {
    Matrix G = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(es.eigenvalues()(G.rows() - 1), 0.0));
  }
  Matrix G = A * A.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(es.eigenvalues()(G.rows() - 1), 0.0));
}

/// Rows x_i - mu(subset).
inline Matrix centered(const PointSet& X, std::span<const Index> subset) {
  Matrix A = gather(X, subset);
  Vector mu = mean(X, subset);
  A.rowwise() -= mu.transpose();
  return A;
}

/// sigma(S) = ||A|| / sqrt(|S|) with A the mean-centered rows of S, i.e. the
/// largest directional standard deviation (divide-by-|S| convention).
inline double sigma(const PointSet& X, std::span<const Index> subset) {
  detail::check_subset(X, subset);
  if (subset.size() == 1) return 0.0;
  return spectral_norm(centered(X, subset)) / std::sqrt(static_cast<double>(subset.size()));
}

inline double sigma(const PointSet& X) { return sigma(X, X.all()); }

/// Root-mean-square of v . (x - mu) over the subset. v must be a unit vector.
inline double directional_sigma(const PointSet& X, std::span<const Index> subset, const Vector& v) {
  detail::check_subset(X, subset);
  if (v.size() != static_cast<Eigen::Index>(X.dim())) throw Error("dim-mismatch");
  if (std::abs(v.norm() - 1.0) > 1e-9) throw Error("not-unit-vector");
  Vector mu = mean(X, subset);
  double acc = 0.0;
  for (Index i : subset) {
    double t = (X.point(i).transpose() - mu).dot(v);
    acc += t * t;
  }
  return std::sqrt(acc / static_cast<double>(subset.size()));
}

struct ClusterStats {
  Vector mean;
  double sigma = 0.0;
  Index size = 0;
};

inline ClusterStats cluster_stats(const PointSet& X, std::span<const Index> subset) {
  return ClusterStats{mean(X, subset), sigma(X, subset), subset.size()};
}

/// Orthonormal basis (rows) of a d'-dimensional subspace of R^d.
class Subspace {
 public:
  Subspace() = default;
  explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}

  Index rank() const { return static_cast<Index>(basis_.rows()); }
  Index ambient_dim() const { return static_cast<Index>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  /// Coordinates of each point in the basis: n x d'.
  Matrix coordinates(const PointSet& X) const {
    if (X.dim() != ambient_dim()) throw Error("dim-mismatch");
    return X.matrix() * basis_.transpose();
  }

  /// Map subspace coordinates back into R^d.
  Vector lift(const Vector& coords) const { return basis_.transpose() * coords; }

 private:
  Matrix basis_;
};

/// Span of the top `rank` right singular vectors of the raw (uncentered)
/// point matrix.
inline Subspace svd_subspace(const PointSet& X, Index rank) {
  if (rank < 1 || rank > std::min(X.size(), X.dim()))
    throw Error("bad-rank", std::to_string(rank));
  const Matrix& A = X.matrix();
  Matrix G = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  const auto d = G.rows();
  Matrix basis(static_cast<Eigen::Index>(rank), d);
  for (Index r = 0; r < rank; ++r)
    basis.row(static_cast<Eigen::Index>(r)) =
        es.eigenvectors().col(d - 1 - static_cast<Eigen::Index>(r)).transpose();
  return Subspace(std::move(basis));
}

/// Orthogonal projection of every point onto S, expressed in ambient coordinates.
inline PointSet project(const Subspace& S, const PointSet& X) {
  if (X.dim() != S.ambient_dim()) throw Error("dim-mismatch");
  return PointSet(S.coordinates(X) * S.basis());
}

/// Point set made of the subspace coordinates of X (n x d'). Distances, means
/// and sigma agree with those of project(S, X).
inline PointSet project_coordinates(const Subspace& S, const PointSet& X) {
  return PointSet(S.coordinates(X));
}

}  // namespace kfinder
