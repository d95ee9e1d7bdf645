#pragma once

// Reference computations for the tests, written independently of the library
// (no Eigen decompositions): cyclic Jacobi eigenvalues, subset enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> jacobi_eigenvalues(Rows a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) (i == j ? diag : off) += a[i][j] * a[i][j];
    if (off <= 1e-30 * (diag + 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline std::vector<double> column_mean(const Rows& x) {
  std::vector<double> mu(x.front().size(), 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < r.size(); ++j) mu[j] += r[j];
  for (double& v : mu) v /= static_cast<double>(x.size());
  return mu;
}

/// Biased covariance of the rows.
inline Rows covariance(const Rows& x) {
  const auto mu = column_mean(x);
  const std::size_t d = mu.size();
  Rows c(d, std::vector<double>(d, 0.0));
  for (const auto& r : x)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mu[i]) * (r[j] - mu[j]);
  for (auto& row : c)
    for (double& v : row) v /= static_cast<double>(x.size());
  return c;
}

/// sqrt of the top eigenvalue of the covariance.
inline double sigma(const Rows& x) {
  if (x.size() < 2) return 0.0;
  return std::sqrt(std::max(jacobi_eigenvalues(covariance(x)).back(), 0.0));
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

/// Calls fn(subset) for each size-m subset of {0..n-1} in lexicographic order.
inline void for_each_subset(std::size_t n, std::size_t m, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> pick(m);
  for (std::size_t i = 0; i < m; ++i) pick[i] = i;
  for (;;) {
    fn(pick);
    std::size_t i = m;
    while (i > 0 && pick[i - 1] == n - m + i - 1) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < m; ++j) pick[j] = pick[j - 1] + 1;
  }
}

/// Minimum over centers c in the subset and subsets of size m containing c
/// of the summed squared distance to c, by full enumeration.
inline double outlier_one_means_bruteforce(const Rows& x, std::size_t m) {
  double best = INFINITY;
  for_each_subset(x.size(), m, [&](const std::vector<std::size_t>& s) {
    for (std::size_t c : s) {
      double cost = 0.0;
      for (std::size_t i : s) cost += sq_dist(x[i], x[c]);
      best = std::min(best, cost);
    }
  });
  return best;
}

inline Rows random_rows(std::mt19937_64& g, std::size_t n, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Rows x(n, std::vector<double>(d));
  for (auto& r : x)
    for (double& v : r) v = nd(g);
  return x;
}

}  // namespace oracle
