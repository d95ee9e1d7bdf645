#pragma once

// Lloyd's k-means with k-means++ seeding, the elbow estimate, the exact
// bounded 3-cover gadget, and the 1-means versus sigma contrast demo.

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "kfinder/clustering.hpp"
#include "kfinder/generators.hpp"
#include "kfinder/linalg.hpp"
#include "kfinder/parallel.hpp"
#include "kfinder/random.hpp"

namespace kfinder {

struct KMeansResult {
  std::vector<Index> assignment;  // center index per point
  Matrix centers;                 // k x d
  double cost = 0.0;
  std::vector<double> cost_trace;  // cost after every Lloyd iteration of the best run
  Index iterations = 0;

  Clustering clusters() const {
    Clustering out(static_cast<std::size_t>(centers.rows()));
    for (Index i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
    std::erase_if(out, [](const IndexSet& s) { return s.empty(); });
    return out;
  }
};

inline constexpr Index lloyd_iteration_cap = 300;

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double point_cost(const RowMatrix& X, const Matrix& C, Index i, Index c) {
  return (X.row(static_cast<Eigen::Index>(i)) - C.row(static_cast<Eigen::Index>(c))).squaredNorm();
}

inline double total_cost(const RowMatrix& X, const Matrix& C, const std::vector<Index>& a) {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += point_cost(X, C, i, a[i]);
  return s;
}

/// Lloyd iterations from the given centers until the assignment is stable.
inline KMeansResult lloyd_from(const RowMatrix& X, Matrix C) {
  const auto n = X.rows();
  const auto k = C.rows();
  const Vector xnorm = X.rowwise().squaredNorm();
  KMeansResult out;
  out.assignment.assign(static_cast<std::size_t>(n), 0);
  std::vector<Index>& a = out.assignment;
  bool first = true;
  for (Index it = 0; it < lloyd_iteration_cap; ++it) {
    // Nearest center via one product; exact distances settle near ties.
    const Vector cnorm = C.rowwise().squaredNorm();
    Matrix D = -2.0 * X * C.transpose();
    D.colwise() += xnorm;
    D.rowwise() += cnorm.transpose();
    bool changed = first;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      D.row(i).minCoeff(&best);
      const auto ii = static_cast<Index>(i);
      const auto cand = static_cast<Index>(best);
      if (first) {
        a[ii] = cand;
      } else if (cand != a[ii]) {
        const double now = point_cost(X, C, ii, a[ii]);
        const double alt = point_cost(X, C, ii, cand);
        if (alt < now || (alt == now && cand < a[ii])) {
          a[ii] = cand;
          changed = true;
        }
      }
    }
    first = false;
    if (!changed && it > 0) break;

    Matrix sums = Matrix::Zero(k, X.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(a[static_cast<Index>(i)])) += X.row(i);
      ++counts[a[static_cast<Index>(i)]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<Index>(c)] > 0) {
        C.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<Index>(c)]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its center.
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < static_cast<Index>(n); ++i) {
        const double dd = point_cost(X, C, i, a[i]);
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      C.row(c) = X.row(static_cast<Eigen::Index>(far));
      a[far] = static_cast<Index>(c);
    }
    out.cost_trace.push_back(total_cost(X, C, a));
    out.iterations = it + 1;
  }
  out.centers = std::move(C);
  out.cost = total_cost(X, out.centers, a);
  return out;
}

/// k-means++ D^2 seeding.
inline Matrix plus_plus_seed(const RowMatrix& X, Index k, Stream& rng) {
  const auto n = static_cast<Index>(X.rows());
  Matrix C(static_cast<Eigen::Index>(k), X.cols());
  Index first = static_cast<Index>(rng.below(n));
  C.row(0) = X.row(static_cast<Eigen::Index>(first));
  std::vector<double> dist(n);
  for (Index i = 0; i < n; ++i) dist[i] = point_cost(X, C, i, 0);
  for (Index c = 1; c < k; ++c) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    Index pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += dist[i];
        if (u < acc && dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(n));
    }
    C.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(pick));
    for (Index i = 0; i < n; ++i) dist[i] = std::min(dist[i], point_cost(X, C, i, c));
  }
  return C;
}

}  // namespace detail

/// Best of `restarts` k-means++ seeded Lloyd runs.
inline KMeansResult lloyd_kmeans(const PointSet& X, Index k, Index restarts, std::uint64_t seed,
                                 const std::optional<Matrix>& initial_centers = std::nullopt) {
  if (k < 1) throw Error("bad-k", "k must be positive");
  if (k > X.size()) throw Error("k-too-large", std::to_string(k) + " > " + std::to_string(X.size()));
  const detail::RowMatrix R = X.matrix();
  std::optional<KMeansResult> best;
  auto keep = [&](KMeansResult r) {
    if (!best || r.cost < best->cost) best = std::move(r);
  };
  if (initial_centers) {
    if (initial_centers->rows() != static_cast<Eigen::Index>(k) ||
        initial_centers->cols() != static_cast<Eigen::Index>(X.dim()))
      throw Error("dim-mismatch", "initial centers");
    keep(detail::lloyd_from(R, *initial_centers));
  }
  std::vector<KMeansResult> runs(std::max<Index>(restarts, 1));
  parallel_for(runs.size(), [&](Index r) {
    Stream rng(seed, r);
    runs[r] = detail::lloyd_from(R, detail::plus_plus_seed(R, k, rng));
  });
  for (auto& r : runs) keep(std::move(r));
  return std::move(*best);
}

struct ElbowResult {
  std::vector<double> deltas;  // deltas[k - 1] = best k-means cost found with k centers
  std::vector<double> ratios;  // ratios[k - 2] = deltas[k - 2] / deltas[k - 1]
  Index k_star = 0;
};

/// argmax over k in [2, k_max] of Delta_{k-1} / Delta_k, ties to the smaller k.
inline ElbowResult elbow_estimate(const PointSet& X, Index k_max, Index restarts, std::uint64_t seed) {
  if (k_max < 2 || k_max + 1 > X.size()) throw Error("bad-kmax", "need 2 <= k_max <= n - 1");
  ElbowResult out;
  const detail::RowMatrix R = X.matrix();
  std::optional<Matrix> previous;
  for (Index k = 1; k <= k_max; ++k) {
    std::optional<Matrix> inherited;
    if (previous) {
      // Previous centers plus the point farthest from them.
      const Matrix& C = *previous;
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < X.size(); ++i) {
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < C.rows(); ++c)
          best_d = std::min(best_d, detail::point_cost(R, C, i, static_cast<Index>(c)));
        if (best_d > far_d) {
          far_d = best_d;
          far = i;
        }
      }
      Matrix next(C.rows() + 1, C.cols());
      next.topRows(C.rows()) = C;
      next.row(C.rows()) = R.row(static_cast<Eigen::Index>(far));
      inherited = std::move(next);
    }
    KMeansResult r = lloyd_kmeans(X, k, restarts, derive_seed(seed, k), inherited);
    double cost = r.cost;
    if (!out.deltas.empty()) cost = std::min(cost, out.deltas.back());
    out.deltas.push_back(cost);
    previous = r.centers;
  }
  const double zero = 1e-12 * out.deltas.front();
  double best_ratio = -1.0;
  for (Index k = 2; k <= k_max; ++k) {
    const double prev = out.deltas[k - 2], cur = out.deltas[k - 1];
    double ratio;
    if (prev <= zero)
      ratio = 1.0;
    else if (cur <= zero)
      ratio = std::numeric_limits<double>::infinity();
    else
      ratio = prev / cur;
    out.ratios.push_back(ratio);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      out.k_star = k;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact bounded 3-cover gadget.

struct ThreeCoverInstance {
  Index universe = 0;                      // m, a multiple of 3
  std::vector<std::array<Index, 3>> sets;  // 0-based elements

  void validate() const {
    if (universe == 0 || universe % 3 != 0) throw Error("malformed-3cover", "universe size must be a positive multiple of 3");
    std::vector<Index> degree(universe, 0);
    for (const auto& s : sets) {
      if (s[0] == s[1] || s[0] == s[2] || s[1] == s[2]) throw Error("malformed-3cover", "set with repeated element");
      for (Index e : s) {
        if (e >= universe) throw Error("malformed-3cover", "element out of range");
        ++degree[e];
      }
    }
    for (Index e = 0; e < universe; ++e)
      if (degree[e] != 3) throw Error("malformed-3cover", "element " + std::to_string(e + 1) + " not in exactly 3 sets");
  }
};

/// Exact cover by backtracking: disjoint sets covering every element, or nullopt.
inline std::optional<IndexSet> find_exact_cover(const ThreeCoverInstance& inst) {
  inst.validate();
  std::vector<std::vector<Index>> containing(inst.universe);
  for (Index s = 0; s < inst.sets.size(); ++s)
    for (Index e : inst.sets[s]) containing[e].push_back(s);
  std::vector<char> covered(inst.universe, 0);
  IndexSet chosen;
  auto search = [&](auto&& self) -> bool {
    Index e = 0;
    while (e < inst.universe && covered[e]) ++e;
    if (e == inst.universe) return true;
    for (Index s : containing[e]) {
      const auto& set = inst.sets[s];
      if (covered[set[0]] || covered[set[1]] || covered[set[2]]) continue;
      for (Index x : set) covered[x] = 1;
      chosen.push_back(s);
      if (self(self)) return true;
      chosen.pop_back();
      for (Index x : set) covered[x] = 0;
    }
    return false;
  };
  if (!search(search)) return std::nullopt;
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

struct CheckNtscInstance {
  PointSet points;
  Index h = 0;
};

/// One point per set in R^m, equal to sqrt(h/3) on the set's three coordinates.
inline CheckNtscInstance build_checkntsc_instance(const ThreeCoverInstance& inst) {
  inst.validate();
  const Index h = inst.universe / 3;
  const double value = std::sqrt(static_cast<double>(h) / 3.0);
  Matrix X = Matrix::Zero(static_cast<Eigen::Index>(inst.sets.size()), static_cast<Eigen::Index>(inst.universe));
  for (Index s = 0; s < inst.sets.size(); ++s)
    for (Index e : inst.sets[s]) X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(e)) = value;
  return {PointSet(std::move(X)), h};
}

struct BruteForceDecision {
  bool decision = false;  // some |X| = h subset has sigma <= 1
  IndexSet best;
  double best_sigma = std::numeric_limits<double>::infinity();
};

inline constexpr double bruteforce_limit = 1e6;

/// Minimum of sigma over all size-h subsets.
inline BruteForceDecision check_ntsc_decision_bruteforce(const PointSet& X, Index h) {
  const Index n = X.size();
  if (h < 1 || h > n) throw Error("bad-h", std::to_string(h));
  double combos = 1.0;
  for (Index i = 0; i < h; ++i) combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (combos > bruteforce_limit) throw Error("too-large-for-bruteforce", std::to_string(combos) + " subsets");
  BruteForceDecision out;
  IndexSet pick(h);
  std::iota(pick.begin(), pick.end(), Index{0});
  for (;;) {
    const double s = sigma(X, pick);
    if (s < out.best_sigma) {
      out.best_sigma = s;
      out.best = pick;
    }
    Index i = h;
    while (i > 0 && pick[i - 1] == n - h + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (Index j = i; j < h; ++j) pick[j] = pick[j - 1] + 1;
  }
  out.decision = out.best_sigma <= 1.0 + 1e-9;
  return out;
}

namespace detail {

inline std::vector<std::array<Index, 3>> random_triples(Index m, Stream& rng) {
  IndexSet perm = iota_set(m);
  for (Index i = m; i > 1; --i) std::swap(perm[i - 1], perm[static_cast<Index>(rng.below(i))]);
  std::vector<std::array<Index, 3>> out;
  for (Index i = 0; i < m; i += 3) {
    std::array<Index, 3> t{perm[i], perm[i + 1], perm[i + 2]};
    std::sort(t.begin(), t.end());
    out.push_back(t);
  }
  return out;
}

inline bool distinct_sets(std::vector<std::array<Index, 3>> sets) {
  std::sort(sets.begin(), sets.end());
  return std::adjacent_find(sets.begin(), sets.end()) == sets.end();
}

}  // namespace detail

/// YES: union of three random partitions into triples (distinct sets when the
/// universe allows it). NO: random degree-3 configuration with no exact cover;
/// throws "no-instance-not-found" after `attempts` rejections.
inline ThreeCoverInstance generate_three_cover(Index m, bool yes, std::uint64_t seed,
                                               Index attempts = 100000) {
  if (m == 0 || m % 3 != 0) throw Error("malformed-3cover", "universe size must be a positive multiple of 3");
  Stream rng(seed);
  ThreeCoverInstance inst;
  inst.universe = m;
  if (yes) {
    for (Index t = 0; t < attempts; ++t) {
      inst.sets.clear();
      for (int p = 0; p < 3; ++p) {
        auto part = detail::random_triples(m, rng);
        inst.sets.insert(inst.sets.end(), part.begin(), part.end());
      }
      if (m <= 3 || detail::distinct_sets(inst.sets)) break;
    }
    return inst;
  }
  IndexSet stubs;
  for (Index e = 0; e < m; ++e)
    for (int c = 0; c < 3; ++c) stubs.push_back(e);
  for (Index t = 0; t < attempts; ++t) {
    for (Index i = stubs.size(); i > 1; --i) std::swap(stubs[i - 1], stubs[static_cast<Index>(rng.below(i))]);
    inst.sets.clear();
    bool ok = true;
    for (Index i = 0; i < stubs.size() && ok; i += 3) {
      std::array<Index, 3> s{stubs[i], stubs[i + 1], stubs[i + 2]};
      std::sort(s.begin(), s.end());
      ok = s[0] != s[1] && s[1] != s[2];
      inst.sets.push_back(s);
    }
    if (ok && !find_exact_cover(inst)) return inst;
  }
  throw Error("no-instance-not-found", "m = " + std::to_string(m));
}

// ---------------------------------------------------------------------------
// 1-means cost versus sigma on a two-component mixture.

struct TightnessContrast {
  Index d = 0;
  double gap = 0.0;
  double sigma_whole = 0.0;
  double sigma_component = 0.0;  // larger of the two components
  double sigma_ratio = 0.0;
  double cost_whole = 0.0;        // average 1-means cost (center at the mean)
  double cost_half = 0.0;         // mean over random half subsets
  double half_ratio = 0.0;        // cost_half / cost_whole
  double component_ratio = 0.0;   // one component's average cost / cost_whole
  bool in_regime = true;          // d >= 100
};

inline double average_one_means_cost(const PointSet& X, std::span<const Index> subset) {
  const Matrix A = centered(X, subset);
  return A.squaredNorm() / static_cast<double>(subset.size());
}

inline TightnessContrast tightness_contrast_demo(std::uint64_t seed, Index d = 200, double gap = 20.0,
                                                 Index n = 2000, Index halves = 10) {
  if (d < 1 || n < 4) throw Error("bad-argument");
  Vector a = Vector::Zero(static_cast<Eigen::Index>(d)), b = a;
  a(0) = gap / 2.0;
  b(0) = -gap / 2.0;
  const LabeledSample s = sample_gaussian_mixture(spherical_mixture({a, b}, 1.0), n, seed);
  const Clustering parts = s.clusters();

  TightnessContrast out;
  out.d = d;
  out.gap = gap;
  out.in_regime = d >= 100;
  const IndexSet all = s.points.all();
  out.sigma_whole = sigma(s.points, all);
  for (const auto& c : parts) out.sigma_component = std::max(out.sigma_component, sigma(s.points, c));
  out.sigma_ratio = out.sigma_component > 0.0 ? out.sigma_whole / out.sigma_component
                                              : std::numeric_limits<double>::infinity();
  out.cost_whole = average_one_means_cost(s.points, all);

  Stream rng(seed, n);
  IndexSet pool = all;
  double acc = 0.0;
  for (Index t = 0; t < halves; ++t) {
    for (Index i = 0; i < n / 2; ++i) std::swap(pool[i], pool[i + static_cast<Index>(rng.below(n - i))]);
    IndexSet half(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n / 2));
    acc += average_one_means_cost(s.points, half);
  }
  out.cost_half = acc / static_cast<double>(std::max<Index>(halves, 1));
  out.half_ratio = out.cost_half / out.cost_whole;
  double comp = std::numeric_limits<double>::infinity();
  for (const auto& c : parts) comp = std::min(comp, average_one_means_cost(s.points, c));
  out.component_ratio = comp / out.cost_whole;
  return out;
}

}  // namespace kfinder
