#pragma once

// Checks for the no-tight-sub-cluster conditions and mean separation, plus the
// exhaustive identifier that returns the smallest part count whose parts all
// pass weak-NTSC.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kfinder/clustering.hpp"
#include "kfinder/linalg.hpp"
#include "kfinder/peel.hpp"
#include "kfinder/random.hpp"

namespace kfinder {

enum class Verdict { verified, refuted, sampled_no_violation };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::verified: return "verified";
    case Verdict::refuted: return "refuted";
    case Verdict::sampled_no_violation: return "sampled-no-violation";
  }
  return "?";
}

enum class CheckMode { exact, sampled };

struct Witness {
  Index cluster = 0;
  IndexSet subset;                   // T for NTSC-type conditions
  std::optional<Index> other_cluster;  // second cluster for separation
  Vector direction;                  // violating line (NTSC) or empty
  double lhs = 0.0;                  // the side that must be >= rhs
  double rhs = 0.0;
};

struct ConditionReport {
  std::string condition;  // weak-ntsc, ntsc, weak-separation, strong-separation
  Verdict verdict = Verdict::verified;
  std::optional<Witness> witness;
  Index trials = 0;

  bool refuted() const { return verdict == Verdict::refuted; }
};

struct NtscOptions {
  CheckMode mode = CheckMode::exact;
  Index trials = 1000;     // sampled mode: random subsets per cluster
  Index directions = 16;   // random unit directions per subset (NTSC only)
  std::uint64_t seed = 0;
  Index floor = 0;         // minimum |T|; 0 means tight_size_floor(n)
  bool neighbor_balls = true;  // sampled mode: also test nearest-neighbour balls
};

inline constexpr Index exact_cluster_limit = 20;
inline constexpr double ntsc_constant = 125.0;

/// |T|^2 / (125 |C|^2), the factor on sigma^2(C) that sigma^2(T) must reach.
inline double ntsc_ratio(Index t, Index c) {
  const double r = static_cast<double>(t) / static_cast<double>(c);
  return r * r / ntsc_constant;
}

namespace detail {

inline Matrix covariance(const PointSet& P, std::span<const Index> T) {
  Matrix A = centered(P, T);
  return A.transpose() * A / static_cast<double>(T.size());
}

/// Smallest ratio u' Sigma_T u / u' Sigma_C u over u in the range of Sigma_C,
/// and a unit direction attaining it.
struct DirectionalMin {
  double ratio = std::numeric_limits<double>::infinity();
  Vector direction;
};

inline DirectionalMin generalized_min(const Matrix& cov_t, const Matrix& cov_c) {
  DirectionalMin out;
  Eigen::SelfAdjointEigenSolver<Matrix> ec(cov_c);
  const double top = ec.eigenvalues().maxCoeff();
  if (!(top > 0.0)) return out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ec.eigenvalues().size(); ++i)
    if (ec.eigenvalues()(i) > 1e-12 * top) keep.push_back(i);
  const auto r = static_cast<Eigen::Index>(keep.size());
  Matrix W(cov_c.rows(), r);
  for (Eigen::Index j = 0; j < r; ++j)
    W.col(j) = ec.eigenvectors().col(keep[static_cast<std::size_t>(j)]) /
               std::sqrt(ec.eigenvalues()(keep[static_cast<std::size_t>(j)]));
  Matrix B = W.transpose() * cov_t * W;
  Eigen::SelfAdjointEigenSolver<Matrix> eb(B);
  out.ratio = std::max(eb.eigenvalues()(0), 0.0);
  out.direction = (W * eb.eigenvectors().col(0)).normalized();
  return out;
}

inline double directional_variance(const Matrix& cov, const Vector& u) { return u.dot(cov * u); }

/// Row-major copy with running sums, for cheap lower bounds on sigma^2(T).
class SubsetMoments {
 public:
  explicit SubsetMoments(const PointSet& P) : rows_(P.matrix()), norms_(rows_.rowwise().squaredNorm()) {}

  void reset() {
    sum_ = Vector::Zero(rows_.cols());
    sq_ = 0.0;
    count_ = 0;
  }
  void add(Index i) {
    sum_ += rows_.row(static_cast<Eigen::Index>(i)).transpose();
    sq_ += norms_(static_cast<Eigen::Index>(i));
    ++count_;
  }
  /// trace(cov_T) / min(|T| - 1, d) <= sigma^2(T).
  double sigma2_lower_bound() const {
    if (count_ < 2) return 0.0;
    const double m = static_cast<double>(count_);
    const double trace = std::max(sq_ / m - sum_.squaredNorm() / (m * m), 0.0);
    const double rank = static_cast<double>(std::min<Index>(count_ - 1, static_cast<Index>(rows_.cols())));
    return trace / rank;
  }

 private:
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows_;
  Vector norms_;
  Vector sum_;
  double sq_ = 0.0;
  Index count_ = 0;
};

struct ClusterContext {
  Index index = 0;
  const IndexSet* members = nullptr;
  double sigma2 = 0.0;
  Matrix cov;  // only for NTSC
};

/// Tests one subset; fills `w` and returns true on a violation.
inline bool subset_violates(const PointSet& P, const ClusterContext& C, const IndexSet& T, bool ntsc,
                            const std::vector<Vector>& extra_dirs, double lower_bound, Witness& w) {
  const double ratio = ntsc_ratio(T.size(), C.members->size());
  if (!ntsc) {
    const double rhs = ratio * C.sigma2;
    if (lower_bound >= rhs) return false;
    const double s = sigma(P, T);
    if (s * s < rhs) {
      w = Witness{C.index, T, std::nullopt, Vector(), s * s, rhs};
      return true;
    }
    return false;
  }
  const Matrix cov_t = covariance(P, T);
  auto consider = [&](const Vector& u) {
    const double lhs = directional_variance(cov_t, u);
    const double rhs = ratio * directional_variance(C.cov, u);
    if (lhs < rhs) {
      w = Witness{C.index, T, std::nullopt, u, lhs, rhs};
      return true;
    }
    return false;
  };
  for (const auto& u : extra_dirs)
    if (consider(u)) return true;
  DirectionalMin g = generalized_min(cov_t, C.cov);
  if (g.direction.size() > 0 && g.ratio < ratio) return consider(g.direction);
  return false;
}

inline std::vector<ClusterContext> contexts(const PointSet& P, const Clustering& clusters, bool ntsc) {
  std::vector<ClusterContext> out;
  for (Index h = 0; h < clusters.size(); ++h) {
    ClusterContext c;
    c.index = h;
    c.members = &clusters[h];
    // Rounding noise of coincident points counts as zero spread.
    double scale = 1.0;
    for (Index i : clusters[h]) scale = std::max(scale, P.point(i).cwiseAbs().maxCoeff());
    const double s = sigma(P, clusters[h]);
    c.sigma2 = s <= 1e-12 * scale ? 0.0 : s * s;
    if (ntsc) c.cov = covariance(P, clusters[h]);
    out.push_back(std::move(c));
  }
  return out;
}

inline ConditionReport check_ntsc_impl(const PointSet& P, const Clustering& clusters,
                                       const NtscOptions& opt, bool ntsc) {
  check_partition(clusters, P.size());
  ConditionReport rep;
  rep.condition = ntsc ? "ntsc" : "weak-ntsc";
  const Index floor = opt.floor > 0 ? opt.floor : tight_size_floor(P.size());
  if (opt.mode == CheckMode::exact)
    for (const auto& c : clusters)
      if (c.size() > exact_cluster_limit)
        throw Error("too-large-for-exact", "cluster of size " + std::to_string(c.size()));

  const auto ctx = contexts(P, clusters, ntsc);
  SubsetMoments moments(P);
  Witness w;
  auto fail = [&](Index trials) {
    rep.verdict = Verdict::refuted;
    rep.witness = w;
    rep.trials = trials;
    return rep;
  };

  if (opt.mode == CheckMode::exact) {
    for (const auto& C : ctx) {
      const IndexSet& members = *C.members;
      const Index size = members.size();
      if (size < floor || C.sigma2 == 0.0) continue;
      // Subsets by mask; the full cluster always passes (ratio <= 1/125).
      const std::uint32_t full = size >= 32 ? ~0u : (1u << size) - 1u;
      for (std::uint32_t mask = 1; mask <= full && mask != 0; ++mask) {
        if (static_cast<Index>(std::popcount(mask)) < floor) continue;
        IndexSet T;
        moments.reset();
        for (Index b = 0; b < size; ++b)
          if (mask >> b & 1u) {
            T.push_back(members[b]);
            moments.add(members[b]);
          }
        if (subset_violates(P, C, T, ntsc, {}, moments.sigma2_lower_bound(), w)) return fail(0);
        if (mask == full) break;
      }
    }
    rep.verdict = Verdict::verified;
    return rep;
  }

  Index trials = 0;
  for (const auto& C : ctx) {
    const IndexSet& members = *C.members;
    const Index size = members.size();
    if (size < floor || C.sigma2 == 0.0) continue;
    Stream rng(opt.seed, C.index);
    auto random_dirs = [&]() {
      std::vector<Vector> dirs;
      if (!ntsc) return dirs;
      for (Index k = 0; k < opt.directions; ++k) {
        Vector u(static_cast<Eigen::Index>(P.dim()));
        for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = rng.normal();
        if (u.norm() > 0.0) dirs.push_back(u.normalized());
      }
      return dirs;
    };

    IndexSet pool = members;
    for (Index t = 0; t < opt.trials; ++t) {
      const Index m = floor + static_cast<Index>(rng.below(size - floor + 1));
      for (Index i = 0; i < m; ++i)
        std::swap(pool[i], pool[i + static_cast<Index>(rng.below(size - i))]);
      IndexSet T(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
      std::sort(T.begin(), T.end());
      moments.reset();
      for (Index i : T) moments.add(i);
      ++trials;
      if (subset_violates(P, C, T, ntsc, random_dirs(), moments.sigma2_lower_bound(), w))
        return fail(trials);
    }

    if (opt.neighbor_balls) {
      // Balls of growing size around each member.
      const Matrix D = squared_distance_matrix(PointSet(gather(P, members)));
      std::vector<Ranked> order;
      for (Index a = 0; a < size; ++a) {
        order.clear();
        for (Index b = 0; b < size; ++b)
          order.push_back({a == b ? -1.0 : D(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), b});
        std::sort(order.begin(), order.end(), ranked_less);
        moments.reset();
        for (Index m = 1; m <= size; ++m) {
          moments.add(members[order[m - 1].index]);
          if (m < floor) continue;
          const double lb = moments.sigma2_lower_bound();
          if (!ntsc && lb >= ntsc_ratio(m, size) * C.sigma2) continue;
          IndexSet T;
          for (Index t = 0; t < m; ++t) T.push_back(members[order[t].index]);
          std::sort(T.begin(), T.end());
          ++trials;
          if (subset_violates(P, C, T, ntsc, random_dirs(), lb, w)) return fail(trials);
        }
      }
    }
  }
  rep.verdict = Verdict::sampled_no_violation;
  rep.trials = trials;
  return rep;
}

}  // namespace detail

/// sigma^2(T) >= |T|^2 / (125 |C|^2) sigma^2(C) for every T in C with |T| >= floor.
inline ConditionReport check_weak_ntsc(const PointSet& P, const Clustering& clusters,
                                       const NtscOptions& opt = {}) {
  return detail::check_ntsc_impl(P, clusters, opt, false);
}

/// The same inequality along every line.
inline ConditionReport check_ntsc(const PointSet& P, const Clustering& clusters,
                                  const NtscOptions& opt = {}) {
  return detail::check_ntsc_impl(P, clusters, opt, true);
}

/// Recomputes a witness from scratch; true when it is a genuine violation.
inline bool witness_recomputes(const PointSet& P, const Clustering& clusters,
                               const ConditionReport& rep, double gamma = 0.0) {
  if (!rep.witness) return false;
  const Witness& w = *rep.witness;
  const IndexSet& C = clusters.at(w.cluster);
  if (rep.condition == "weak-ntsc" || rep.condition == "ntsc") {
    if (!std::includes(C.begin(), C.end(), w.subset.begin(), w.subset.end())) return false;
    const double ratio = ntsc_ratio(w.subset.size(), C.size());
    if (rep.condition == "weak-ntsc") {
      const double st = sigma(P, w.subset), sc = sigma(P, C);
      return st * st < ratio * sc * sc;
    }
    const double st = directional_sigma(P, w.subset, w.direction);
    const double sc = directional_sigma(P, C, w.direction);
    return st * st < ratio * sc * sc;
  }
  if (!w.other_cluster) return false;
  const IndexSet& D = clusters.at(*w.other_cluster);
  const double gap = (mean(P, C) - mean(P, D)).norm();
  if (rep.condition == "weak-separation") return gap < gamma * (sigma(P, C) + sigma(P, D));
  double s0 = 0.0;
  for (const auto& c : clusters) s0 = std::max(s0, sigma(P, c));
  return gap < gamma * s0;
}

enum class SeparationKind { weak, strong };

/// Pairwise mean gaps against gamma (sigma_a + sigma_b) (weak) or gamma max_h sigma_h (strong).
inline ConditionReport check_separation(const PointSet& P, const Clustering& clusters, double gamma,
                                        SeparationKind kind) {
  check_partition(clusters, P.size());
  if (!(gamma > 0.0)) throw Error("bad-gamma", "gamma must be positive");
  ConditionReport rep;
  rep.condition = kind == SeparationKind::weak ? "weak-separation" : "strong-separation";
  std::vector<Vector> mu;
  std::vector<double> sg;
  double s0 = 0.0;
  for (const auto& c : clusters) {
    mu.push_back(mean(P, c));
    sg.push_back(sigma(P, c));
    s0 = std::max(s0, sg.back());
  }
  for (Index a = 0; a < clusters.size(); ++a)
    for (Index b = a + 1; b < clusters.size(); ++b) {
      const double gap = (mu[a] - mu[b]).norm();
      const double rhs = gamma * (kind == SeparationKind::weak ? sg[a] + sg[b] : s0);
      if (gap < rhs) {
        rep.verdict = Verdict::refuted;
        rep.witness = Witness{a, {}, b, Vector(), gap, rhs};
        return rep;
      }
    }
  rep.verdict = Verdict::verified;
  return rep;
}

inline constexpr Index exhaustive_limit = 14;

struct ExhaustiveResult {
  Index k = 0;
  Clustering partition;  // first partition found with k parts
  double min_weight = 0.0;
  bool size_hypothesis = false;  // n >= 100 / w0^5 for the found partition
};

/// Smallest s such that some s-partition has every part passing exact weak-NTSC.
inline ExhaustiveResult exhaustive_identify(const PointSet& P, const AlgoConstants& c = {}) {
  const Index n = P.size();
  if (n > exhaustive_limit) throw Error("exhaustive-too-large", "n = " + std::to_string(n));
  const Index floor = tight_size_floor(n, c);
  const std::uint32_t all = (1u << n) - 1u;

  std::unordered_map<std::uint32_t, bool> part_ok;
  auto passes = [&](std::uint32_t mask) {
    auto it = part_ok.find(mask);
    if (it != part_ok.end()) return it->second;
    IndexSet part;
    for (Index b = 0; b < n; ++b)
      if (mask >> b & 1u) part.push_back(b);
    bool ok = true;
    if (part.size() >= floor) {
      PointSet sub(gather(P, part));
      NtscOptions opt;
      opt.floor = floor;
      ok = !check_weak_ntsc(sub, {iota_set(part.size())}, opt).refuted();
    }
    part_ok.emplace(mask, ok);
    return ok;
  };

  // Parts are chosen in order of their smallest element; failed (mask, s) pairs are memoized.
  std::unordered_map<std::uint64_t, bool> dead;
  std::vector<std::uint32_t> chosen;
  auto search = [&](auto&& self, std::uint32_t rest, Index parts) -> bool {
    if (rest == 0) return parts == 0;
    if (parts == 0 || static_cast<Index>(std::popcount(rest)) < parts) return false;
    const std::uint64_t key = (static_cast<std::uint64_t>(rest) << 8) | parts;
    if (dead.count(key)) return false;
    const std::uint32_t low = rest & (~rest + 1u);
    const std::uint32_t others = rest & ~low;
    // Enumerate subsets of `others` in increasing order.
    std::uint32_t sub = 0;
    for (;;) {
      const std::uint32_t part = low | sub;
      if (passes(part)) {
        chosen.push_back(part);
        if (self(self, rest & ~part, parts - 1)) return true;
        chosen.pop_back();
      }
      if (sub == others) break;
      sub = (sub - others) & others;
    }
    dead.emplace(key, true);
    return false;
  };

  ExhaustiveResult out;
  for (Index s = 1; s <= n; ++s) {
    chosen.clear();
    if (search(search, all, s)) {
      out.k = s;
      for (std::uint32_t part : chosen) {
        IndexSet idx;
        for (Index b = 0; b < n; ++b)
          if (part >> b & 1u) idx.push_back(b);
        out.partition.push_back(std::move(idx));
      }
      out.min_weight = min_weight(out.partition);
      out.size_hypothesis = static_cast<double>(n) >= 100.0 / std::pow(out.min_weight, 5.0);
      return out;
    }
  }
  throw Error("exhaustive-failed", "no partition passed");  // unreachable: singletons pass
}

}  // namespace kfinder
