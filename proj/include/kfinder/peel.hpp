#pragma once

// SVD-peeling identifiers: IdentifyK with a known weight floor w0, the Prune
// procedure, and the w-hat sweep that needs no w0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kfinder/linalg.hpp"
#include "kfinder/means.hpp"

namespace kfinder {

/// Tunable constants. Defaults are the proven ones; desk-scale instances need
/// relaxed values (see README).
struct AlgoConstants {
  double r_coeff = 2000.0;        // peel radius r_j = r_coeff k^2 sigma_M(S) / w0^3
  double prune_c = 1e12;          // tightness threshold divisor
  double prune_exp = 12.0;        // exponent of w-hat in the tightness threshold
  double sep_test_coeff = 800.0;  // condition (a): coeff / w-hat^exp
  double sep_test_exp = 4.0;
  double stop_fraction = 0.1;     // stop once |P| <= stop_fraction w0 n
  double seed_fraction = 0.5;     // seed size seed_fraction w0 n
  Index tight_floor = 0;          // 0: max(2, ceil(sqrt(n) ln n / 100))
  double w_step = 0.0;            // 0: 1/n
  double mstar_coeff = 72000.0;   // convex identifier: opt(m*) <= coeff / w0^exp opt(base)
  double mstar_exp = 3.5;
  bool projected_nu = false;      // convex identifier: nu_j from the projected seed mean
  bool projected_program = false; // convex identifier: solve C(m, nu, T) on projected points

  void validate() const {
    for (double v : {r_coeff, prune_c, prune_exp, sep_test_coeff, sep_test_exp, stop_fraction,
                     seed_fraction, mstar_coeff, mstar_exp})
      if (!(v > 0.0) || !std::isfinite(v)) throw Error("bad-constant", "coefficients must be > 0");
    if (stop_fraction >= 1.0 || seed_fraction >= 1.0)
      throw Error("bad-constant", "fractions must lie in (0,1)");
    if (w_step < 0.0) throw Error("bad-constant", "w_step must be >= 0");
  }
};

inline Index tight_size_floor(Index n, const AlgoConstants& c = {}) {
  if (c.tight_floor > 0) return c.tight_floor;
  const double nn = static_cast<double>(n);
  const double f = std::ceil(std::sqrt(nn) * std::log(nn) / 100.0);
  return std::max<Index>(2, static_cast<Index>(f));
}

namespace detail {

inline Index ceil_count(double x) {
  return static_cast<Index>(std::max(0.0, std::ceil(x - 1e-9)));
}
inline Index floor_count(double x) {
  return static_cast<Index>(std::max(0.0, std::floor(x + 1e-9)));
}

}  // namespace detail

/// ceil(1/w): the subspace rank and the bound on k implied by the weight floor.
inline Index rank_for_weight(double w) { return std::max<Index>(1, detail::ceil_count(1.0 / w)); }

struct PeelIteration {
  IndexSet seed;
  Index seed_center = 0;
  Vector seed_mean;          // mu_M(S), ambient coordinates
  double seed_sigma = 0.0;   // sigma_M(S)
  double radius = 0.0;       // r_j (peeling identifier only)
  IndexSet peeled;           // X_j, sorted
  double peeled_sigma = 0.0; // sigma_M(X_j)
  // Convex identifier diagnostics.
  Vector nu;
  Index m_base = 0;
  Index m_star = 0;
  double opt_base = 0.0;
  double opt_star = 0.0;
  double rounding_ratio = 0.0;
  Index mass_deficit = 0;
  std::vector<double> opt_scan;  // opt(C(m)) for m = m_base, m_base+1, ...
};

struct PartitionConditions {
  bool separated = true;       // (a)
  bool prune_retained = true;  // (b)
  bool large = true;           // (c)
  std::vector<Index> pruned_sizes;

  bool all() const { return separated && prune_retained && large; }
  std::string failed() const {
    std::string s;
    if (!separated) s += 'a';
    if (!prune_retained) s += 'b';
    if (!large) s += 'c';
    return s;
  }
};

struct WHatTrial {
  double w_hat = 0.0;
  Index rank = 0;
  Index k_hat = 0;
  bool aborted = false;  // stopped at the first peel smaller than w_hat n / 2
  PartitionConditions conditions;
  std::string failed;  // "" when accepted, else failing conditions ("a", "bc", ...)
  std::vector<IndexSet> clusters;
};

struct RunReport {
  std::string algorithm;
  Index n = 0;
  Index k_hat = 0;
  double w0 = 0.0;
  Index subspace_rank = 0;
  Index seed_size = 0;
  Index stop_size = 0;
  std::vector<PeelIteration> iterations;
  IndexSet residual;
  std::vector<WHatTrial> w_hat_trace;
  AlgoConstants constants;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> flags;

  std::vector<IndexSet> clusters() const {
    std::vector<IndexSet> out;
    for (const auto& it : iterations) out.push_back(it.peeled);
    return out;
  }
  bool has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
};

/// Raised by identify_k when no w-hat on the grid is accepted; carries the trace.
class NoAcceptableWeight : public Error {
 public:
  explicit NoAcceptableWeight(RunReport report)
      : Error("no-acceptable-w", "sweep exhausted without acceptance"), report_(std::move(report)) {}
  const RunReport& report() const { return report_; }

 private:
  RunReport report_;
};

/// Projected coordinates and their pairwise squared distances for one subspace.
struct ProjectedView {
  Subspace subspace;
  PointSet coords;  // n x d'
  Matrix sq_dist;   // n x n

  ProjectedView(const PointSet& P, Index rank) : ProjectedView(P, svd_subspace(P, rank)) {}
  ProjectedView(const PointSet& P, Subspace M)
      : subspace(std::move(M)),
        coords(project_coordinates(subspace, P)),
        sq_dist(squared_distance_matrix(coords)) {}
};

namespace detail {

inline IndexSet prune_view(const ProjectedView& view, std::span<const Index> X, double w_hat,
                           const AlgoConstants& c, Index n_total) {
  IndexSet xhat(X.begin(), X.end());
  std::sort(xhat.begin(), xhat.end());
  if (xhat.size() < 2) return xhat;
  const double s = sigma(view.coords, X);
  const double nx = static_cast<double>(X.size());
  // Threshold frozen at entry: sigma_M(X) and |X| of the original argument.
  const double scale = std::pow(w_hat, c.prune_exp) * s * s / (c.prune_c * nx * nx);
  if (!(scale > 0.0)) return xhat;
  const Index floor = tight_size_floor(n_total, c);

  std::vector<Ranked> r;
  for (;;) {
    if (xhat.size() < floor) break;
    bool removed = false;
    for (Index center : xhat) {
      r.clear();
      for (Index i : xhat)
        r.push_back({i == center ? -1.0
                                 : view.sq_dist(static_cast<Eigen::Index>(center),
                                                static_cast<Eigen::Index>(i)),
                     i});
      std::sort(r.begin(), r.end(), ranked_less);
      double cost = 0.0;
      for (Index m = 1; m <= r.size(); ++m) {
        cost += std::max(r[m - 1].dist, 0.0);
        if (m < floor) continue;
        const double md = static_cast<double>(m);
        if (cost / md < scale * md * md) {
          IndexSet tight;
          for (Index t = 0; t < m; ++t) tight.push_back(r[t].index);
          std::sort(tight.begin(), tight.end());
          IndexSet rest;
          std::set_difference(xhat.begin(), xhat.end(), tight.begin(), tight.end(),
                              std::back_inserter(rest));
          xhat = std::move(rest);
          removed = true;
          break;
        }
      }
      if (removed) break;
    }
    if (!removed) break;
  }
  return xhat;
}

inline PartitionConditions conditions_view(const ProjectedView& view,
                                           const std::vector<IndexSet>& sets, double w_hat,
                                           const AlgoConstants& c, Index n_total) {
  {
    std::vector<char> seen(view.coords.size(), 0);
    for (const auto& s : sets)
      for (Index i : s) {
        if (i >= seen.size()) throw Error("bad-index", std::to_string(i));
        if (seen[i]) throw Error("not-a-partition", "index " + std::to_string(i) + " repeated");
        seen[i] = 1;
      }
  }
  PartitionConditions out;
  std::vector<Vector> mu;
  std::vector<double> sg;
  for (const auto& s : sets) {
    if (s.empty()) throw Error("empty-subset");
    mu.push_back(mean(view.coords, s));
    sg.push_back(sigma(view.coords, s));
  }
  const double coeff = c.sep_test_coeff / std::pow(w_hat, c.sep_test_exp);
  for (std::size_t h = 0; h < sets.size(); ++h)
    for (std::size_t j = h + 1; j < sets.size(); ++j)
      if ((mu[h] - mu[j]).norm() < coeff * (sg[h] + sg[j])) out.separated = false;

  const double min_size = w_hat * static_cast<double>(n_total) / 2.0;
  for (const auto& s : sets) {
    if (static_cast<double>(s.size()) < min_size - 1e-9) out.large = false;
    const Index kept = prune_view(view, s, w_hat, c, n_total).size();
    out.pruned_sizes.push_back(kept);
    if (2 * kept < s.size()) out.prune_retained = false;
  }
  return out;
}

/// Peeling loop on a fixed projected view. When `abort_below` > 0 the
/// run stops at the first peeled set smaller than it.
inline RunReport peel_view(const PointSet& P, const ProjectedView& view, double w0,
                           const AlgoConstants& c, double abort_below, bool* aborted) {
  const Index n = P.size();
  RunReport rep;
  rep.algorithm = "identify-k-with-w0";
  rep.n = n;
  rep.w0 = w0;
  rep.constants = c;
  rep.subspace_rank = view.subspace.rank();
  rep.seed_size = std::max<Index>(1, ceil_count(c.seed_fraction * w0 * static_cast<double>(n)));
  rep.stop_size = floor_count(c.stop_fraction * w0 * static_cast<double>(n));
  const double k_bound = static_cast<double>(rank_for_weight(w0));
  const double radius_scale = c.r_coeff * k_bound * k_bound / (w0 * w0 * w0);

  IndexSet remaining = P.all();
  if (aborted) *aborted = false;
  while (!remaining.empty()) {
    if (rep.seed_size > remaining.size()) {
      rep.flags.push_back("exhausted");
      break;
    }
    PeelIteration it;
    auto seed = outlier_centered_one_means(view.sq_dist, remaining, rep.seed_size);
    it.seed = std::move(seed.selected);
    it.seed_center = seed.center_index;
    Vector mu = mean(view.coords, it.seed);
    it.seed_mean = view.subspace.lift(mu);
    it.seed_sigma = sigma(view.coords, it.seed);
    it.radius = radius_scale * it.seed_sigma;
    // Absolute slack so co-located points survive rounding in the mean.
    const double slack = 1e-12 * (1.0 + mu.norm());

    IndexSet keep;
    for (Index i : remaining) {
      const double dist = (view.coords.point(i).transpose() - mu).norm();
      if (dist <= it.radius + slack || i == it.seed_center)
        it.peeled.push_back(i);
      else
        keep.push_back(i);
    }
    it.peeled_sigma = sigma(view.coords, it.peeled);
    remaining = std::move(keep);
    const bool small = abort_below > 0.0 && static_cast<double>(it.peeled.size()) < abort_below - 1e-9;
    rep.iterations.push_back(std::move(it));
    if (small) {
      if (aborted) *aborted = true;
      break;
    }
    if (remaining.size() <= rep.stop_size) break;
  }
  rep.k_hat = rep.iterations.size();
  rep.residual = std::move(remaining);
  return rep;
}

inline void check_weight(Index n, double w0) {
  if (n < 2) throw Error("too-few-points", "need n >= 2");
  if (!(w0 > 0.0 && w0 <= 1.0)) throw Error("bad-weight", "w0 must lie in (0,1]");
  if (w0 * static_cast<double>(n) < 2.0 - 1e-9) throw Error("weight-too-small", "w0 n < 2");
}

inline Index clamp_rank(const PointSet& P, double w) {
  return std::min({rank_for_weight(w), P.size(), P.dim()});
}

}  // namespace detail

/// Removes tight subsets of X (projected onto M) until none is left.
inline IndexSet prune(const PointSet& P, std::span<const Index> X, const Subspace& M, double w_hat,
                      const AlgoConstants& c = {}) {
  if (X.empty()) throw Error("empty-subset");
  detail::check_subset(P, X);
  ProjectedView view(P, M);
  return detail::prune_view(view, X, w_hat, c, P.size());
}

/// Conditions (a), (b), (c) of the w-hat sweep for a list of disjoint sets.
inline PartitionConditions check_partition_conditions(const PointSet& P,
                                                      const std::vector<IndexSet>& sets,
                                                      const Subspace& M, double w_hat,
                                                      const AlgoConstants& c = {}) {
  ProjectedView view(P, M);
  return detail::conditions_view(view, sets, w_hat, c, P.size());
}

/// Peeling identifier with a known minimum cluster weight w0.
inline RunReport identify_k_with_w0(const PointSet& P, double w0, const AlgoConstants& c = {}) {
  c.validate();
  detail::check_weight(P.size(), w0);
  ProjectedView view(P, detail::clamp_rank(P, w0));
  return detail::peel_view(P, view, w0, c, 0.0, nullptr);
}

/// Sweeps w-hat = 1, 1 - step, ... and returns the first run whose peeled sets
/// pass conditions (a)-(c). Throws NoAcceptableWeight when the grid is exhausted.
inline RunReport identify_k(const PointSet& P, const AlgoConstants& c = {}) {
  c.validate();
  const Index n = P.size();
  if (n < 2) throw Error("too-few-points", "need n >= 2");
  const double step = c.w_step > 0.0 ? c.w_step : 1.0 / static_cast<double>(n);

  std::map<Index, ProjectedView> views;
  std::vector<WHatTrial> trace;
  for (Index t = 0;; ++t) {
    const double w_hat = 1.0 - static_cast<double>(t) * step;
    if (w_hat <= 1e-12 || w_hat * static_cast<double>(n) < 2.0 - 1e-9) break;
    const Index rank = detail::clamp_rank(P, w_hat);
    auto vit = views.find(rank);
    if (vit == views.end()) vit = views.emplace(rank, ProjectedView(P, rank)).first;
    const ProjectedView& view = vit->second;

    bool aborted = false;
    const double min_size = w_hat * static_cast<double>(n) / 2.0;
    RunReport run = detail::peel_view(P, view, w_hat, c, min_size, &aborted);

    WHatTrial trial;
    trial.w_hat = w_hat;
    trial.rank = rank;
    trial.k_hat = run.k_hat;
    trial.aborted = aborted;
    trial.clusters = run.clusters();
    if (run.k_hat == 0) {
      trial.failed = "empty";
    } else if (aborted) {
      trial.conditions.large = false;
      trial.failed = "c";
    } else {
      trial.conditions = detail::conditions_view(view, trial.clusters, w_hat, c, n);
      trial.failed = trial.conditions.failed();
    }
    const bool accepted = trial.failed.empty();
    trace.push_back(std::move(trial));
    if (accepted) {
      run.algorithm = "identify-k";
      run.w_hat_trace = std::move(trace);
      return run;
    }
  }
  RunReport rep;
  rep.algorithm = "identify-k";
  rep.n = n;
  rep.constants = c;
  rep.w_hat_trace = std::move(trace);
  throw NoAcceptableWeight(std::move(rep));
}

}  // namespace kfinder
