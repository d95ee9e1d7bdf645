#pragma once

// Convex-program identifier: minimize ||B_y|| / sqrt(m) over fractional
// selections y (0 <= y <= 1, sum y = m), row i of B_y being y_i (x_i - nu),
// then round and peel.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kfinder/linalg.hpp"
#include "kfinder/means.hpp"
#include "kfinder/peel.hpp"

namespace kfinder {

struct ConvexOptions {
  double tol = 1e-6;        // relative improvement over one plateau window
  Index max_iter = 5000;
  Index plateau = 200;
  Index restart_after = 30; // non-improving steps before restarting from the best iterate
  std::optional<Vector> warm_start;
};

struct FractionalSelection {
  IndexSet support;  // T, sorted; y[r] belongs to support[r]
  Vector y;
  Index m = 0;
  double objective = 0.0;
  Vector nu;
  std::string status = "converged";  // or "solver-stalled"
  Index iterations = 0;

  bool converged() const { return status == "converged"; }
};

struct RoundedSelection {
  IndexSet selected;
  double spectral_bound_ratio = 0.0;
  Index mass_deficit = 0;
};

namespace detail {

/// Euclidean projection onto {0 <= y <= 1, sum y = mass} by bisection on the shift.
inline Vector project_capped_simplex(const Vector& v, double mass) {
  const auto clamp_sum = [&](double tau) {
    return (v.array() - tau).max(0.0).min(1.0).sum();
  };
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clamp_sum(mid) > mass)
      lo = mid;
    else
      hi = mid;
  }
  Vector y = (v.array() - 0.5 * (lo + hi)).max(0.0).min(1.0);
  // Spread the leftover mass over the free coordinates.
  const double gap = mass - y.sum();
  Index free = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) > 0.0 && y(i) < 1.0) ++free;
  if (free > 0 && gap != 0.0) {
    const double share = gap / static_cast<double>(free);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y(i) > 0.0 && y(i) < 1.0) y(i) = std::clamp(y(i) + share, 0.0, 1.0);
  }
  return y;
}

struct ObjectiveEval {
  double norm = 0.0;  // ||B_y||
  Vector grad;        // subgradient of ||B_y|| with respect to y
  double gap = 0.0;   // top minus second singular value
};

/// ||B_y|| and its subgradient u_i (v . z_i), with (u, v) the top singular pair.
inline ObjectiveEval evaluate(const Matrix& Z, const Vector& y) {
  Matrix W = Z.array().colwise() * y.array();
  SingularTriple top = top_singular(W);
  ObjectiveEval e;
  e.norm = top.value;
  e.gap = top.value - top.second;
  e.grad = Vector::Zero(y.size());
  if (top.value > 0.0) e.grad = top.left.cwiseProduct(Z * top.right);
  return e;
}

inline Matrix offset_rows(const PointSet& P, std::span<const Index> T, const Vector& nu) {
  Matrix Z = gather(P, T);
  Z.rowwise() -= nu.transpose();
  return Z;
}

}  // namespace detail

/// ||B_y|| for rows x_i - nu over the support T.
inline double selection_norm(const PointSet& P, std::span<const Index> T, const Vector& nu,
                             const Vector& y) {
  return detail::evaluate(detail::offset_rows(P, T, nu), y).norm;
}

/// Subgradient of ||B_y|| with respect to y (length |T|).
inline Vector selection_subgradient(const PointSet& P, std::span<const Index> T, const Vector& nu,
                                    const Vector& y) {
  return detail::evaluate(detail::offset_rows(P, T, nu), y).grad;
}

/// Solves C(m, nu, T) by projected subgradient descent with restarts.
inline FractionalSelection solve_convex(const PointSet& P, std::span<const Index> T, Index m,
                                        const Vector& nu, const ConvexOptions& opt = {}) {
  if (T.empty()) throw Error("empty-subset");
  detail::check_subset(P, T);
  if (m < 1) throw Error("bad-m", "m must be positive");
  if (m > T.size()) throw Error("infeasible", "m exceeds |T|");
  if (nu.size() != static_cast<Eigen::Index>(P.dim())) throw Error("dim-mismatch");
  if (!(opt.tol > 0.0)) throw Error("bad-tolerance");

  FractionalSelection out;
  out.support.assign(T.begin(), T.end());
  std::sort(out.support.begin(), out.support.end());
  out.m = m;
  out.nu = nu;
  const Matrix Z = detail::offset_rows(P, out.support, nu);
  const auto t = static_cast<Eigen::Index>(out.support.size());
  const double mass = static_cast<double>(m);
  const double root_m = std::sqrt(mass);

  auto finish = [&](Vector y, Index iters, bool converged) {
    out.y = std::move(y);
    out.objective = detail::evaluate(Z, out.y).norm / root_m;
    out.iterations = iters;
    out.status = converged ? "converged" : "solver-stalled";
    return out;
  };

  if (m == T.size()) return finish(Vector::Ones(t), 0, true);

  // Rows sitting on nu: m of them give the exact optimum 0.
  const Vector row_norms = Z.rowwise().norm();
  const double zero_tol = 1e-12 * (1.0 + nu.norm());
  {
    Vector y = Vector::Zero(t);
    Index zeros = 0;
    for (Eigen::Index r = 0; r < t && zeros < m; ++r)
      if (row_norms(r) <= zero_tol) {
        y(r) = 1.0;
        ++zeros;
      }
    if (zeros == m) return finish(std::move(y), 0, true);
  }

  Vector y;
  if (opt.warm_start && opt.warm_start->size() == t) {
    y = detail::project_capped_simplex(*opt.warm_start, mass);
  } else {
    // Indicator of the m rows closest to nu.
    std::vector<detail::Ranked> r;
    for (Eigen::Index i = 0; i < t; ++i) r.push_back({row_norms(i), static_cast<Index>(i)});
    std::sort(r.begin(), r.end(), detail::ranked_less);
    y = Vector::Zero(t);
    for (Index i = 0; i < m; ++i) y(static_cast<Eigen::Index>(r[i].index)) = 1.0;
  }

  auto cur = detail::evaluate(Z, y);
  Vector best_y = y;
  double best = cur.norm;
  double window_start = best;
  const double alpha0 = 0.5 * std::sqrt(mass);
  double alpha = alpha0;
  Index step = 1, stall = 0;
  for (Index it = 1; it <= opt.max_iter; ++it) {
    if (best == 0.0) return finish(best_y, it, true);
    const double gn = cur.grad.norm();
    if (!(gn > 0.0)) return finish(best_y, it, true);
    y = detail::project_capped_simplex(y - (alpha / std::sqrt(static_cast<double>(step))) * cur.grad / gn,
                                       mass);
    cur = detail::evaluate(Z, y);
    if (cur.norm < best) {
      if (cur.norm < best * (1.0 - 1e-12)) stall = 0;
      best = cur.norm;
      best_y = y;
    } else {
      ++stall;
    }
    ++step;
    if (stall >= opt.restart_after) {
      y = best_y;
      cur = detail::evaluate(Z, y);
      alpha *= 0.5;
      step = 1;
      stall = 0;
      if (alpha < 1e-10 * alpha0) return finish(best_y, it, true);
    }
    if (it % opt.plateau == 0) {
      if (best >= window_start * (1.0 - opt.tol)) return finish(best_y, it, true);
      window_start = best;
    }
  }
  return finish(best_y, opt.max_iter, false);
}

/// Keeps coordinates with y_i >= w0^2 / 20.
inline RoundedSelection round_selection(const PointSet& P, const FractionalSelection& sel,
                                        double w0) {
  if (!(w0 > 0.0 && w0 <= 1.0)) throw Error("bad-weight", "w0 must lie in (0,1]");
  const double threshold = w0 * w0 / 20.0;
  RoundedSelection out;
  Vector y01 = Vector::Zero(sel.y.size());
  for (Eigen::Index r = 0; r < sel.y.size(); ++r)
    if (sel.y(r) >= threshold) {
      y01(r) = 1.0;
      out.selected.push_back(sel.support[static_cast<Index>(r)]);
    }
  out.mass_deficit = out.selected.size() >= sel.m ? 0 : sel.m - out.selected.size();
  const Matrix Z = detail::offset_rows(P, sel.support, sel.nu);
  const double frac = detail::evaluate(Z, sel.y).norm;
  const double rounded = out.selected.empty() ? 0.0 : detail::evaluate(Z, y01).norm;
  if (rounded == 0.0)
    out.spectral_bound_ratio = 0.0;
  else
    out.spectral_bound_ratio = frac > 0.0 ? rounded / frac : std::numeric_limits<double>::infinity();
  return out;
}

/// Convex-program identifier with a known minimum cluster weight w0.
inline RunReport identify_k_convex(const PointSet& P, double w0, const AlgoConstants& c = {},
                                   const ConvexOptions& opt = {}) {
  c.validate();
  detail::check_weight(P.size(), w0);
  const Index n = P.size();
  ProjectedView view(P, detail::clamp_rank(P, w0));
  const PointSet program_points = c.projected_program ? project(view.subspace, P) : P;

  RunReport rep;
  rep.algorithm = "identify-k-convex";
  rep.n = n;
  rep.w0 = w0;
  rep.constants = c;
  rep.subspace_rank = view.subspace.rank();
  rep.seed_size = std::max<Index>(1, detail::ceil_count(c.seed_fraction * w0 * static_cast<double>(n)));
  rep.stop_size = detail::floor_count(c.stop_fraction * w0 * static_cast<double>(n));
  const double factor = c.mstar_coeff / std::pow(w0, c.mstar_exp);
  const double zero_tol = 1e-12 * sigma(P) * std::sqrt(static_cast<double>(n));
  bool stalled = false, degenerate = false;

  IndexSet remaining = P.all();
  while (!remaining.empty()) {
    if (rep.seed_size > remaining.size()) {
      rep.flags.push_back("exhausted");
      break;
    }
    PeelIteration it;
    auto seed = outlier_centered_one_means(view.sq_dist, remaining, rep.seed_size);
    it.seed = std::move(seed.selected);
    it.seed_center = seed.center_index;
    it.seed_mean = view.subspace.lift(mean(view.coords, it.seed));
    it.seed_sigma = sigma(view.coords, it.seed);
    it.nu = c.projected_nu ? it.seed_mean : mean(program_points, it.seed);

    it.m_base = rep.seed_size;
    FractionalSelection best = solve_convex(program_points, remaining, it.m_base, it.nu, opt);
    stalled = stalled || !best.converged();
    it.opt_base = best.objective;
    it.opt_scan.push_back(best.objective);
    const double threshold = it.opt_base <= zero_tol ? zero_tol : factor * it.opt_base;
    ConvexOptions warm = opt;
    for (Index m = it.m_base + 1; m <= remaining.size(); ++m) {
      warm.warm_start = best.y;
      FractionalSelection next = solve_convex(program_points, remaining, m, it.nu, warm);
      stalled = stalled || !next.converged();
      it.opt_scan.push_back(next.objective);
      if (next.objective > threshold * (1.0 + 1e-9)) break;
      best = std::move(next);
    }
    it.m_star = best.m;
    it.opt_star = best.objective;

    RoundedSelection rounded = round_selection(program_points, best, w0);
    it.rounding_ratio = rounded.spectral_bound_ratio;
    it.mass_deficit = rounded.mass_deficit;
    if (rounded.selected.empty()) {
      degenerate = true;
      it.peeled = it.seed;
    } else {
      it.peeled = std::move(rounded.selected);
    }
    it.peeled_sigma = sigma(view.coords, it.peeled);
    IndexSet keep;
    std::set_difference(remaining.begin(), remaining.end(), it.peeled.begin(), it.peeled.end(),
                        std::back_inserter(keep));
    remaining = std::move(keep);
    rep.iterations.push_back(std::move(it));
    if (remaining.size() <= rep.stop_size) break;
  }
  if (stalled) rep.flags.push_back("solver-stalled");
  if (degenerate) rep.flags.push_back("rounding-degenerate");
  rep.k_hat = rep.iterations.size();
  rep.residual = std::move(remaining);
  return rep;
}

}  // namespace kfinder
