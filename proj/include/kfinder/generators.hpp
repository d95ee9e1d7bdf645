#pragma once

// Seeded synthetic data: mixtures of Gaussian or bounded components and
// stochastic block models whose points are adjacency rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "kfinder/clustering.hpp"
#include "kfinder/linalg.hpp"
#include "kfinder/random.hpp"

namespace kfinder {

enum class ComponentKind { gaussian, uniform_ball, rademacher };

inline std::string to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::gaussian: return "gaussian";
    case ComponentKind::uniform_ball: return "uniform-ball";
    case ComponentKind::rademacher: return "rademacher";
  }
  return "?";
}

inline ComponentKind component_kind_from_string(const std::string& s) {
  if (s == "gaussian") return ComponentKind::gaussian;
  if (s == "uniform-ball") return ComponentKind::uniform_ball;
  if (s == "rademacher") return ComponentKind::rademacher;
  throw Error("bad-component-kind", s);
}

/// One mixture component. Every kind has the given mean and covariance.
struct MixtureComponent {
  Vector mean;
  Matrix covariance;
  double weight = 1.0;
  ComponentKind kind = ComponentKind::gaussian;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;

  Index dim() const { return components.empty() ? 0 : static_cast<Index>(components.front().mean.size()); }

  void validate() const {
    if (components.empty()) throw Error("bad-spec", "no components");
    const auto d = components.front().mean.size();
    if (d < 1) throw Error("bad-spec", "empty mean");
    double total = 0.0;
    for (const auto& c : components) {
      if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d)
        throw Error("dim-mismatch", "component dimensions differ");
      if (!c.mean.allFinite() || !c.covariance.allFinite()) throw Error("non-finite");
      if (!(c.weight >= 0.0)) throw Error("bad-spec", "negative weight");
      const double scale = std::max(1.0, c.covariance.cwiseAbs().maxCoeff());
      if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw Error("bad-covariance", "not symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix> es(c.covariance, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-9 * scale) throw Error("bad-covariance", "not PSD");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("bad-spec", "weights must sum to 1");
  }
};

/// Preset: spherical components with the given means, common variance and equal weights.
inline MixtureSpec spherical_mixture(const std::vector<Vector>& means, double variance,
                                     ComponentKind kind = ComponentKind::gaussian) {
  MixtureSpec spec;
  for (const auto& mu : means)
    spec.components.push_back({mu, variance * Matrix::Identity(mu.size(), mu.size()),
                               1.0 / static_cast<double>(means.size()), kind});
  return spec;
}

struct SbmSpec {
  Matrix prob;                  // k x k
  std::vector<double> weights;  // k
  Index n = 0;

  Index k() const { return static_cast<Index>(prob.rows()); }

  void validate() const {
    const auto k = prob.rows();
    if (k < 1 || prob.cols() != k) throw Error("bad-spec", "probability matrix must be square");
    if (static_cast<Eigen::Index>(weights.size()) != k) throw Error("bad-spec", "need one weight per block");
    if (n < 1) throw Error("bad-spec", "n must be positive");
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw Error("bad-spec", "weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("bad-spec", "weights must sum to 1");
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) {
        const double p = prob(a, b);
        if (!(p >= 0.0 && p <= 0.5)) throw Error("bad-spec", "probabilities must lie in [0, 1/2]");
        if (p != prob(b, a)) throw Error("bad-spec", "probability matrix must be symmetric");
        if (p > prob(a, a)) throw Error("bad-spec", "intra-block probability must be the row maximum");
      }
  }
};

struct LabeledSample {
  PointSet points;
  std::vector<int> labels;  // 1-based
  std::uint64_t seed = 0;
  std::optional<MixtureSpec> mixture;
  std::optional<SbmSpec> sbm;

  Clustering clusters() const { return clusters_from_labels(labels); }
};

namespace detail {

/// Symmetric square root with negative eigenvalues clipped to zero.
inline Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

inline Index pick(const std::vector<double>& cumulative, double u) {
  for (Index i = 0; i < cumulative.size(); ++i)
    if (u < cumulative[i]) return i;
  // Rounding at the top end: last component with positive weight.
  Index i = cumulative.size() - 1;
  while (i > 0 && cumulative[i] == cumulative[i - 1]) --i;
  return i;
}

inline std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c;
  double acc = 0.0;
  for (double x : w) c.push_back(acc += x);
  return c;
}

}  // namespace detail

/// n iid draws; point i uses its own stream derived from (seed, i).
inline LabeledSample sample_gaussian_mixture(const MixtureSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw Error("bad-n", "n must be positive");
  const auto d = static_cast<Eigen::Index>(spec.dim());
  std::vector<double> weights;
  std::vector<Matrix> roots;
  for (const auto& c : spec.components) {
    weights.push_back(c.weight);
    roots.push_back(detail::psd_sqrt(c.covariance));
  }
  const auto cum = detail::cumulative(weights);

  Matrix X(static_cast<Eigen::Index>(n), d);
  LabeledSample out;
  out.labels.resize(n);
  Vector z(d);
  for (Index i = 0; i < n; ++i) {
    Stream rng(seed, i);
    const Index h = detail::pick(cum, rng.uniform());
    const auto& comp = spec.components[h];
    switch (comp.kind) {
      case ComponentKind::gaussian:
        for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
        break;
      case ComponentKind::rademacher:
        for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.coin(0.5) ? 1.0 : -1.0;
        break;
      case ComponentKind::uniform_ball: {
        // Uniform in the ball of radius sqrt(d + 2), which has identity covariance.
        for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
        const double norm = z.norm();
        const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
        z *= norm > 0.0 ? std::sqrt(static_cast<double>(d) + 2.0) * radius / norm : 0.0;
        break;
      }
    }
    X.row(static_cast<Eigen::Index>(i)) = (comp.mean + roots[h] * z).transpose();
    out.labels[i] = static_cast<int>(h + 1);
  }
  out.points = PointSet(std::move(X));
  out.seed = seed;
  out.mixture = spec;
  return out;
}

/// Adjacency rows of a block-model graph; no self loops.
inline LabeledSample sample_sbm(const SbmSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Index n = spec.n;
  const auto cum = detail::cumulative(spec.weights);
  LabeledSample out;
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    Stream rng(seed, i);
    out.labels[i] = static_cast<int>(detail::pick(cum, rng.uniform()) + 1);
  }
  Matrix A = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) {
    Stream rng(seed, n + i);
    const auto a = static_cast<Eigen::Index>(out.labels[i] - 1);
    for (Index j = i + 1; j < n; ++j) {
      const double p = spec.prob(a, out.labels[j] - 1);
      if (rng.coin(p))
        A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
    }
  }
  out.points = PointSet(std::move(A));
  out.seed = seed;
  out.sbm = spec;
  return out;
}

struct SbmSeparation {
  bool holds = true;
  double lhs = 0.0;  // min over block pairs of (P_aa - P_ab)^2 / P_max
  double rhs = 0.0;  // 400 max(gamma^2, ln n / w0^2) / n
};

inline SbmSeparation check_sbm_separation(const SbmSpec& spec, double gamma, double w0) {
  spec.validate();
  if (!(gamma > 0.0)) throw Error("bad-gamma", "gamma must be positive");
  if (!(w0 > 0.0 && w0 <= 1.0)) throw Error("bad-weight", "w0 must lie in (0,1]");
  SbmSeparation out;
  const double n = static_cast<double>(spec.n);
  out.rhs = 400.0 * std::max(gamma * gamma, std::log(n) / (w0 * w0)) / n;
  const double pmax = spec.prob.maxCoeff();
  out.lhs = std::numeric_limits<double>::infinity();
  const auto k = spec.prob.rows();
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) {
      if (a == b) continue;
      const double gap = spec.prob(a, a) - spec.prob(a, b);
      out.lhs = std::min(out.lhs, pmax > 0.0 ? gap * gap / pmax : 0.0);
    }
  out.holds = out.lhs >= out.rhs;
  return out;
}

namespace detail {

inline Index sample_size(double value) {
  if (!std::isfinite(value)) throw Error("bad-argument", "sample size overflow");
  return std::max<Index>(1, static_cast<Index>(std::ceil(value - 1e-9)));
}

}  // namespace detail

/// ceil(100 ln(ceil(1/w0)) 100 kappa^4 d^2 / w0), at least 1.
inline Index recommended_sample_size_subgaussian(double kappa, Index d, double w0) {
  if (!(kappa >= 1.0) || d < 1 || !(w0 > 0.0 && w0 <= 1.0)) throw Error("bad-argument");
  const double k = std::ceil(1.0 / w0 - 1e-12);
  const double sc = 100.0 * std::pow(kappa, 4.0) * static_cast<double>(d) * static_cast<double>(d);
  return detail::sample_size(100.0 * std::log(k) * sc / w0);
}

/// ceil(100 ln(ceil(1/w0)) sc_max / w0), at least 1.
inline Index recommended_sample_size_generic(double sc_max, double w0) {
  if (!(sc_max > 0.0) || !(w0 > 0.0 && w0 <= 1.0)) throw Error("bad-argument");
  const double k = std::ceil(1.0 / w0 - 1e-12);
  return detail::sample_size(100.0 * std::log(k) * sc_max / w0);
}

struct AntiConcentrationReport {
  bool holds = true;
  Index directions = 0;
  double worst_peak = 0.0;   // peak marginal density at the worst direction
  double worst_bound = 0.0;  // 4 / s^2 there
};

/// Checks peak density <= 4 / s(u)^2 for the normal marginals along sampled
/// directions u (plus the extreme eigen-directions). The peak is the maximum
/// of the marginal density over `grid` evenly spaced points in [-4s, 4s].
inline AntiConcentrationReport check_anti_concentration(const MixtureSpec& spec, Index component,
                                                        Index directions, Index grid,
                                                        std::uint64_t seed = 0) {
  spec.validate();
  if (component >= spec.components.size()) throw Error("bad-index", std::to_string(component));
  const auto& comp = spec.components[component];
  if (comp.kind != ComponentKind::gaussian) throw Error("analytic-check-unsupported", to_string(comp.kind));
  if (grid < 1) throw Error("bad-argument", "grid must be positive");

  std::vector<Vector> dirs;
  Eigen::SelfAdjointEigenSolver<Matrix> es(comp.covariance);
  const auto d = comp.covariance.rows();
  dirs.push_back(es.eigenvectors().col(0));
  dirs.push_back(es.eigenvectors().col(d - 1));
  Stream rng(seed);
  for (Index k = 0; k < directions; ++k) {
    Vector u(d);
    for (Eigen::Index j = 0; j < d; ++j) u(j) = rng.normal();
    if (u.norm() > 0.0) dirs.push_back(u.normalized());
  }

  AntiConcentrationReport out;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (const auto& u : dirs) {
    const double var = std::max(u.dot(comp.covariance * u), 0.0);
    const double s = std::sqrt(var);
    double peak = std::numeric_limits<double>::infinity();
    if (s > 0.0) {
      peak = 0.0;
      for (Index g = 0; g < grid; ++g) {
        const double x = grid == 1 ? 0.0 : -4.0 * s + 8.0 * s * static_cast<double>(g) / static_cast<double>(grid - 1);
        peak = std::max(peak, std::exp(-0.5 * x * x / var) / (s * std::sqrt(2.0 * std::numbers::pi)));
      }
    }
    const double bound = var > 0.0 ? 4.0 / var : std::numeric_limits<double>::infinity();
    const double slack = var > 0.0 ? bound - peak : -std::numeric_limits<double>::infinity();
    if (slack < worst_slack) {
      worst_slack = slack;
      out.worst_peak = peak;
      out.worst_bound = bound;
    }
    if (!(var > 0.0) || !(peak <= bound)) out.holds = false;
  }
  out.directions = dirs.size();
  return out;
}

}  // namespace kfinder
