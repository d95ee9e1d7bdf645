#pragma once

#include <random>
#include <vector>

#include "kfinder/kfinder.hpp"
#include "oracles.hpp"

namespace testutil {

inline kfinder::PointSet to_points(const oracle::Rows& rows) {
  kfinder::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return kfinder::PointSet(std::move(m));
}

inline oracle::Rows to_rows(const kfinder::PointSet& p, const kfinder::IndexSet& subset) {
  oracle::Rows out;
  for (auto i : subset) {
    std::vector<double> r(p.dim());
    for (std::size_t j = 0; j < p.dim(); ++j) r[j] = p.point(i)(static_cast<Eigen::Index>(j));
    out.push_back(std::move(r));
  }
  return out;
}

inline kfinder::PointSet points(std::initializer_list<std::initializer_list<double>> rows) {
  oracle::Rows r;
  for (auto row : rows) r.emplace_back(row);
  return to_points(r);
}

/// Random subset of {0..n-1} of the given size, sorted.
inline kfinder::IndexSet random_subset(std::mt19937_64& g, std::size_t n, std::size_t size) {
  kfinder::IndexSet all = kfinder::iota_set(n);
  std::shuffle(all.begin(), all.end(), g);
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

/// Three spherical unit-variance Gaussians with the given pairwise mean gap.
inline kfinder::LabeledSample three_gaussians(std::size_t n, std::size_t d, double gap, std::uint64_t seed) {
  std::vector<kfinder::Vector> means;
  for (int h = 0; h < 3; ++h) {
    kfinder::Vector m = kfinder::Vector::Zero(static_cast<Eigen::Index>(d));
    m(h) = gap / std::sqrt(2.0);
    means.push_back(m);
  }
  return kfinder::sample_gaussian_mixture(kfinder::spherical_mixture(means, 1.0), n, seed);
}

/// Coincident groups at distinct far-apart sites.
inline kfinder::PointSet coincident_groups(const std::vector<std::size_t>& sizes, std::size_t d = 2,
                                           double spacing = 1e6) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  kfinder::Matrix m = kfinder::Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t row = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g)
    for (std::size_t i = 0; i < sizes[g]; ++i, ++row) {
      m(static_cast<Eigen::Index>(row), 0) = spacing * static_cast<double>(g);
      if (d > 1) m(static_cast<Eigen::Index>(row), 1) = static_cast<double>(g % 2) * spacing / 3.0;
    }
  return kfinder::PointSet(std::move(m));
}

}  // namespace testutil
