#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace kfinder;
using testutil::points;

TEST(PointSet, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(PointSet(Matrix(0, 2)), Error);
  Matrix bad(1, 2);
  bad << 1.0, std::nan("");
  try {
    PointSet p(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "non-finite");
  }
}

TEST(Mean, Examples) {
  auto a = points({{0, 0}});
  EXPECT_EQ(mean(a, IndexSet{0}), Vector::Zero(2));
  auto b = points({{1, 0}, {-1, 0}});
  EXPECT_EQ(mean(b), Vector::Zero(2));
  auto c = points({{0, 0}, {2, 0}, {1, 3}});
  EXPECT_DOUBLE_EQ(mean(c)(0), 1.0);
  EXPECT_DOUBLE_EQ(mean(c)(1), 1.0);
}

TEST(Mean, EmptySubset) {
  auto a = points({{0, 0}});
  try {
    mean(a, IndexSet{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty-subset");
  }
}

TEST(Sigma, Examples) {
  EXPECT_EQ(sigma(points({{5, 5}})), 0.0);
  EXPECT_NEAR(sigma(points({{1, 0}, {-1, 0}})), 1.0, 1e-12);
  EXPECT_NEAR(sigma(points({{1, 0}, {-1, 0}, {0, 1}, {0, -1}})), std::sqrt(0.5), 1e-9);
}

TEST(DirectionalSigma, Examples) {
  auto p = points({{1, 0}, {-1, 0}});
  Vector ey(2), ex(2);
  ey << 0, 1;
  ex << 1, 0;
  EXPECT_NEAR(directional_sigma(p, p.all(), ey), 0.0, 1e-15);
  EXPECT_NEAR(directional_sigma(p, p.all(), ex), 1.0, 1e-15);
  auto q = points({{1, 1}, {-1, -1}});
  Vector diag(2);
  diag << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  EXPECT_NEAR(directional_sigma(q, q.all(), diag), std::sqrt(2.0), 1e-12);
  Vector notunit(2);
  notunit << 1, 1;
  try {
    directional_sigma(q, q.all(), notunit);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "not-unit-vector");
  }
}

TEST(Sigma, MatchesJacobiOracle) {
  std::mt19937_64 g(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + g() % 30, d = 1 + g() % 6;
    auto rows = oracle::random_rows(g, n, d, 1.0 + static_cast<double>(g() % 5));
    const double want = oracle::sigma(rows);
    const double got = sigma(testutil::to_points(rows));
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, want)) << "n=" << n << " d=" << d;
  }
}

TEST(Sigma, MaxOverRandomDirections) {
  std::mt19937_64 g(5);
  auto p = testutil::to_points(oracle::random_rows(g, 25, 4));
  std::normal_distribution<double> nd;
  double best = 0.0;
  for (int t = 0; t < 10000; ++t) {
    Vector u(4);
    for (int j = 0; j < 4; ++j) u(j) = nd(g);
    best = std::max(best, directional_sigma(p, p.all(), u.normalized()));
  }
  const double s = sigma(p);
  EXPECT_LE(best, s + 1e-9);
  EXPECT_GE(best, 0.98 * s);
}

TEST(Sigma, SubsetMonotonicityAndMeanGap) {
  std::mt19937_64 g(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + g() % 29, d = 1 + g() % 6;
    auto p = testutil::to_points(oracle::random_rows(g, n, d, 3.0));
    const double sx = sigma(p);
    auto S = testutil::random_subset(g, n, 1 + g() % n);
    const double ss = sigma(p, S);
    EXPECT_LE(S.size() * ss * ss, n * sx * sx + 1e-9);

    auto R = testutil::random_subset(g, n, 1 + g() % n);
    IndexSet both;
    std::set_intersection(R.begin(), R.end(), S.begin(), S.end(), std::back_inserter(both));
    if (both.empty()) continue;
    const double sr = sigma(p, R);
    const double gap2 = (mean(p, R) - mean(p, S)).squaredNorm();
    EXPECT_LE(gap2, 2.0 / both.size() * (R.size() * sr * sr + S.size() * ss * ss) + 1e-9);
  }
}

TEST(Sigma, TranslationAndScaling) {
  std::mt19937_64 g(8);
  auto rows = oracle::random_rows(g, 20, 3);
  auto p = testutil::to_points(rows);
  Matrix shifted = p.matrix();
  shifted.rowwise() += Eigen::RowVector3d(100.0, -7.0, 3.5);
  EXPECT_NEAR(sigma(PointSet(shifted)), sigma(p), 1e-9);
  EXPECT_NEAR(sigma(PointSet(-2.5 * p.matrix())), 2.5 * sigma(p), 1e-9 * sigma(p));
}

TEST(SvdSubspace, AxisData) {
  auto p = points({{1, 0}, {-3, 0}, {2, 0}});
  Subspace s = svd_subspace(p, 1);
  EXPECT_NEAR(std::abs(s.basis()(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(s.basis()(0, 1), 0.0, 1e-12);
}

TEST(SvdSubspace, FullRankIsIdentity) {
  auto p = points({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}});
  Subspace s = svd_subspace(p, 3);
  PointSet q = project(s, p);
  EXPECT_LT((q.matrix() - p.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SvdSubspace, ResidualMatchesOracle) {
  std::mt19937_64 g(21);
  for (int t = 0; t < 20; ++t) {
    auto rows = oracle::random_rows(g, 20, 5);
    auto p = testutil::to_points(rows);
    Subspace s = svd_subspace(p, 2);
    Matrix basis_check = s.basis() * s.basis().transpose();
    EXPECT_LT((basis_check - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-9);
    const double residual = (p.matrix() - project(s, p).matrix()).squaredNorm();
    // Optimal rank-2 residual: sum of the three smallest eigenvalues of A^T A.
    oracle::Rows gram(5, std::vector<double>(5, 0.0));
    for (const auto& r : rows)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) gram[i][j] += r[i] * r[j];
    auto ev = oracle::jacobi_eigenvalues(gram);
    const double want = ev[0] + ev[1] + ev[2];
    EXPECT_NEAR(std::sqrt(residual), std::sqrt(want), 1e-6 * std::sqrt(want));
  }
}

TEST(SvdSubspace, BadRank) {
  auto p = points({{1, 0}, {0, 1}});
  for (Index r : {Index{0}, Index{3}}) {
    try {
      svd_subspace(p, r);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "bad-rank");
    }
  }
}

TEST(Project, ExamplesAndIdempotence) {
  auto p = points({{3, 4}});
  Subspace e1(Matrix::Identity(1, 2));
  PointSet q = project(e1, p);
  EXPECT_EQ(q.point(0)(0), 3.0);
  EXPECT_EQ(q.point(0)(1), 0.0);

  std::mt19937_64 g(4);
  auto r = testutil::to_points(oracle::random_rows(g, 15, 6));
  Subspace s = svd_subspace(r, 3);
  PointSet once = project(s, r), twice = project(s, once);
  EXPECT_LT((once.matrix() - twice.matrix()).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + once.matrix().cwiseAbs().maxCoeff()));

  auto wrong = points({{1, 2, 3}});
  try {
    project(e1, wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "dim-mismatch");
  }
}

TEST(Project, CoordinatesPreserveSigma) {
  std::mt19937_64 g(9);
  auto p = testutil::to_points(oracle::random_rows(g, 30, 6));
  Subspace s = svd_subspace(p, 2);
  EXPECT_NEAR(sigma(project(s, p)), sigma(project_coordinates(s, p)), 1e-9);
}
