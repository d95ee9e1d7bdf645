#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "test_util.hpp"

using namespace kfinder;

namespace {

// Optimal 2-means cost by enumerating every bipartition.
double optimal_two_means(const oracle::Rows& x) {
  const std::size_t n = x.size();
  double best = INFINITY;
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    double cost = 0.0;
    for (int side = 0; side < 2; ++side) {
      oracle::Rows part;
      for (std::size_t i = 0; i < n; ++i)
        if (((mask >> i) & 1u) == static_cast<std::uint32_t>(side)) part.push_back(x[i]);
      const auto mu = oracle::column_mean(part);
      for (const auto& r : part) cost += oracle::sq_dist(r, mu);
    }
    best = std::min(best, cost);
  }
  return best;
}

// Exact cover by trying every h-subset of the sets.
bool has_cover_by_enumeration(const ThreeCoverInstance& inst) {
  bool found = false;
  oracle::for_each_subset(inst.sets.size(), inst.universe / 3, [&](const std::vector<std::size_t>& s) {
    std::vector<int> hit(inst.universe, 0);
    for (auto i : s)
      for (Index e : inst.sets[i]) ++hit[e];
    if (std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; })) found = true;
  });
  return found;
}

}  // namespace

TEST(Lloyd, CostTraceAndAssignment) {
  std::mt19937_64 g(101);
  auto p = testutil::to_points(oracle::random_rows(g, 200, 3));
  auto r = lloyd_kmeans(p, 4, 3, 7);
  for (std::size_t i = 1; i < r.cost_trace.size(); ++i) EXPECT_LE(r.cost_trace[i], r.cost_trace[i - 1] + 1e-9);
  double recomputed = 0.0;
  for (Index i = 0; i < 200; ++i) {
    const Vector x = p.point(i).transpose();
    double nearest = INFINITY;
    for (Eigen::Index c = 0; c < 4; ++c) nearest = std::min(nearest, (x - r.centers.row(c).transpose()).squaredNorm());
    const double mine = (x - r.centers.row(static_cast<Eigen::Index>(r.assignment[i])).transpose()).squaredNorm();
    EXPECT_LE(mine, nearest + 1e-9);
    recomputed += mine;
  }
  EXPECT_NEAR(recomputed, r.cost, 1e-9 * r.cost);
  // Every center is the mean of its points.
  auto clusters = r.clusters();
  ASSERT_EQ(clusters.size(), 4u);
}

TEST(Lloyd, KEqualsNHasZeroCost) {
  auto p = testutil::points({{0, 0}, {1, 0}, {0, 5}});
  EXPECT_NEAR(lloyd_kmeans(p, 3, 2, 1).cost, 0.0, 1e-12);
  EXPECT_THROW(lloyd_kmeans(p, 4, 1, 1), Error);
  EXPECT_THROW(lloyd_kmeans(p, 0, 1, 1), Error);
}

TEST(Lloyd, MatchesEnumeratedTwoMeans) {
  std::mt19937_64 g(103);
  for (int t = 0; t < 20; ++t) {
    auto rows = oracle::random_rows(g, 9, 2);
    auto p = testutil::to_points(rows);
    const double opt = optimal_two_means(rows);
    const double got = lloyd_kmeans(p, 2, 20, static_cast<std::uint64_t>(t)).cost;
    EXPECT_GE(got, opt - 1e-9);
    EXPECT_NEAR(got, opt, 1e-9 * (1 + opt)) << "trial " << t;
  }
}

TEST(Lloyd, DeterministicAcrossThreadCounts) {
  std::mt19937_64 g(107);
  auto p = testutil::to_points(oracle::random_rows(g, 300, 4));
  auto one = lloyd_kmeans(p, 5, 6, 3);
  setenv("K_FINDER_THREADS", "4", 1);
  auto four = lloyd_kmeans(p, 5, 6, 3);
  unsetenv("K_FINDER_THREADS");
  EXPECT_EQ(one.cost, four.cost);
  EXPECT_EQ(one.assignment, four.assignment);
}

TEST(Elbow, ThreeSeparatedBlobs) {
  auto s = testutil::three_gaussians(300, 5, 40.0, 13);
  auto r = elbow_estimate(s.points, 6, 5, 1);
  EXPECT_EQ(r.k_star, 3u);
  ASSERT_EQ(r.deltas.size(), 6u);
  ASSERT_EQ(r.ratios.size(), 5u);
  for (std::size_t k = 1; k < r.deltas.size(); ++k) EXPECT_LE(r.deltas[k], r.deltas[k - 1]);
  EXPECT_THROW(elbow_estimate(s.points, 1, 1, 1), Error);
}

TEST(Elbow, CoincidentGroupsGiveInfiniteRatio) {
  PointSet p = testutil::coincident_groups({10, 10});
  auto r = elbow_estimate(p, 4, 2, 0);
  EXPECT_EQ(r.k_star, 2u);
  EXPECT_TRUE(std::isinf(r.ratios[0]));
  EXPECT_EQ(r.ratios[1], 1.0);  // zero over zero
}

TEST(ThreeCover, GeneratorsAndSolver) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto yes = generate_three_cover(9, true, seed);
    yes.validate();
    EXPECT_EQ(yes.sets.size(), 9u);
    auto cover = find_exact_cover(yes);
    ASSERT_TRUE(cover);
    std::vector<int> hit(9, 0);
    for (Index s : *cover)
      for (Index e : yes.sets[s]) ++hit[e];
    for (int h : hit) EXPECT_EQ(h, 1);

    auto no = generate_three_cover(9, false, seed);
    no.validate();
    EXPECT_FALSE(find_exact_cover(no));
    EXPECT_FALSE(has_cover_by_enumeration(no));
  }
}

TEST(ThreeCover, SolverAgreesWithEnumeration) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = generate_three_cover(12, seed % 2 == 0, seed);
    EXPECT_EQ(find_exact_cover(inst).has_value(), has_cover_by_enumeration(inst)) << "seed " << seed;
  }
}

TEST(ThreeCover, Malformed) {
  ThreeCoverInstance bad;
  bad.universe = 3;
  bad.sets = {{0, 1, 2}};
  EXPECT_THROW(bad.validate(), Error);
  bad.universe = 4;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(generate_three_cover(10, true, 0), Error);
}

TEST(ThreeCover, ReductionValues) {
  auto yes = generate_three_cover(9, true, 5);
  auto inst = build_checkntsc_instance(yes);
  EXPECT_EQ(inst.h, 3u);
  EXPECT_EQ(inst.points.size(), 9u);
  EXPECT_EQ(inst.points.dim(), 9u);
  const double v = std::sqrt(3.0 / 3.0);
  for (Index s = 0; s < 9; ++s) {
    EXPECT_NEAR(inst.points.point(s).sum(), 3 * v, 1e-12);
    EXPECT_NEAR(inst.points.point(s).maxCoeff(), v, 1e-12);
  }
  // Cover points have disjoint supports and norm sqrt(h), so sigma is exactly 1.
  auto cover = *find_exact_cover(yes);
  EXPECT_NEAR(sigma(inst.points, cover), 1.0, 1e-12);
  auto d = check_ntsc_decision_bruteforce(inst.points, inst.h);
  EXPECT_TRUE(d.decision);
  EXPECT_LE(d.best_sigma, 1.0 + 1e-9);
}

TEST(ThreeCover, BruteForceLimits) {
  auto p = testutil::coincident_groups({30}, 2);
  EXPECT_THROW(check_ntsc_decision_bruteforce(p, 15), Error);
  EXPECT_THROW(check_ntsc_decision_bruteforce(p, 0), Error);
  auto small = testutil::points({{0}, {0}, {4}});
  auto d = check_ntsc_decision_bruteforce(small, 2);
  EXPECT_EQ(d.best, (IndexSet{0, 1}));
  EXPECT_EQ(d.best_sigma, 0.0);
}

TEST(Tightness, HighDimensionalContrast) {
  auto t = tightness_contrast_demo(3);
  EXPECT_TRUE(t.in_regime);
  // The whole set is much wider than either component along the gap...
  EXPECT_GT(t.sigma_ratio, 5.0);
  // ...while average 1-means costs barely move.
  EXPECT_NEAR(t.half_ratio, 1.0, 0.05);
  EXPECT_GT(t.component_ratio, 0.5);
  EXPECT_FALSE(tightness_contrast_demo(3, 20, 20.0, 400).in_regime);
}
