#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "radfuse/align.hpp"
#include "radfuse/rng.hpp"
#include "test_support.hpp"

using namespace radfuse;

TEST(Brent, SmoothQuadratic) {
  const auto r = brent_minimize([](double x) { return (x - 2.5) * (x - 2.5) + 1.0; }, 0.0, 10.0, 1e-10);
  EXPECT_NEAR(r.x, 2.5, 1e-7);
  EXPECT_NEAR(r.fx, 1.0, 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 200);
}

TEST(Brent, NonSmoothKink) {
  const auto r = brent_minimize([](double x) { return std::abs(x - 0.7314); }, 1e-3, 1e3, 1e-12);
  EXPECT_NEAR(r.x, 0.7314, 1e-8);
}

TEST(Brent, MinimumAtBoundary) {
  const auto r = brent_minimize([](double x) { return x; }, 1.0, 2.0, 1e-10);
  EXPECT_NEAR(r.x, 1.0, 1e-7);
}

TEST(Brent, ErrorsOnBadInputs) {
  EXPECT_RADFUSE_ERROR(brent_minimize([](double x) { return x; }, 2.0, 1.0, 1e-6), kParameter);
  EXPECT_RADFUSE_ERROR(brent_minimize([](double x) { return x; }, 0.0, 1.0, 0.0), kParameter);
  EXPECT_RADFUSE_ERROR(
      brent_minimize([](double) { return std::numeric_limits<double>::quiet_NaN(); }, 0.0, 1.0, 1e-6), kNumeric);
}

TEST(Bounds, PercentilesAndFallback) {
  std::vector<ScaleSample> few{{1, 2}, {1, 3}};
  EXPECT_EQ(resolve_bounds(PercentileBounds{}, few), (std::pair<double, double>{1e-3, 1e3}));
  std::vector<ScaleSample> s;
  for (int i = 1; i <= 101; ++i) s.push_back({1.0, static_cast<double>(i)});
  const auto [lo, hi] = resolve_bounds(PercentileBounds{}, s);
  EXPECT_DOUBLE_EQ(lo, 0.2);   // 1st percentile is 2
  EXPECT_DOUBLE_EQ(hi, 1000.0);  // 99th percentile is 100
  EXPECT_EQ(resolve_bounds(FixedBounds{0.5, 4.0}, s), (std::pair<double, double>{0.5, 4.0}));
  EXPECT_RADFUSE_ERROR(resolve_bounds(FixedBounds{0.0, 4.0}, s), kParameter);
}

TEST(GlobalScale, MatchesWeightedMedianOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5 + static_cast<int>(rng.below(200));
    std::vector<ScaleSample> s;
    std::vector<double> mono, radar;
    const double truth = rng.uniform(0.2, 5.0);
    for (int i = 0; i < n; ++i) {
      const double m = rng.uniform(1.0, 60.0);
      double r = truth * m * (1.0 + 0.1 * rng.normal());
      if (rng.uniform() < 0.2) r *= rng.uniform(0.2, 3.0);
      r = std::max(r, 0.1);
      s.push_back({m, r});
      mono.push_back(m);
      radar.push_back(r);
    }
    const AlignmentResult res = solve_global_scale(s);
    const double ref = oracle::weighted_median_scale(mono, radar);
    const double f_ref = oracle::l1_objective(ref, mono, radar);
    EXPECT_LE(res.objective, f_ref * (1 + 1e-9));
    EXPECT_NEAR(alignment_objective(res.scale, s), res.objective, 1e-9 * res.objective);
    EXPECT_EQ(res.n_samples, static_cast<std::size_t>(n));
  }
}

TEST(GlobalScale, ExactScaleRecovered) {
  std::vector<ScaleSample> s;
  for (int i = 1; i <= 20; ++i) s.push_back({static_cast<double>(i), 0.5 * i});
  const auto r = solve_global_scale(s);
  EXPECT_DOUBLE_EQ(r.scale, 0.5);
  EXPECT_DOUBLE_EQ(r.objective, 0.0);
  const auto ri = solve_global_scale(s, {PercentileBounds{}, 1e-10, AlignmentSpace::kInverseDepth});
  EXPECT_NEAR(ri.scale, 0.5, 1e-12);
}

TEST(GlobalScale, EmptyIsDegenerate) {
  EXPECT_RADFUSE_ERROR(solve_global_scale({}), kDegenerate);
}

TEST(GlobalScale, InverseSpaceObjective) {
  std::vector<ScaleSample> s{{2.0, 4.0}, {5.0, 10.0}};
  EXPECT_NEAR(alignment_objective(1.0, s, AlignmentSpace::kInverseDepth),
              std::abs(0.5 - 0.25) + std::abs(0.2 - 0.1), 1e-15);
  EXPECT_DOUBLE_EQ(alignment_objective(1.0, s), 2.0 + 5.0);
}

TEST(AlignGlobal, TwoXMonoGivesHalfScale) {
  DepthImage mono(8, 6);
  for (std::size_t i = 0; i < mono.size(); ++i) mono.set(i, 2.0 * (3.0 + static_cast<double>(i % 7)));
  SparseDepthProjection radar;
  radar.width = 8;
  radar.height = 6;
  for (int k = 0; k < 12; ++k) {
    const int u = k % 8, v = k / 2 % 6;
    radar.entries.push_back({u, v, mono.at(u, v) / 2.0, static_cast<std::size_t>(k)});
  }
  const AlignedDepth a = align_global(mono, radar);
  EXPECT_DOUBLE_EQ(a.result.scale, 0.5);
  for (std::size_t i = 0; i < mono.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.depth.at(i), 0.5 * mono.at(i));
    EXPECT_DOUBLE_EQ(a.inverse_depth.at(i), 1.0 / a.depth.at(i));
  }
}

TEST(AlignGlobal, NoOverlapIsDegenerate) {
  DepthImage mono(4, 4);
  mono.set(0, 0, 3.0);
  SparseDepthProjection radar;
  radar.width = 4;
  radar.height = 4;
  radar.entries.push_back({3, 3, 5.0, 0});
  EXPECT_TRUE(collect_scale_samples(mono, radar).empty());
  EXPECT_RADFUSE_ERROR(alignment_objective(1.0, mono, radar), kDegenerate);
  EXPECT_RADFUSE_ERROR(alignment_objective(0.0, mono, radar), kParameter);
  EXPECT_RADFUSE_ERROR(align_global(mono, radar), kDegenerate);
}

TEST(AlignGlobal, SamplesAreZBuffered) {
  DepthImage mono = DepthImage::filled(4, 4, 2.0);
  SparseDepthProjection radar;
  radar.width = 4;
  radar.height = 4;
  radar.entries = {{1, 1, 9.0, 0}, {1, 1, 3.0, 1}};
  const auto s = collect_scale_samples(mono, radar);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].radar, 3.0);
}
