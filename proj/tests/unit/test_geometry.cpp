#include <cmath>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "radfuse/geometry.hpp"
#include "radfuse/rng.hpp"
#include "test_support.hpp"

using namespace radfuse;

namespace {

CameraModel cam64() { return {50.0, 50.0, 32.0, 24.0, 64, 48}; }

RigidTransform random_transform(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return RigidTransform(q.toRotationMatrix(), Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
}

}  // namespace

TEST(Camera, ValidateRejectsBadIntrinsics) {
  CameraModel c = cam64();
  EXPECT_NO_THROW(c.validate());
  c.fx = 0.0;
  EXPECT_RADFUSE_ERROR(c.validate(), kParameter);
  c = cam64();
  c.cx = 64.0;
  EXPECT_RADFUSE_ERROR(c.validate(), kParameter);
  c = cam64();
  c.height = 0;
  EXPECT_RADFUSE_ERROR(c.validate(), kParameter);
}

TEST(RigidTransform, RejectsNonRotation) {
  std::vector<double> m{1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  EXPECT_RADFUSE_ERROR(RigidTransform::from_row_major(m), kParameter);
  m = {-1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};  // reflection
  EXPECT_RADFUSE_ERROR(RigidTransform::from_row_major(m), kParameter);
  m = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1};
  EXPECT_RADFUSE_ERROR(RigidTransform::from_row_major(m), kParameter);
  EXPECT_RADFUSE_ERROR(RigidTransform::from_row_major({1, 2, 3}), kParameter);
}

TEST(RigidTransform, InverseAndCompose) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
    EXPECT_LT((a.inverse().apply(a.apply(p)) - p).norm(), 1e-12);
    EXPECT_LT((a.compose(b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
    const auto m = a.to_row_major();
    const RigidTransform back = RigidTransform::from_row_major(m);
    EXPECT_EQ(back.to_row_major(), m);
  }
}

TEST(Projection, IdentityExtrinsicProjectsCenter) {
  RadarPointCloud cloud;
  cloud.points.push_back({0.0, 0.0, 10.0, std::nullopt, std::nullopt});
  const auto proj = project_points(cloud, RigidTransform::identity(), cam64());
  ASSERT_EQ(proj.entries.size(), 1u);
  EXPECT_EQ(proj.entries[0].u, 32);
  EXPECT_EQ(proj.entries[0].v, 24);
  EXPECT_DOUBLE_EQ(proj.entries[0].depth, 10.0);
}

TEST(Projection, CountsDroppedPoints) {
  RadarPointCloud cloud;
  cloud.points.push_back({0.0, 0.0, -1.0, std::nullopt, std::nullopt});   // behind
  cloud.points.push_back({0.0, 0.0, 0.0, std::nullopt, std::nullopt});    // on the camera plane
  cloud.points.push_back({100.0, 0.0, 1.0, std::nullopt, std::nullopt});  // far right
  cloud.points.push_back({1.0, 1.0, 5.0, std::nullopt, std::nullopt});
  const auto proj = project_points(cloud, RigidTransform::identity(), cam64());
  EXPECT_EQ(proj.dropped_behind, 2u);
  EXPECT_EQ(proj.dropped_off_image, 1u);
  ASSERT_EQ(proj.entries.size(), 1u);
  EXPECT_EQ(proj.entries[0].source_index, 3u);
}

TEST(Projection, HalfPixelRoundsUp) {
  // u = 50 * 0.01 / 1 + 32 = 32.5 -> 33
  RadarPointCloud cloud;
  cloud.points.push_back({0.01, -0.01, 1.0, std::nullopt, std::nullopt});
  const auto proj = project_points(cloud, RigidTransform::identity(), cam64());
  ASSERT_EQ(proj.entries.size(), 1u);
  EXPECT_EQ(proj.entries[0].u, 33);
  EXPECT_EQ(proj.entries[0].v, 24);  // 23.5 -> 24
}

TEST(Projection, MatchesBruteForceOracle) {
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const RigidTransform t = random_transform(rng);
    RadarPointCloud cloud;
    for (int i = 0; i < 300; ++i) {
      cloud.points.push_back({rng.normal(0, 10), rng.normal(0, 10), rng.normal(0, 10), std::nullopt, std::nullopt});
    }
    const auto got = project_points(cloud, t, cam64());
    const auto ref = oracle::brute_project(cloud, t.to_row_major(), cam64());
    ASSERT_EQ(got.entries.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(got.entries[i].u, ref[i].u);
      EXPECT_EQ(got.entries[i].v, ref[i].v);
      EXPECT_EQ(got.entries[i].source_index, ref[i].index);
      EXPECT_NEAR(got.entries[i].depth, ref[i].depth, 1e-12);
    }
    EXPECT_EQ(got.entries.size() + got.dropped_behind + got.dropped_off_image, cloud.size());
  }
}

TEST(Projection, BackProjectRoundTrip) {
  const CameraModel cam = cam64();
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const int u = static_cast<int>(rng.below(64));
    const int v = static_cast<int>(rng.below(48));
    const double z = rng.uniform(0.5, 90.0);
    RadarPointCloud cloud;
    const Eigen::Vector3d p = back_project(u, v, z, cam);
    cloud.points.push_back({p.x(), p.y(), p.z(), std::nullopt, std::nullopt});
    const auto proj = project_points(cloud, RigidTransform::identity(), cam);
    ASSERT_EQ(proj.entries.size(), 1u);
    EXPECT_EQ(proj.entries[0].u, u);
    EXPECT_EQ(proj.entries[0].v, v);
    EXPECT_NEAR(proj.entries[0].depth, z, 1e-9);
  }
}

TEST(SparseMap, NearestReturnWins) {
  SparseDepthProjection proj;
  proj.width = 4;
  proj.height = 3;
  proj.entries = {{1, 1, 9.0, 0}, {1, 1, 4.0, 1}, {1, 1, 6.0, 2}, {3, 2, 2.0, 3}};
  const DepthImage m = build_sparse_depth_map(proj);
  EXPECT_EQ(m.valid_count(), 2u);
  EXPECT_DOUBLE_EQ(m.at(1, 1), 4.0);
  EXPECT_DOUBLE_EQ(m.at(3, 2), 2.0);
}

TEST(RangeMask, HalfOpenInterval) {
  DepthImage d(4, 1);
  d.set(0, 0.0 + 1e-12);
  d.set(1, 100.0);
  d.set(2, 100.0000001);
  d.set(3, 50.0);
  const DepthImage m = range_valid_mask(d, 0.0, 100.0);
  EXPECT_TRUE(m.valid(0, 0));
  EXPECT_TRUE(m.valid(1, 0));
  EXPECT_FALSE(m.valid(2, 0));
  EXPECT_TRUE(m.valid(3, 0));
  EXPECT_DOUBLE_EQ(m.at(2, 0), 100.0000001);  // value retained
  EXPECT_RADFUSE_ERROR(range_valid_mask(d, 5.0, 5.0), kParameter);

  SparseDepthProjection p;
  p.width = 4;
  p.height = 1;
  p.entries = {{0, 0, 0.0, 0}, {1, 0, 100.0, 1}, {2, 0, 101.0, 2}};
  const auto f = range_filter(p, 0.0, 100.0);
  ASSERT_EQ(f.entries.size(), 1u);
  EXPECT_EQ(f.entries[0].source_index, 1u);
}

TEST(Image, ConstructionAndMask) {
  EXPECT_RADFUSE_ERROR(DepthImage(0, 3), kParameter);
  DepthImage a(3, 2);
  EXPECT_EQ(a.valid_count(), 0u);
  a.set(2, 1, 5.0);
  EXPECT_TRUE(a.valid(2, 1));
  EXPECT_EQ(a.index(2, 1), 5u);
  a.invalidate(2, 1);
  EXPECT_FALSE(a.valid(2, 1));
  EXPECT_DOUBLE_EQ(a.at(2, 1), 5.0);
  const auto inv = invert(DepthImage::filled(2, 2, 4.0));
  EXPECT_DOUBLE_EQ(inv.at(1, 1), 0.25);
  EXPECT_RADFUSE_ERROR(require_same_shape(DepthImage(2, 2), DepthImage(2, 3), "x"), kInput);
}
