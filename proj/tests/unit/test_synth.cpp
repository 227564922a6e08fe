#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "radfuse/geometry.hpp"
#include "radfuse/synth.hpp"
#include "test_support.hpp"

using namespace radfuse;

namespace {

const CameraModel kCam{80.0, 80.0, 40.0, 30.0, 80, 60};

}  // namespace

TEST(Render, BackgroundIsConstant) {
  const DepthImage d = render_depth(kCam, {BackgroundPlane{42.0}});
  EXPECT_EQ(d.valid_count(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.at(i), 42.0);
}

TEST(Render, GroundPlaneClosedForm) {
  const DepthImage d = render_depth(kCam, {GroundPlane{1.5}, BackgroundPlane{90.0}});
  for (int v = 0; v < kCam.height; ++v) {
    const double ry = (v - kCam.cy) / kCam.fy;
    const double expect = ry > 0.0 && 1.5 / ry <= 90.0 ? 1.5 / ry : 90.0;
    EXPECT_NEAR(d.at(5, v), expect, 1e-12) << v;
  }
}

TEST(Render, BoxOccludesBackground) {
  const DepthImage d = render_depth(kCam, {BackgroundPlane{50.0}, FrontalBox{-1, 1, -1, 1, 10.0}});
  EXPECT_EQ(d.at(40, 30), 10.0);  // center ray hits the box
  EXPECT_EQ(d.at(0, 0), 50.0);
}

TEST(Render, Errors) {
  EXPECT_RADFUSE_ERROR(render_depth(kCam, {}), kDegenerate);
  EXPECT_RADFUSE_ERROR(render_depth(kCam, {FrontalBox{-1, 1, -1, 1, 10.0}}), kDegenerate);
  EXPECT_RADFUSE_ERROR(render_depth(kCam, {BackgroundPlane{-1.0}}), kParameter);
  EXPECT_RADFUSE_ERROR(render_depth(kCam, {GroundPlane{0.0}}), kParameter);
}

TEST(Mono, ZeroAmplitudeIsExactScale) {
  const DepthImage gt = render_depth(kCam, {GroundPlane{1.5}, BackgroundPlane{60.0}});
  const DepthImage m = corrupt_mono(gt, {2.0, 0.0, 100.0}, 1);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_EQ(m.at(i), 2.0 * gt.at(i));
}

TEST(Mono, RatioWithinAmplitudeBand) {
  const DepthImage gt = render_depth(kCam, {BackgroundPlane{60.0}});
  const DepthImage m = corrupt_mono(gt, {1.0, 0.1, 30.0}, 9);
  double lo = 1e9, hi = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double r = m.at(i) / gt.at(i);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_GE(lo, 0.9 - 1e-12);
  EXPECT_LE(hi, 1.1 + 1e-12);
  EXPECT_GT(hi - lo, 0.02);  // the field is not flat
}

TEST(Mono, ParameterChecks) {
  const DepthImage gt = render_depth(kCam, {BackgroundPlane{60.0}});
  EXPECT_RADFUSE_ERROR(corrupt_mono(gt, {1.0, 0.5, 30.0}, 1), kParameter);
  EXPECT_RADFUSE_ERROR(corrupt_mono(gt, {0.0, 0.1, 30.0}, 1), kParameter);
  EXPECT_RADFUSE_ERROR(corrupt_mono(gt, {1.0, -0.1, 30.0}, 1), kParameter);
  EXPECT_RADFUSE_ERROR(smooth_field(10, 10, 0.0, 1), kParameter);
}

TEST(SmoothField, BoundedAndSeeded) {
  const auto a = smooth_field(64, 48, 40.0, 3);
  const auto b = smooth_field(64, 48, 40.0, 3);
  const auto c = smooth_field(64, 48, 40.0, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (double x : a) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Radar, NoiselessRoundTrip) {
  const DepthImage gt = render_depth(kCam, {GroundPlane{1.5}, FrontalBox{-2, 2, -2, 1.5, 12.0}, BackgroundPlane{60.0}});
  RadarSimSpec spec;
  spec.n_points = 150;
  const SampledRadar s = sample_radar(gt, kCam, default_cam_from_radar(), spec, 5);
  ASSERT_EQ(s.cloud.size(), 150u);
  const auto proj = project_points(s.cloud, default_cam_from_radar(), kCam);
  ASSERT_EQ(proj.entries.size(), 150u);
  for (std::size_t k = 0; k < proj.entries.size(); ++k) {
    EXPECT_EQ(proj.entries[k].u, s.truth[k].u);
    EXPECT_EQ(proj.entries[k].v, s.truth[k].v);
    EXPECT_NEAR(proj.entries[k].depth, s.truth[k].depth, 1e-6);
  }
}

TEST(Radar, OutlierRateOneScalesEveryPoint) {
  const DepthImage gt = render_depth(kCam, {BackgroundPlane{20.0}});
  RadarSimSpec spec;
  spec.n_points = 40;
  spec.outlier_rate = 1.0;
  spec.outlier_scale = 3.0;
  const SampledRadar s = sample_radar(gt, kCam, RigidTransform::identity(), spec, 2);
  for (const auto& p : s.cloud.points) EXPECT_NEAR(p.z, 60.0, 1e-9);
}

TEST(Radar, NoiseStandardDeviation) {
  const DepthImage gt = render_depth(kCam, {BackgroundPlane{40.0}});
  RadarSimSpec spec;
  spec.n_points = 2000;
  spec.depth_noise_sigma = 0.2;
  const SampledRadar s = sample_radar(gt, kCam, RigidTransform::identity(), spec, 8);
  double s1 = 0, s2 = 0;
  for (const auto& p : s.cloud.points) {
    s1 += p.z - 40.0;
    s2 += (p.z - 40.0) * (p.z - 40.0);
  }
  const double n = static_cast<double>(s.cloud.size());
  const double sd = std::sqrt(s2 / n - (s1 / n) * (s1 / n));
  EXPECT_GE(sd, 0.15);
  EXPECT_LE(sd, 0.25);
}

TEST(Radar, RowBiasFavorsLowerRows) {
  const DepthImage gt = render_depth(kCam, {BackgroundPlane{40.0}});
  RadarSimSpec spec;
  spec.n_points = 1500;
  spec.row_bias = 3.0;
  const SampledRadar s = sample_radar(gt, kCam, RigidTransform::identity(), spec, 8);
  std::size_t bottom = 0;
  for (const auto& t : s.truth) bottom += t.v >= kCam.height / 2;
  EXPECT_GT(bottom, s.truth.size() / 2 + 100);
}

TEST(Radar, Errors) {
  const DepthImage gt = render_depth(kCam, {BackgroundPlane{40.0}});
  RadarSimSpec spec;
  spec.n_points = gt.size() + 1;
  EXPECT_RADFUSE_ERROR(sample_radar(gt, kCam, RigidTransform::identity(), spec, 1), kParameter);
  spec.n_points = 10;
  spec.outlier_rate = 1.5;
  EXPECT_RADFUSE_ERROR(sample_radar(gt, kCam, RigidTransform::identity(), spec, 1), kParameter);
  EXPECT_RADFUSE_ERROR(sample_radar(DepthImage(3, 3), kCam, RigidTransform::identity(), {}, 1), kInput);
}

TEST(Lidar, ScanLines) {
  const DepthImage gt = render_depth(kCam, {BackgroundPlane{40.0}});
  const DepthImage l = sample_lidar(gt, {4, 2});
  EXPECT_EQ(sample_lidar(gt, {0, 1}).valid_count(), 0u);
  for (int v = 0; v < kCam.height; ++v)
    for (int u = 0; u < kCam.width; ++u) EXPECT_EQ(l.valid(u, v), v % 4 == 2 && u % 2 == 0);  // rows start half a step down
}

TEST(Scene, DeterministicAndStreamsIndependent) {
  RandomSceneOptions o;
  o.width = 96;
  o.height = 72;
  o.mono = {2.0, 0.1, 60.0};
  o.radar.depth_noise_sigma = 0.2;
  const SceneSpec spec = random_scene_spec(77, o);
  const FrameBundle a = generate_scene(spec);
  const FrameBundle b = generate_scene(spec);
  EXPECT_EQ(a.gt_depth, b.gt_depth);
  EXPECT_EQ(a.mono_depth, b.mono_depth);
  EXPECT_EQ(a.cloud.points, b.cloud.points);

  // Changing the radar configuration must not disturb the monocular field.
  SceneSpec more = spec;
  more.radar.n_points += 50;
  more.radar.outlier_rate = 0.2;
  const FrameBundle c = generate_scene(more);
  EXPECT_EQ(a.mono_depth, c.mono_depth);
  EXPECT_EQ(a.guide_image, c.guide_image);
  EXPECT_NE(a.cloud.size(), c.cloud.size());
}

TEST(Scene, RandomLayoutShape) {
  RandomSceneOptions o;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneSpec s = random_scene_spec(seed, o);
    std::size_t boxes = 0, backgrounds = 0;
    for (const auto& p : s.layout) {
      boxes += std::holds_alternative<FrontalBox>(p);
      backgrounds += std::holds_alternative<BackgroundPlane>(p);
    }
    EXPECT_EQ(backgrounds, 1u);
    EXPECT_GE(boxes, 3u);
    EXPECT_LE(boxes, 5u);
    EXPECT_EQ(s.camera.width, 256);
  }
}

TEST(Scene, SpecJsonRoundTrip) {
  RandomSceneOptions o;
  o.ground = true;
  o.lidar = {3, 2};
  o.mono = {1.7, 0.2, 90.0};
  const SceneSpec s = random_scene_spec(5, o);
  const std::string text = serialize_scene_spec(s);
  const SceneSpec back = parse_scene_spec(text);
  EXPECT_EQ(serialize_scene_spec(back), text);
  EXPECT_EQ(generate_scene(back).mono_depth, generate_scene(s).mono_depth);
}

TEST(Scene, SpecErrors) {
  EXPECT_RADFUSE_ERROR(parse_scene_spec("{"), kFormat);
  EXPECT_RADFUSE_ERROR(parse_scene_spec(R"({"layout": [{"type": "sphere"}]})"), kFormat);
  EXPECT_RADFUSE_ERROR(parse_scene_spec(R"({"camera": {"fx": -1, "fy": 1, "cx": 1, "cy": 1, "width": 4, "height": 4}})"),
                       kFormat);
}
