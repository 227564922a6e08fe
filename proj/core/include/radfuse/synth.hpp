#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "radfuse/geometry.hpp"
#include "radfuse/image.hpp"

namespace radfuse {

// Scene primitives, in camera coordinates (x right, y down, z forward).

/// Level ground plane at y = height (the camera sits `height` meters above it).
struct GroundPlane {
  double height = 1.5;
};
/// Fronto-parallel rectangle [x0, x1] x [y0, y1] at constant depth.
struct FrontalBox {
  double x0 = -1.0, x1 = 1.0;
  double y0 = -1.0, y1 = 1.0;
  double depth = 10.0;
};
/// Fronto-parallel plane covering the whole view.
struct BackgroundPlane {
  double depth = 60.0;
};
using Primitive = std::variant<GroundPlane, FrontalBox, BackgroundPlane>;

struct RadarSimSpec {
  std::size_t n_points = 200;
  double depth_noise_sigma = 0.0;  // m
  double outlier_rate = 0.0;       // fraction of points, rounded to a count
  double outlier_scale = 5.0;
  double row_bias = 2.0;  // sampling weight grows linearly to 1 + row_bias at the bottom row
};

struct MonoCorruption {
  double global_scale = 1.0;  // a
  double amplitude = 0.0;     // epsilon, in [0, 0.5)
  double wavelength = 160.0;  // pixels
};

/// Scan-line LiDAR stand-in: every row_step-th row, every col_step-th column.
/// row_step = 0 disables it.
struct LidarSimSpec {
  int row_step = 0;
  int col_step = 1;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  CameraModel camera{200.0, 200.0, 128.0, 96.0, 256, 192};
  RigidTransform cam_from_radar;
  std::vector<Primitive> layout;
  RadarSimSpec radar;
  MonoCorruption mono;
  LidarSimSpec lidar;
  double guide_noise = 0.02;
  double max_range = 100.0;  // m; ground hits beyond this are ignored
};

struct FrameBundle {
  DepthImage gt_depth;     // dense
  DepthImage mono_depth;   // scale-free, positive everywhere
  DepthImage guide_image;  // thermal stand-in in (0, 1]
  DepthImage lidar_depth;  // sparse scan-line ground truth (empty when disabled)
  RadarPointCloud cloud;   // radar frame
  Calibration calib;
};

/// Radar axes (x forward, y left, z up) to camera axes, plus a small lever arm.
RigidTransform default_cam_from_radar();

/// Z-depth of the nearest primitive hit per pixel center. Throws kDegenerate
/// for an empty layout or when some pixel sees no primitive.
DepthImage render_depth(const CameraModel& cam, const std::vector<Primitive>& layout, double max_range = 100.0);

/// Band-limited field in [-1, 1]: the mean of four plane waves with seeded
/// orientations and phases, wavelengths wavelength * {1, 1.3, 0.8, 1.7}.
std::vector<double> smooth_field(int width, int height, double wavelength, std::uint64_t seed);

/// mono = a * gt * (1 + eps * f). Throws kParameter for a <= 0 or eps outside [0, 0.5).
DepthImage corrupt_mono(const DepthImage& gt, const MonoCorruption& corruption, std::uint64_t seed);

struct SampledRadar {
  RadarPointCloud cloud;
  std::vector<ProjectedPoint> truth;  // sampled pixel and its ground-truth depth, per cloud point
};

/// Draws pixels without replacement (weighted toward lower rows), perturbs
/// their depth, scales a fixed count of outliers, back-projects through the
/// camera and maps into the radar frame.
SampledRadar sample_radar(const DepthImage& gt, const CameraModel& cam, const RigidTransform& cam_from_radar,
                          const RadarSimSpec& spec, std::uint64_t seed);

DepthImage sample_lidar(const DepthImage& gt, const LidarSimSpec& spec);

FrameBundle generate_scene(const SceneSpec& spec);

SceneSpec parse_scene_spec(const std::string& json_text, const std::string& name = "<memory>");
std::string serialize_scene_spec(const SceneSpec& spec);

/// Random street-like layout: a background wall and three to five boxes at
/// distinct depths, optionally a ground plane. Used by tests and `simulate --random`.
struct RandomSceneOptions {
  int width = 256;
  int height = 192;
  bool ground = false;
  RadarSimSpec radar;
  MonoCorruption mono;
  LidarSimSpec lidar;
};
SceneSpec random_scene_spec(std::uint64_t seed, const RandomSceneOptions& options);

}  // namespace radfuse
