#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "radfuse/image.hpp"

namespace radfuse {

/// Ideal pinhole camera (no distortion model).
struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws kParameter when any invariant is violated.
  void validate() const;

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

/// Maps points from a source frame (radar) into the camera frame.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  /// Builds from a row-major 4x4 homogeneous matrix; the last row must be 0 0 0 1.
  static RigidTransform from_row_major(const std::vector<double>& m16);
  std::vector<double> to_row_major() const;

  const Eigen::Matrix3d& rotation() const noexcept { return rotation_; }
  const Eigen::Vector3d& translation() const noexcept { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;
  /// (this * other)(p) == this(other(p)).
  RigidTransform compose(const RigidTransform& other) const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// Intrinsics plus the radar-to-camera transform.
struct Calibration {
  CameraModel camera;
  RigidTransform cam_from_radar;
};

struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<double> doppler;  // m/s
  std::optional<double> rcs;      // dB

  friend bool operator==(const RadarPoint&, const RadarPoint&) = default;
};

struct RadarPointCloud {
  std::vector<RadarPoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

struct ProjectedPoint {
  int u = 0;
  int v = 0;
  double depth = 0.0;          // camera-frame z, meters
  std::size_t source_index = 0;  // index into the originating cloud

  friend bool operator==(const ProjectedPoint&, const ProjectedPoint&) = default;
};

/// Radar returns rasterized to integer pixels, in cloud order.
struct SparseDepthProjection {
  int width = 0;
  int height = 0;
  std::vector<ProjectedPoint> entries;
  std::size_t dropped_behind = 0;
  std::size_t dropped_off_image = 0;
};

/// Projects every point with camera-frame z > 0 through the pinhole model,
/// rounding to the nearest pixel center. Points behind the camera or outside
/// the image are counted and dropped.
SparseDepthProjection project_points(const RadarPointCloud& cloud, const RigidTransform& extrinsic,
                                     const CameraModel& cam);

/// Inverse of the pinhole projection for a pixel center at depth z.
Eigen::Vector3d back_project(double u, double v, double depth, const CameraModel& cam);

/// Z-buffer rasterization: the nearest entry wins when several share a pixel.
DepthImage build_sparse_depth_map(const SparseDepthProjection& proj);

/// Keeps only valid pixels with lo < value <= hi. Values are left untouched.
DepthImage range_valid_mask(const DepthImage& depth, double lo, double hi);

/// Same rule applied to projection entries (input order preserved).
SparseDepthProjection range_filter(const SparseDepthProjection& proj, double lo, double hi);

}  // namespace radfuse
