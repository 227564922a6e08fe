#include "radfuse/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

namespace radfuse {

void CameraModel::validate() const {
  require(std::isfinite(fx) && fx > 0.0 && std::isfinite(fy) && fy > 0.0, ErrorCategory::kParameter,
          "camera focal lengths must be positive");
  require(width >= 1 && height >= 1, ErrorCategory::kParameter, "camera image size must be >= 1");
  require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height, ErrorCategory::kParameter,
          "camera principal point must lie inside the image");
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  require(rotation.allFinite() && translation.allFinite(), ErrorCategory::kParameter,
          "rigid transform has non-finite entries");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= 1e-9, ErrorCategory::kParameter, "rotation is not orthonormal (R^T R != I)");
  require(std::abs(rotation.determinant() - 1.0) <= 1e-9, ErrorCategory::kParameter,
          "rotation determinant is not +1");
}

RigidTransform RigidTransform::from_row_major(const std::vector<double>& m16) {
  require(m16.size() == 16, ErrorCategory::kParameter, "homogeneous transform needs 16 values");
  Eigen::Matrix3d r;
  Eigen::Vector3d t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = m16[static_cast<std::size_t>(4 * i + j)];
    t(i) = m16[static_cast<std::size_t>(4 * i + 3)];
  }
  require(m16[12] == 0.0 && m16[13] == 0.0 && m16[14] == 0.0 && m16[15] == 1.0, ErrorCategory::kParameter,
          "homogeneous transform last row must be 0 0 0 1");
  return RigidTransform(r, t);
}

std::vector<double> RigidTransform::to_row_major() const {
  std::vector<double> m(16, 0.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[static_cast<std::size_t>(4 * i + j)] = rotation_(i, j);
    m[static_cast<std::size_t>(4 * i + 3)] = translation_(i);
  }
  m[15] = 1.0;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

SparseDepthProjection project_points(const RadarPointCloud& cloud, const RigidTransform& extrinsic,
                                     const CameraModel& cam) {
  cam.validate();
  SparseDepthProjection proj;
  proj.width = cam.width;
  proj.height = cam.height;
  proj.entries.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    const Eigen::Vector3d c = extrinsic.apply({p.x, p.y, p.z});
    if (!(c.z() > 0.0) || !c.allFinite()) {
      ++proj.dropped_behind;
      continue;
    }
    const double uf = std::floor(cam.fx * c.x() / c.z() + cam.cx + 0.5);
    const double vf = std::floor(cam.fy * c.y() / c.z() + cam.cy + 0.5);
    if (!(uf >= 0.0 && vf >= 0.0 && uf < cam.width && vf < cam.height)) {
      ++proj.dropped_off_image;
      continue;
    }
    proj.entries.push_back({static_cast<int>(uf), static_cast<int>(vf), c.z(), i});
  }
  return proj;
}

Eigen::Vector3d back_project(double u, double v, double depth, const CameraModel& cam) {
  return {(u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth};
}

DepthImage build_sparse_depth_map(const SparseDepthProjection& proj) {
  DepthImage out(proj.width, proj.height);
  for (const auto& e : proj.entries) {
    require(out.in_bounds(e.u, e.v), ErrorCategory::kParameter, "projection entry outside image");
    if (!out.valid(e.u, e.v) || e.depth < out.at(e.u, e.v)) out.set(e.u, e.v, e.depth);
  }
  return out;
}

DepthImage range_valid_mask(const DepthImage& depth, double lo, double hi) {
  require(lo < hi, ErrorCategory::kParameter, "range_valid_mask requires lo < hi");
  DepthImage out = depth;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.at(i);
    if (out.valid(i) && !(d > lo && d <= hi)) out.invalidate(i);
  }
  return out;
}

SparseDepthProjection range_filter(const SparseDepthProjection& proj, double lo, double hi) {
  require(lo < hi, ErrorCategory::kParameter, "range_filter requires lo < hi");
  SparseDepthProjection out = proj;
  out.entries.clear();
  for (const auto& e : proj.entries) {
    if (e.depth > lo && e.depth <= hi) out.entries.push_back(e);
  }
  return out;
}

}  // namespace radfuse
