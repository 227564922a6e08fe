#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "radfuse/geometry.hpp"
#include "radfuse/image.hpp"

namespace radfuse {

/// Pixel rectangle [u0, u0 + w) x [v0, v0 + h).
struct PatchRect {
  int u0 = 0;
  int v0 = 0;
  int w = 1;
  int h = 1;

  bool contains(int u, int v) const noexcept { return u >= u0 && v >= v0 && u < u0 + w && v < v0 + h; }
  std::size_t area() const noexcept { return static_cast<std::size_t>(w) * static_cast<std::size_t>(h); }
  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

/// Per-pixel association confidence of one radar point over its patch.
struct ConfidenceMap {
  std::size_t point_index = 0;
  PatchRect rect;
  std::vector<double> values;  // row-major, rect.w * rect.h, each in [0, 1]

  double at(int u, int v) const {
    return values[static_cast<std::size_t>(v - rect.v0) * static_cast<std::size_t>(rect.w) +
                  static_cast<std::size_t>(u - rect.u0)];
  }
};

enum class Label : std::uint8_t { kNegative = 0, kPositive = 1, kIgnore = 2 };

struct AssociationLabels {
  std::size_t point_index = 0;
  PatchRect rect;
  std::vector<Label> labels;  // row-major, rect.w * rect.h

  Label at(int u, int v) const {
    return labels[static_cast<std::size_t>(v - rect.v0) * static_cast<std::size_t>(rect.w) +
                  static_cast<std::size_t>(u - rect.u0)];
  }
};

/// Patch of nominal size w x h centered on the projected point, clipped to
/// the image. The top-left corner before clipping is (u - w/2, v - h/2) with
/// integer division.
PatchRect crop_patch_rect(const ProjectedPoint& entry, int patch_w, int patch_h, const CameraModel& cam);

/// Default spatial bandwidth: half the nominal patch half-diagonal.
double default_sigma_uv(int patch_w, int patch_h);

/// Deterministic stand-in for a learned association network:
///   c(x) = exp(-(dga(x) - d)^2 / (2 sd^2)) * exp(-|x - x_p|^2 / (2 suv^2))
/// where x_p is the projected pixel. Pixels with invalid guidance get 0.
ConfidenceMap heuristic_confidence(const PatchRect& rect, const ProjectedPoint& entry, const DepthImage& guide,
                                   double sigma_d, double sigma_uv);

struct LoadedConfidence {
  std::vector<ConfidenceMap> maps;  // ascending point_index
  std::size_t clamped_values = 0;
};

/// Reads `<directory>/<frame_id>.json`:
///   {"maps": [{"point_index": i, "u0": .., "v0": .., "w": .., "h": .., "pfm_path": "..."}, ...]}
/// `pfm_path` is relative to the directory. Values outside [0, 1] are clamped
/// and counted. Throws kFormat naming the offending file.
LoadedConfidence load_external_confidence(const std::filesystem::path& directory, const std::string& frame_id,
                                          int image_width, int image_height);

/// Writes maps in the layout read by load_external_confidence.
void write_external_confidence(const std::filesystem::path& directory, const std::string& frame_id,
                               std::span<const ConfidenceMap> maps);

/// Confidence-weighted average of candidate radar depths per pixel, over
/// candidates with confidence strictly above tau. `point_depths[i]` is the
/// depth of point i. Accumulation runs in ascending point_index so the result
/// does not depend on the order of `maps`.
DepthImage quasi_dense_depth(std::span<const ConfidenceMap> maps, std::span<const double> point_depths, double tau,
                             int width, int height);

/// Positive where |d_int - radar_depth| < tol, negative where d_int is valid
/// otherwise, ignore where d_int is invalid.
AssociationLabels make_association_labels(const DepthImage& d_int, const PatchRect& rect, double radar_depth,
                                          double tol = 0.5);

/// Mean binary cross-entropy over labeled (non-ignore) pixels, with the
/// prediction clamped to [eps, 1 - eps]. Throws kUndefined when nothing is
/// labeled.
double bce_score(const ConfidenceMap& conf, const AssociationLabels& labels, double eps = 1e-7);

}  // namespace radfuse
