#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "radfuse/image.hpp"

namespace radfuse {

struct TriangulationVertex {
  int u = 0;
  int v = 0;
  double log_depth = 0.0;
};

/// Delaunay triangulation of the valid pixels of a sparse depth image.
/// Triangles are counter-clockwise in (u, v) and have strictly positive area.
struct TriangulationResult {
  std::vector<TriangulationVertex> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Incremental Bowyer-Watson triangulation over integer pixel sites.
///
/// Sites are inserted in row-major order. Predicates are evaluated exactly in
/// 128-bit integer arithmetic; a site lying exactly on a circumcircle does not
/// invalidate that triangle, which makes cocircular ties deterministic. The
/// hull is closed with a single vertex at infinity, so every hull edge is kept.
///
/// Throws kDegenerate when fewer than three non-collinear sites exist.
TriangulationResult triangulate_log_depth(const DepthImage& sparse);

/// Densifies sparse depth by barycentric interpolation of log-depth over the
/// Delaunay triangulation of its valid pixels, then exponentiates. Output is
/// valid exactly on the closed convex hull of the input pixels.
DepthImage interpolate_log_linear(const DepthImage& sparse_gt);

/// Rasterizes an existing triangulation into a W x H image.
DepthImage rasterize_log_linear(const TriangulationResult& tri, int width, int height);

}  // namespace radfuse
