#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "radfuse/geometry.hpp"
#include "radfuse/image.hpp"

namespace radfuse {

/// Single-channel little-endian PFM, rows stored top-down in memory.
struct PfmImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;
};

/// Header "Pf", dimensions, negative scale (little-endian), then bottom-up
/// scanlines. Errors report the byte offset where parsing stopped.
PfmImage read_pfm(const std::filesystem::path& path);
PfmImage parse_pfm(const std::string& bytes, const std::string& name = "<memory>");
void write_pfm(const std::filesystem::path& path, const PfmImage& image);
std::string serialize_pfm(const PfmImage& image);

/// Depth maps: values <= 0 or non-finite are invalid. Invalid pixels are
/// written back with their stored value if that value is itself a sentinel
/// (<= 0 or non-finite) and as 0 otherwise, so read -> write reproduces the
/// file byte for byte.
DepthImage read_depth_pfm(const std::filesystem::path& path);
void write_depth_pfm(const std::filesystem::path& path, const DepthImage& depth);
DepthImage depth_from_pfm(const PfmImage& pfm);
PfmImage depth_to_pfm(const DepthImage& depth);

/// {"K": [9 row-major], "T_cam_radar": [16 row-major], "width": W, "height": H}
Calibration read_calibration(const std::filesystem::path& path);
Calibration parse_calibration(const std::string& text, const std::string& name = "<memory>");
void write_calibration(const std::filesystem::path& path, const Calibration& calib);
std::string serialize_calibration(const Calibration& calib);

/// ASCII PLY with a vertex element carrying x, y, z and optionally doppler
/// and rcs. Extra properties are ignored on read. A missing optional value is
/// written as nan.
RadarPointCloud parse_ply(const std::string& text, const std::string& name = "<memory>");
std::string serialize_ply(const RadarPointCloud& cloud);

/// CSV with a header row naming x, y, z and optionally doppler, rcs.
RadarPointCloud parse_csv(const std::string& text, const std::string& name = "<memory>");
std::string serialize_csv(const RadarPointCloud& cloud);

/// Dispatches on the extension (.ply or .csv).
RadarPointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const std::filesystem::path& path, const RadarPointCloud& cloud);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace radfuse
