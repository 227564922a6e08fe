#include "radfuse/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "radfuse/io.hpp"

namespace radfuse {

PatchRect crop_patch_rect(const ProjectedPoint& entry, int patch_w, int patch_h, const CameraModel& cam) {
  require(patch_w >= 1 && patch_h >= 1, ErrorCategory::kParameter, "patch size must be >= 1");
  require(entry.u >= 0 && entry.v >= 0 && entry.u < cam.width && entry.v < cam.height, ErrorCategory::kParameter,
          "patch center outside image");
  const int u0 = entry.u - patch_w / 2;
  const int v0 = entry.v - patch_h / 2;
  const int u1 = std::min(cam.width, u0 + patch_w);
  const int v1 = std::min(cam.height, v0 + patch_h);
  PatchRect r;
  r.u0 = std::max(0, u0);
  r.v0 = std::max(0, v0);
  r.w = u1 - r.u0;
  r.h = v1 - r.v0;
  return r;
}

double default_sigma_uv(int patch_w, int patch_h) {
  return 0.5 * std::hypot(0.5 * patch_w, 0.5 * patch_h);
}

ConfidenceMap heuristic_confidence(const PatchRect& rect, const ProjectedPoint& entry, const DepthImage& guide,
                                   double sigma_d, double sigma_uv) {
  require(sigma_d > 0.0 && sigma_uv > 0.0, ErrorCategory::kParameter, "confidence bandwidths must be > 0");
  require(rect.u0 >= 0 && rect.v0 >= 0 && rect.u0 + rect.w <= guide.width() && rect.v0 + rect.h <= guide.height(),
          ErrorCategory::kParameter, "patch rectangle outside guidance image");
  ConfidenceMap map;
  map.point_index = entry.source_index;
  map.rect = rect;
  map.values.resize(rect.area(), 0.0);
  const double kd = 1.0 / (2.0 * sigma_d * sigma_d);
  const double ks = 1.0 / (2.0 * sigma_uv * sigma_uv);
  std::size_t k = 0;
  for (int v = rect.v0; v < rect.v0 + rect.h; ++v) {
    for (int u = rect.u0; u < rect.u0 + rect.w; ++u, ++k) {
      if (!guide.valid(u, v)) continue;
      const double dd = guide.at(u, v) - entry.depth;
      const double du = u - entry.u;
      const double dv = v - entry.v;
      map.values[k] = std::exp(-dd * dd * kd) * std::exp(-(du * du + dv * dv) * ks);
    }
  }
  return map;
}

LoadedConfidence load_external_confidence(const std::filesystem::path& directory, const std::string& frame_id,
                                          int image_width, int image_height) {
  const auto index_path = directory / (frame_id + ".json");
  const std::string name = index_path.string();
  if (!std::filesystem::exists(index_path)) fail(ErrorCategory::kFormat, name + ": missing confidence index file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(index_path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::kFormat, name + ": invalid JSON at byte " + std::to_string(e.byte));
  }

  LoadedConfidence out;
  std::set<std::size_t> seen;
  try {
    for (const auto& item : j.at("maps")) {
      ConfidenceMap map;
      map.point_index = item.at("point_index").get<std::size_t>();
      map.rect.u0 = item.at("u0").get<int>();
      map.rect.v0 = item.at("v0").get<int>();
      map.rect.w = item.at("w").get<int>();
      map.rect.h = item.at("h").get<int>();
      const auto pfm_path = directory / item.at("pfm_path").get<std::string>();
      const auto& r = map.rect;
      if (r.w < 1 || r.h < 1 || r.u0 < 0 || r.v0 < 0 || r.u0 + r.w > image_width || r.v0 + r.h > image_height) {
        fail(ErrorCategory::kFormat, name + ": rect of point " + std::to_string(map.point_index) + " lies outside the image");
      }
      if (!seen.insert(map.point_index).second) {
        fail(ErrorCategory::kFormat, name + ": duplicate point_index " + std::to_string(map.point_index));
      }
      const PfmImage pfm = read_pfm(pfm_path);
      if (pfm.width != r.w || pfm.height != r.h) {
        fail(ErrorCategory::kFormat, pfm_path.string() + ": shape " + std::to_string(pfm.width) + "x" +
                                         std::to_string(pfm.height) + " does not match rect " + std::to_string(r.w) +
                                         "x" + std::to_string(r.h));
      }
      map.values.resize(pfm.data.size());
      for (std::size_t i = 0; i < pfm.data.size(); ++i) {
        const double c = pfm.data[i];
        if (std::isnan(c)) fail(ErrorCategory::kFormat, pfm_path.string() + ": NaN confidence value");
        const double clamped = std::clamp(c, 0.0, 1.0);
        if (clamped != c) ++out.clamped_values;
        map.values[i] = clamped;
      }
      out.maps.push_back(std::move(map));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kFormat, name + ": bad confidence index: " + e.what());
  }
  std::sort(out.maps.begin(), out.maps.end(),
            [](const ConfidenceMap& a, const ConfidenceMap& b) { return a.point_index < b.point_index; });
  return out;
}

void write_external_confidence(const std::filesystem::path& directory, const std::string& frame_id,
                               std::span<const ConfidenceMap> maps) {
  nlohmann::ordered_json index;
  index["maps"] = nlohmann::ordered_json::array();
  for (const auto& m : maps) {
    const std::string file = frame_id + "_conf_" + std::to_string(m.point_index) + ".pfm";
    PfmImage pfm;
    pfm.width = m.rect.w;
    pfm.height = m.rect.h;
    pfm.data.assign(m.values.begin(), m.values.end());
    write_pfm(directory / file, pfm);
    index["maps"].push_back({{"point_index", m.point_index},
                             {"u0", m.rect.u0},
                             {"v0", m.rect.v0},
                             {"w", m.rect.w},
                             {"h", m.rect.h},
                             {"pfm_path", file}});
  }
  write_text_file(directory / (frame_id + ".json"), index.dump(2) + "\n");
}

DepthImage quasi_dense_depth(std::span<const ConfidenceMap> maps, std::span<const double> point_depths, double tau,
                             int width, int height) {
  require(tau > 0.0 && tau < 1.0, ErrorCategory::kParameter, "confidence threshold must lie in (0, 1)");
  std::vector<std::size_t> order(maps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return maps[a].point_index < maps[b].point_index; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    require(maps[order[k]].point_index != maps[order[k - 1]].point_index, ErrorCategory::kParameter,
            "duplicate point_index among confidence maps");
  }

  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> num(n, 0.0), den(n, 0.0);
  // Contributor range per pixel; the quotient is clamped into it so rounding
  // cannot push a single-candidate pixel off that candidate's depth.
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  for (std::size_t k : order) {
    const auto& m = maps[k];
    require(m.point_index < point_depths.size(), ErrorCategory::kParameter, "confidence map point_index out of range");
    require(m.rect.u0 >= 0 && m.rect.v0 >= 0 && m.rect.u0 + m.rect.w <= width && m.rect.v0 + m.rect.h <= height,
            ErrorCategory::kParameter, "confidence map outside image");
    const double depth = point_depths[m.point_index];
    std::size_t j = 0;
    for (int v = m.rect.v0; v < m.rect.v0 + m.rect.h; ++v) {
      for (int u = m.rect.u0; u < m.rect.u0 + m.rect.w; ++u, ++j) {
        const double c = m.values[j];
        if (!(c > tau)) continue;
        const std::size_t i = static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u);
        num[i] += depth * c;
        den[i] += c;
        lo[i] = std::min(lo[i], depth);
        hi[i] = std::max(hi[i], depth);
      }
    }
  }
  DepthImage out(width, height);
  for (std::size_t i = 0; i < n; ++i) {
    if (den[i] > 0.0) out.set(i, std::clamp(num[i] / den[i], lo[i], hi[i]));
  }
  return out;
}

AssociationLabels make_association_labels(const DepthImage& d_int, const PatchRect& rect, double radar_depth,
                                          double tol) {
  require(tol > 0.0, ErrorCategory::kParameter, "association tolerance must be > 0");
  require(rect.u0 >= 0 && rect.v0 >= 0 && rect.u0 + rect.w <= d_int.width() && rect.v0 + rect.h <= d_int.height(),
          ErrorCategory::kParameter, "label rect outside image");
  AssociationLabels out;
  out.rect = rect;
  out.labels.reserve(rect.area());
  for (int v = rect.v0; v < rect.v0 + rect.h; ++v) {
    for (int u = rect.u0; u < rect.u0 + rect.w; ++u) {
      if (!d_int.valid(u, v)) {
        out.labels.push_back(Label::kIgnore);
      } else {
        out.labels.push_back(std::abs(d_int.at(u, v) - radar_depth) < tol ? Label::kPositive : Label::kNegative);
      }
    }
  }
  return out;
}

double bce_score(const ConfidenceMap& conf, const AssociationLabels& labels, double eps) {
  require(conf.rect == labels.rect, ErrorCategory::kParameter, "confidence and label rects differ");
  require(eps > 0.0 && eps <= 1e-3, ErrorCategory::kParameter, "bce eps must lie in (0, 1e-3]");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (labels.labels[i] == Label::kIgnore) continue;
    const double y = std::clamp(conf.values[i], eps, 1.0 - eps);
    sum += labels.labels[i] == Label::kPositive ? -std::log(y) : -std::log(1.0 - y);
    ++n;
  }
  if (n == 0) fail(ErrorCategory::kUndefined, "bce_score: no labeled pixels in patch");
  return sum / static_cast<double>(n);
}

}  // namespace radfuse
