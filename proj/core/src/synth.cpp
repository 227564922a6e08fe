#include "radfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "radfuse/rng.hpp"

namespace radfuse {

RigidTransform default_cam_from_radar() {
  Eigen::Matrix3d r;
  r << 0.0, -1.0, 0.0,  //
      0.0, 0.0, -1.0,   //
      1.0, 0.0, 0.0;
  return RigidTransform(r, Eigen::Vector3d(0.0, 0.2, 0.1));
}

DepthImage render_depth(const CameraModel& cam, const std::vector<Primitive>& layout, double max_range) {
  cam.validate();
  if (layout.empty()) fail(ErrorCategory::kDegenerate, "scene layout is empty");
  for (const auto& prim : layout) {
    if (const auto* b = std::get_if<FrontalBox>(&prim)) {
      require(b->depth > 0.0 && b->depth <= max_range && b->x0 < b->x1 && b->y0 < b->y1, ErrorCategory::kParameter,
              "box needs 0 < depth <= max range and a non-empty extent");
    } else if (const auto* bg = std::get_if<BackgroundPlane>(&prim)) {
      require(bg->depth > 0.0 && bg->depth <= max_range, ErrorCategory::kParameter,
              "background depth must lie in (0, max range]");
    } else if (const auto* g = std::get_if<GroundPlane>(&prim)) {
      require(g->height > 0.0, ErrorCategory::kParameter, "ground plane height must be > 0");
    }
  }

  DepthImage depth(cam.width, cam.height);
  for (int v = 0; v < cam.height; ++v) {
    const double ry = (v - cam.cy) / cam.fy;
    for (int u = 0; u < cam.width; ++u) {
      const double rx = (u - cam.cx) / cam.fx;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& prim : layout) {
        double z = std::numeric_limits<double>::infinity();
        if (const auto* g = std::get_if<GroundPlane>(&prim)) {
          if (ry > 0.0) z = g->height / ry;
          if (z > max_range) z = std::numeric_limits<double>::infinity();
        } else if (const auto* b = std::get_if<FrontalBox>(&prim)) {
          const double x = rx * b->depth;
          const double y = ry * b->depth;
          if (x >= b->x0 && x <= b->x1 && y >= b->y0 && y <= b->y1) z = b->depth;
        } else if (const auto* bg = std::get_if<BackgroundPlane>(&prim)) {
          z = bg->depth;
        }
        best = std::min(best, z);
      }
      if (!std::isfinite(best)) {
        fail(ErrorCategory::kDegenerate,
             "scene leaves pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") without a surface");
      }
      depth.set(u, v, best);
    }
  }
  return depth;
}

std::vector<double> smooth_field(int width, int height, double wavelength, std::uint64_t seed) {
  require(wavelength > 0.0, ErrorCategory::kParameter, "field wavelength must be > 0");
  Rng rng = Rng::stream(seed, "mono-field");
  constexpr double kWaveScale[4] = {1.0, 1.3, 0.8, 1.7};
  double kx[4], ky[4], phase[4];
  for (int k = 0; k < 4; ++k) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double freq = 2.0 * std::numbers::pi / (wavelength * kWaveScale[k]);
    kx[k] = freq * std::cos(theta);
    ky[k] = freq * std::sin(theta);
    phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  std::vector<double> f(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  std::size_t i = 0;
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u, ++i) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += std::sin(kx[k] * u + ky[k] * v + phase[k]);
      f[i] = 0.25 * s;
    }
  }
  return f;
}

DepthImage corrupt_mono(const DepthImage& gt, const MonoCorruption& corruption, std::uint64_t seed) {
  require(corruption.global_scale > 0.0, ErrorCategory::kParameter, "mono global scale must be > 0");
  require(corruption.amplitude >= 0.0 && corruption.amplitude < 0.5, ErrorCategory::kParameter,
          "mono field amplitude must lie in [0, 0.5)");
  DepthImage mono(gt.width(), gt.height());
  if (corruption.amplitude == 0.0) {
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt.valid(i)) mono.set(i, corruption.global_scale * gt.at(i));
    }
    return mono;
  }
  const auto f = smooth_field(gt.width(), gt.height(), corruption.wavelength, seed);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid(i)) mono.set(i, corruption.global_scale * gt.at(i) * (1.0 + corruption.amplitude * f[i]));
  }
  return mono;
}

SampledRadar sample_radar(const DepthImage& gt, const CameraModel& cam, const RigidTransform& cam_from_radar,
                          const RadarSimSpec& spec, std::uint64_t seed) {
  require(gt.same_shape(cam.width, cam.height), ErrorCategory::kInput, "ground truth does not match camera size");
  require(spec.outlier_rate >= 0.0 && spec.outlier_rate <= 1.0, ErrorCategory::kParameter,
          "outlier rate must lie in [0, 1]");
  require(spec.depth_noise_sigma >= 0.0 && spec.outlier_scale > 0.0, ErrorCategory::kParameter,
          "radar noise sigma must be >= 0 and outlier scale > 0");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid(i)) candidates.push_back(i);
  }
  require(spec.n_points <= candidates.size(), ErrorCategory::kParameter, "more radar points requested than valid pixels");

  // Weighted sampling without replacement (Efraimidis-Spirakis keys).
  Rng rng = Rng::stream(seed, "radar");
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(candidates.size());
  const double denom = gt.height() > 1 ? static_cast<double>(gt.height() - 1) : 1.0;
  for (std::size_t i : candidates) {
    const double row = static_cast<double>(i / static_cast<std::size_t>(gt.width()));
    const double weight = 1.0 + spec.row_bias * row / denom;
    double r = rng.uniform();
    while (r <= 0.0) r = rng.uniform();
    keys.emplace_back(std::log(r) / weight, i);
  }
  const auto n = static_cast<std::ptrdiff_t>(spec.n_points);
  std::partial_sort(keys.begin(), keys.begin() + n, keys.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::size_t> picked;
  for (std::ptrdiff_t k = 0; k < n; ++k) picked.push_back(keys[static_cast<std::size_t>(k)].second);
  std::sort(picked.begin(), picked.end());

  std::vector<double> depth(picked.size());
  for (std::size_t k = 0; k < picked.size(); ++k) {
    depth[k] = gt.at(picked[k]) + (spec.depth_noise_sigma > 0.0 ? spec.depth_noise_sigma * rng.normal() : 0.0);
  }
  const auto n_out = static_cast<std::size_t>(std::llround(spec.outlier_rate * static_cast<double>(picked.size())));
  std::vector<std::size_t> order(picked.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < n_out; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(order.size() - k));
    std::swap(order[k], order[j]);
    depth[order[k]] *= spec.outlier_scale;
  }

  SampledRadar out;
  const RigidTransform radar_from_cam = cam_from_radar.inverse();
  for (std::size_t k = 0; k < picked.size(); ++k) {
    const int u = static_cast<int>(picked[k] % static_cast<std::size_t>(gt.width()));
    const int v = static_cast<int>(picked[k] / static_cast<std::size_t>(gt.width()));
    // Keep the return in front of the sensor even under extreme noise.
    const double z = std::max(depth[k], 0.05 * gt.at(picked[k]));
    const Eigen::Vector3d p = radar_from_cam.apply(back_project(u, v, z, cam));
    out.cloud.points.push_back({p.x(), p.y(), p.z(), std::nullopt, std::nullopt});
    out.truth.push_back({u, v, gt.at(picked[k]), k});
  }
  return out;
}

DepthImage sample_lidar(const DepthImage& gt, const LidarSimSpec& spec) {
  DepthImage out(gt.width(), gt.height());
  if (spec.row_step <= 0) return out;
  require(spec.col_step >= 1, ErrorCategory::kParameter, "lidar column step must be >= 1");
  for (int v = spec.row_step / 2; v < gt.height(); v += spec.row_step) {
    for (int u = 0; u < gt.width(); u += spec.col_step) {
      if (gt.valid(u, v)) out.set(u, v, gt.at(u, v));
    }
  }
  return out;
}

FrameBundle generate_scene(const SceneSpec& spec) {
  FrameBundle b;
  b.calib = {spec.camera, spec.cam_from_radar};
  b.gt_depth = render_depth(spec.camera, spec.layout, spec.max_range);
  b.mono_depth = corrupt_mono(b.gt_depth, spec.mono, spec.seed);
  b.cloud = sample_radar(b.gt_depth, spec.camera, spec.cam_from_radar, spec.radar, spec.seed).cloud;
  b.lidar_depth = sample_lidar(b.gt_depth, spec.lidar);

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < b.gt_depth.size(); ++i) {
    lo = std::min(lo, 1.0 / b.gt_depth.at(i));
    hi = std::max(hi, 1.0 / b.gt_depth.at(i));
  }
  Rng rng = Rng::stream(spec.seed, "guide");
  b.guide_image = DepthImage(b.gt_depth.width(), b.gt_depth.height());
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < b.gt_depth.size(); ++i) {
    const double g = (1.0 / b.gt_depth.at(i) - lo) / span + spec.guide_noise * rng.normal();
    b.guide_image.set(i, std::clamp(g, 1e-6, 1.0));
  }
  return b;
}

// --- JSON --------------------------------------------------------------------

namespace {

using nlohmann::json;

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& json_text, const std::string& name) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::kFormat, name + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  SceneSpec s;
  try {
    read_opt(j, "seed", s.seed);
    if (j.contains("camera")) {
      const auto& c = j.at("camera");
      s.camera.fx = c.at("fx").get<double>();
      s.camera.fy = c.at("fy").get<double>();
      s.camera.cx = c.at("cx").get<double>();
      s.camera.cy = c.at("cy").get<double>();
      s.camera.width = c.at("width").get<int>();
      s.camera.height = c.at("height").get<int>();
    }
    s.camera.validate();
    s.cam_from_radar = j.contains("T_cam_radar")
                           ? RigidTransform::from_row_major(j.at("T_cam_radar").get<std::vector<double>>())
                           : default_cam_from_radar();
    for (const auto& p : j.at("layout")) {
      const auto type = p.at("type").get<std::string>();
      if (type == "ground_plane") {
        GroundPlane g;
        read_opt(p, "height", g.height);
        s.layout.emplace_back(g);
      } else if (type == "box") {
        FrontalBox b;
        b.x0 = p.at("x0").get<double>();
        b.x1 = p.at("x1").get<double>();
        b.y0 = p.at("y0").get<double>();
        b.y1 = p.at("y1").get<double>();
        b.depth = p.at("depth").get<double>();
        s.layout.emplace_back(b);
      } else if (type == "background_plane") {
        BackgroundPlane bg;
        bg.depth = p.at("depth").get<double>();
        s.layout.emplace_back(bg);
      } else {
        fail(ErrorCategory::kFormat, name + ": unknown primitive type '" + type + "'");
      }
    }
    if (j.contains("radar")) {
      const auto& r = j.at("radar");
      read_opt(r, "n_points", s.radar.n_points);
      read_opt(r, "depth_noise_sigma", s.radar.depth_noise_sigma);
      read_opt(r, "outlier_rate", s.radar.outlier_rate);
      read_opt(r, "outlier_scale", s.radar.outlier_scale);
      read_opt(r, "row_bias", s.radar.row_bias);
    }
    if (j.contains("mono_corruption")) {
      const auto& m = j.at("mono_corruption");
      read_opt(m, "global_scale", s.mono.global_scale);
      read_opt(m, "amplitude", s.mono.amplitude);
      read_opt(m, "wavelength", s.mono.wavelength);
    }
    if (j.contains("lidar")) {
      read_opt(j.at("lidar"), "row_step", s.lidar.row_step);
      read_opt(j.at("lidar"), "col_step", s.lidar.col_step);
    }
    read_opt(j, "guide_noise", s.guide_noise);
    read_opt(j, "max_range", s.max_range);
  } catch (const json::exception& e) {
    fail(ErrorCategory::kFormat, name + ": bad scene spec: " + e.what());
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kFormat) throw;
    fail(ErrorCategory::kFormat, name + ": " + e.what());
  }
  return s;
}

std::string serialize_scene_spec(const SceneSpec& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["camera"] = {{"fx", s.camera.fx},        {"fy", s.camera.fy},
                 {"cx", s.camera.cx},        {"cy", s.camera.cy},
                 {"width", s.camera.width}, {"height", s.camera.height}};
  j["T_cam_radar"] = s.cam_from_radar.to_row_major();
  auto layout = nlohmann::ordered_json::array();
  for (const auto& prim : s.layout) {
    if (const auto* g = std::get_if<GroundPlane>(&prim)) {
      layout.push_back({{"type", "ground_plane"}, {"height", g->height}});
    } else if (const auto* b = std::get_if<FrontalBox>(&prim)) {
      layout.push_back(
          {{"type", "box"}, {"x0", b->x0}, {"x1", b->x1}, {"y0", b->y0}, {"y1", b->y1}, {"depth", b->depth}});
    } else if (const auto* bg = std::get_if<BackgroundPlane>(&prim)) {
      layout.push_back({{"type", "background_plane"}, {"depth", bg->depth}});
    }
  }
  j["layout"] = layout;
  j["radar"] = {{"n_points", s.radar.n_points},
                {"depth_noise_sigma", s.radar.depth_noise_sigma},
                {"outlier_rate", s.radar.outlier_rate},
                {"outlier_scale", s.radar.outlier_scale},
                {"row_bias", s.radar.row_bias}};
  j["mono_corruption"] = {
      {"global_scale", s.mono.global_scale}, {"amplitude", s.mono.amplitude}, {"wavelength", s.mono.wavelength}};
  j["lidar"] = {{"row_step", s.lidar.row_step}, {"col_step", s.lidar.col_step}};
  j["guide_noise"] = s.guide_noise;
  j["max_range"] = s.max_range;
  return j.dump(2) + "\n";
}

SceneSpec random_scene_spec(std::uint64_t seed, const RandomSceneOptions& options) {
  SceneSpec s;
  s.seed = seed;
  const double f = 0.8 * options.width;
  s.camera = {f, f, 0.5 * options.width, 0.5 * options.height, options.width, options.height};
  s.cam_from_radar = default_cam_from_radar();
  s.radar = options.radar;
  s.mono = options.mono;
  s.lidar = options.lidar;

  Rng rng = Rng::stream(seed, "layout");
  constexpr double kCameraHeight = 1.5;
  s.layout.emplace_back(BackgroundPlane{rng.uniform(45.0, 70.0)});
  if (options.ground) s.layout.emplace_back(GroundPlane{kCameraHeight});
  const int n_boxes = 3 + static_cast<int>(rng.below(3));
  std::vector<double> used;
  for (int k = 0; k < n_boxes; ++k) {
    double depth = 0.0;
    for (int attempt = 0; attempt < 64; ++attempt) {
      depth = rng.uniform(6.0, 30.0);
      const bool clear = std::none_of(used.begin(), used.end(), [&](double d) { return std::abs(d - depth) < 3.0; });
      if (clear) break;
    }
    used.push_back(depth);
    const double half_view = depth * s.camera.cx / s.camera.fx;
    const double width = rng.uniform(1.5, 6.0);
    const double center = rng.uniform(-0.8, 0.8) * half_view;
    const double height = rng.uniform(1.5, 4.0);
    s.layout.emplace_back(FrontalBox{center - 0.5 * width, center + 0.5 * width, kCameraHeight - height, kCameraHeight, depth});
  }
  return s;
}

}  // namespace radfuse
