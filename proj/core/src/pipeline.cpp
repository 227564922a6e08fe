#include "radfuse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "radfuse/interp.hpp"
#include "radfuse/io.hpp"

namespace radfuse {

namespace {

using ojson = nlohmann::ordered_json;

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), start_(std::chrono::steady_clock::now()) {}
  void lap(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.push_back({stage, std::chrono::duration<double, std::milli>(now - start_).count()});
    start_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  std::chrono::steady_clock::time_point start_;
};

const char* space_name(AlignmentSpace s) { return s == AlignmentSpace::kDepth ? "depth" : "inverse_depth"; }
const char* provider_name(ConfidenceProvider p) { return p == ConfidenceProvider::kHeuristic ? "heuristic" : "external"; }
const char* missing_name(MissingPrediction m) { return m == MissingPrediction::kExclude ? "exclude" : "penalize"; }

DepthImage scale_to_image(const ScaleField& field) {
  DepthImage img(field.width, field.height);
  for (std::size_t i = 0; i < field.size(); ++i) img.set(i, field.u[i]);
  return img;
}

ojson metrics_json(const MetricsReport& m) {
  return {{"iMAE", m.imae},     {"iRMSE", m.irmse},   {"MAE", m.mae},           {"RMSE", m.rmse},
          {"AbsRel", m.absrel}, {"SqRel", m.sqrel},   {"delta1", m.delta1},     {"n_pixels", m.n_pixels},
          {"coverage", m.coverage}};
}

}  // namespace

SolverOptions PipelineConfig::solver_options() const {
  SolverOptions o;
  o.lambda_smooth = lambda_smooth;
  o.max_iters = solver_max_iters;
  o.tol = solver_tol;
  return o;
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCategory::kParameter, "config: " + what); };
  check(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
  check(lambda_smooth >= 0.0 && std::isfinite(lambda_smooth), "lambda_smooth must be finite and >= 0");
  check(lambda_gt >= 0.0 && std::isfinite(lambda_gt), "lambda_gt must be finite and >= 0");
  check(beta > 0.0 && std::isfinite(beta), "beta must be finite and > 0");
  check(patch_w >= 1 && patch_h >= 1, "patch sizes must be >= 1");
  check(sigma_d > 0.0, "sigma_d must be > 0");
  check(!sigma_uv || *sigma_uv > 0.0, "sigma_uv must be > 0");
  check(brent_tol > 0.0, "brent_tol must be > 0");
  check(solver_max_iters >= 1, "solver_max_iters must be >= 1");
  check(solver_tol > 0.0, "solver_tol must be > 0");
  check(!range_caps.empty(), "range_caps must not be empty");
  for (double r : range_caps) check(r > 0.0, "range caps must be > 0");
  check(radar_min >= 0.0 && radar_max > radar_min, "radar range must satisfy 0 <= lo < hi");
  check(label_tol > 0.0, "label_tol must be > 0");
}

PipelineConfig parse_pipeline_config(const std::string& json_text, const std::string& name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::kFormat, name + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  if (!j.is_object()) fail(ErrorCategory::kFormat, name + ": config must be a JSON object");
  static const std::set<std::string> known{
      "tau",        "lambda_smooth", "lambda_gt",       "beta",        "patch_w",     "patch_h",
      "sigma_d",    "sigma_uv",      "brent_tol",       "alignment_space", "solver_max_iters", "solver_tol",
      "range_caps", "radar_range",   "provider",        "missing_prediction", "label_tol"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) fail(ErrorCategory::kFormat, name + ": unknown config key '" + key + "'");
  }
  PipelineConfig c;
  try {
    auto get = [&](const char* key, auto& out) {
      if (j.contains(key)) out = j.at(key).get<std::remove_reference_t<decltype(out)>>();
    };
    get("tau", c.tau);
    get("lambda_smooth", c.lambda_smooth);
    get("lambda_gt", c.lambda_gt);
    get("beta", c.beta);
    get("patch_w", c.patch_w);
    get("patch_h", c.patch_h);
    get("sigma_d", c.sigma_d);
    if (j.contains("sigma_uv") && !j.at("sigma_uv").is_null()) c.sigma_uv = j.at("sigma_uv").get<double>();
    get("brent_tol", c.brent_tol);
    get("solver_max_iters", c.solver_max_iters);
    get("solver_tol", c.solver_tol);
    get("range_caps", c.range_caps);
    get("label_tol", c.label_tol);
    if (j.contains("radar_range")) {
      const auto r = j.at("radar_range").get<std::vector<double>>();
      if (r.size() != 2) fail(ErrorCategory::kFormat, name + ": radar_range must be [lo, hi]");
      c.radar_min = r[0];
      c.radar_max = r[1];
    }
    if (j.contains("alignment_space")) {
      const auto s = j.at("alignment_space").get<std::string>();
      if (s == "depth") c.alignment_space = AlignmentSpace::kDepth;
      else if (s == "inverse_depth") c.alignment_space = AlignmentSpace::kInverseDepth;
      else fail(ErrorCategory::kFormat, name + ": alignment_space must be depth or inverse_depth");
    }
    if (j.contains("provider")) {
      const auto s = j.at("provider").get<std::string>();
      if (s == "heuristic") c.provider = ConfidenceProvider::kHeuristic;
      else if (s == "external") c.provider = ConfidenceProvider::kExternal;
      else fail(ErrorCategory::kFormat, name + ": provider must be heuristic or external");
    }
    if (j.contains("missing_prediction")) {
      const auto s = j.at("missing_prediction").get<std::string>();
      if (s == "exclude") c.missing = MissingPrediction::kExclude;
      else if (s == "penalize") c.missing = MissingPrediction::kPenalize;
      else fail(ErrorCategory::kFormat, name + ": missing_prediction must be exclude or penalize");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kFormat, name + ": bad config value: " + e.what());
  }
  c.validate();
  return c;
}

std::string serialize_pipeline_config(const PipelineConfig& c) {
  ojson j;
  j["tau"] = c.tau;
  j["lambda_smooth"] = c.lambda_smooth;
  j["lambda_gt"] = c.lambda_gt;
  j["beta"] = c.beta;
  j["patch_w"] = c.patch_w;
  j["patch_h"] = c.patch_h;
  j["sigma_d"] = c.sigma_d;
  j["sigma_uv"] = c.sigma_uv ? ojson(*c.sigma_uv) : ojson(nullptr);
  j["brent_tol"] = c.brent_tol;
  j["alignment_space"] = space_name(c.alignment_space);
  j["solver_max_iters"] = c.solver_max_iters;
  j["solver_tol"] = c.solver_tol;
  j["range_caps"] = c.range_caps;
  j["radar_range"] = {c.radar_min, c.radar_max};
  j["provider"] = provider_name(c.provider);
  j["missing_prediction"] = missing_name(c.missing);
  j["label_tol"] = c.label_tol;
  return j.dump(2) + "\n";
}

std::string to_string(FrameStatus status) {
  switch (status) {
    case FrameStatus::kOk: return "ok";
    case FrameStatus::kSkippedAlignmentUnavailable: return "skipped: alignment-unavailable";
    case FrameStatus::kFailed: return "failed";
  }
  return "unknown";
}

PipelineOutput run_pipeline(const FrameInputs& in, const PipelineConfig& config) {
  config.validate();
  in.calib.camera.validate();
  const CameraModel& cam = in.calib.camera;
  require(in.mono.same_shape(cam.width, cam.height), ErrorCategory::kInput,
          in.frame_id + ": mono depth is " + std::to_string(in.mono.width()) + "x" + std::to_string(in.mono.height()) +
              " but calibration says " + std::to_string(cam.width) + "x" + std::to_string(cam.height));
  if (in.gt) {
    require(in.gt->same_shape(cam.width, cam.height), ErrorCategory::kInput,
            in.frame_id + ": ground truth shape differs from calibration");
  }
  if (config.provider == ConfidenceProvider::kExternal) {
    require(in.confidence_dir.has_value(), ErrorCategory::kInput,
            in.frame_id + ": external confidence provider needs a confidence directory");
  }

  PipelineOutput out;
  FrameResult& r = out.result;
  r.frame_id = in.frame_id;
  r.radar_points = in.cloud.size();
  StageClock clock(r.timings);

  const SparseDepthProjection projected = project_points(in.cloud, in.calib.cam_from_radar, cam);
  const SparseDepthProjection radar = range_filter(projected, config.radar_min, config.radar_max);
  r.radar_projected = projected.entries.size();
  r.radar_in_range = radar.entries.size();
  clock.lap("project");

  AlignmentOptions align_opts;
  align_opts.brent_tol = config.brent_tol;
  align_opts.space = config.alignment_space;
  const auto samples = collect_scale_samples(in.mono, radar);
  if (samples.empty()) {
    r.status = FrameStatus::kSkippedAlignmentUnavailable;
    r.message = "no radar return overlaps a valid monocular pixel";
    clock.lap("align");
    return out;
  }
  const AlignmentResult alignment = solve_global_scale(samples, align_opts);
  AlignedDepth aligned = apply_global_scale(in.mono, alignment);
  r.alignment = alignment;
  clock.lap("align");

  std::vector<ConfidenceMap> maps;
  std::vector<double> point_depths(in.cloud.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& e : radar.entries) point_depths[e.source_index] = e.depth;
  if (config.provider == ConfidenceProvider::kHeuristic) {
    maps.reserve(radar.entries.size());
    const double sigma_uv = config.effective_sigma_uv();
    for (const auto& e : radar.entries) {
      const PatchRect rect = crop_patch_rect(e, config.patch_w, config.patch_h, cam);
      maps.push_back(heuristic_confidence(rect, e, aligned.depth, config.sigma_d, sigma_uv));
    }
  } else {
    LoadedConfidence loaded = load_external_confidence(*in.confidence_dir, in.frame_id, cam.width, cam.height);
    r.confidence_clamped = loaded.clamped_values;
    for (auto& m : loaded.maps) {
      if (m.point_index < point_depths.size() && !std::isnan(point_depths[m.point_index])) {
        maps.push_back(std::move(m));
      } else {
        ++r.confidence_unmatched;
      }
    }
  }
  r.confidence_maps = maps.size();
  clock.lap("confidence");

  DepthImage dq = quasi_dense_depth(maps, point_depths, config.tau, cam.width, cam.height);
  r.dq_coverage = static_cast<double>(dq.valid_count()) / static_cast<double>(dq.size());
  clock.lap("quasi_dense");

  QuasiDenseScale qs = quasi_dense_scale(dq, aligned.depth);
  r.dq_demoted = qs.demoted;
  const SmoothnessWeights weights = sobel_edge_weights(aligned.depth, config.beta);
  clock.lap("scale_observations");

  if (qs.field.observed_count() == 0) {
    // Nothing to refine: keep the globally aligned depth (u = 1 everywhere).
    out.scale = qs.field;
    SolverSummary s;
    s.converged = true;
    r.solver = s;
  } else {
    SolveReport report = solve_scale_field(qs.field, weights, config.solver_options());
    SolverSummary s;
    s.iterations = report.iterations;
    s.cg_iterations = report.cg_iterations;
    s.converged = report.converged;
    s.clamp_count = report.clamp_count;
    s.energy_trace = std::move(report.energy_trace);
    s.energy_l1 = report.energy_l1;
    r.solver = std::move(s);
    out.scale = std::move(report.field);
  }
  clock.lap("solve");

  DepthImage dhat = compose_depth(*out.scale, aligned.inverse_depth);
  clock.lap("compose");

  if (in.gt) {
    const DepthImage& gt = *in.gt;
    std::optional<DepthImage> d_int;
    if (gt.valid_count() == gt.size()) {
      d_int = gt;
    } else {
      try {
        d_int = interpolate_log_linear(gt);
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::kDegenerate) throw;
      }
    }
    clock.lap("gt_interp");

    for (double cap : config.range_caps) {
      RangeMetrics rm;
      rm.range_cap = cap;
      try {
        rm.refined = compute_metrics(dhat, gt, cap, config.missing);
        rm.aligned = compute_metrics(aligned.depth, gt, cap, config.missing);
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::kUndefined) throw;
      }
      r.metrics.push_back(rm);
    }
    try {
      r.losses = sml_losses(dhat, gt, d_int ? *d_int : DepthImage(cam.width, cam.height), aligned.depth,
                            config.lambda_gt, config.lambda_smooth, config.beta);
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::kUndefined) throw;
    }
    if (d_int) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& m : maps) {
        AssociationLabels labels = make_association_labels(*d_int, m.rect, point_depths[m.point_index], config.label_tol);
        labels.point_index = m.point_index;
        try {
          sum += bce_score(m, labels);
          ++n;
        } catch (const Error& e) {
          if (e.category() != ErrorCategory::kUndefined) throw;
        }
      }
      if (n > 0) r.mean_bce = sum / static_cast<double>(n);
    }
    out.d_int = std::move(d_int);
    clock.lap("evaluate");
  }

  out.aligned = std::move(aligned.depth);
  out.dq = std::move(dq);
  out.depth = std::move(dhat);
  return out;
}

std::string frame_result_json(const FrameResult& r, bool include_timings) {
  ojson j;
  j["frame_id"] = r.frame_id;
  j["status"] = to_string(r.status);
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.error_category.empty()) j["error_category"] = r.error_category;
  j["radar"] = {{"points", r.radar_points}, {"projected", r.radar_projected}, {"in_range", r.radar_in_range}};
  if (r.alignment) {
    const auto& a = *r.alignment;
    j["alignment"] = {{"scale", a.scale}, {"brent_scale", a.brent_scale}, {"objective", a.objective},
                      {"n_samples", a.n_samples}, {"lo", a.lo}, {"hi", a.hi}, {"iterations", a.iterations}};
  }
  if (r.dq_coverage) {
    j["confidence"] = {{"maps", r.confidence_maps}, {"clamped_values", r.confidence_clamped},
                       {"unmatched_maps", r.confidence_unmatched}};
    j["dq_coverage"] = *r.dq_coverage;
    j["dq_demoted"] = r.dq_demoted;
  }
  if (r.solver) {
    const auto& s = *r.solver;
    j["solver"] = {{"iterations", s.iterations}, {"cg_iterations", s.cg_iterations}, {"converged", s.converged},
                   {"clamp_count", s.clamp_count}, {"energy_l1", s.energy_l1}, {"energy_trace", s.energy_trace}};
  }
  if (!r.metrics.empty()) {
    auto arr = ojson::array();
    for (const auto& m : r.metrics) {
      ojson e;
      e["range_cap"] = m.range_cap;
      e["refined"] = m.refined ? metrics_json(*m.refined) : ojson(nullptr);
      e["aligned"] = m.aligned ? metrics_json(*m.aligned) : ojson(nullptr);
      arr.push_back(e);
    }
    j["metrics"] = arr;
  }
  if (r.losses) {
    const auto& l = *r.losses;
    j["losses"] = {{"depth_int", l.depth_int}, {"depth_gt", l.depth_gt}, {"smooth", l.smooth},
                   {"total", l.total},         {"n_int", l.n_int},       {"n_gt", l.n_gt}};
  }
  if (r.mean_bce) j["mean_bce"] = *r.mean_bce;
  if (include_timings) {
    ojson t = ojson::object();
    for (const auto& s : r.timings) t[s.stage] = s.ms;
    j["timing_ms"] = t;
  }
  return j.dump(2) + "\n";
}

void dump_debug(const std::filesystem::path& dir, const PipelineOutput& o) {
  std::filesystem::create_directories(dir);
  if (o.aligned) write_depth_pfm(dir / "d_ga.pfm", *o.aligned);
  if (o.dq) write_depth_pfm(dir / "d_q.pfm", *o.dq);
  if (o.scale) write_depth_pfm(dir / "u.pfm", scale_to_image(*o.scale));
  if (o.depth) write_depth_pfm(dir / "d_hat.pfm", *o.depth);
  if (o.d_int) write_depth_pfm(dir / "d_int.pfm", *o.d_int);
}

FrameSource frame_source_from_directory(const std::filesystem::path& dir) {
  FrameSource s;
  s.frame_id = dir.filename().string();
  if (s.frame_id.empty()) s.frame_id = dir.parent_path().filename().string();
  s.mono = dir / "mono.pfm";
  s.cloud = dir / "cloud.ply";
  s.calib = dir / "calib.json";
  if (std::filesystem::exists(dir / "gt.pfm")) s.gt = dir / "gt.pfm";
  return s;
}

std::vector<FrameSource> parse_manifest(const std::string& json_text, const std::filesystem::path& base,
                                        const std::string& name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::kFormat, name + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  if (!j.is_array()) fail(ErrorCategory::kFormat, name + ": manifest must be a JSON list");
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  std::vector<FrameSource> frames;
  std::set<std::string> ids;
  try {
    for (const auto& item : j) {
      FrameSource s;
      if (item.is_string()) {
        s = frame_source_from_directory(resolve(item.get<std::string>()));
      } else {
        s.frame_id = item.at("id").get<std::string>();
        s.mono = resolve(item.at("mono").get<std::string>());
        s.cloud = resolve(item.at("cloud").get<std::string>());
        s.calib = resolve(item.at("calib").get<std::string>());
        if (item.contains("gt")) s.gt = resolve(item.at("gt").get<std::string>());
        if (item.contains("conf_dir")) s.confidence_dir = resolve(item.at("conf_dir").get<std::string>());
      }
      if (!ids.insert(s.frame_id).second) fail(ErrorCategory::kFormat, name + ": duplicate frame id '" + s.frame_id + "'");
      frames.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kFormat, name + ": bad manifest entry: " + e.what());
  }
  return frames;
}

FrameInputs load_frame(const FrameSource& s) {
  FrameInputs in;
  in.frame_id = s.frame_id;
  in.mono = read_depth_pfm(s.mono);
  in.cloud = read_point_cloud(s.cloud);
  in.calib = read_calibration(s.calib);
  if (s.gt) in.gt = read_depth_pfm(*s.gt);
  in.confidence_dir = s.confidence_dir;
  return in;
}

std::vector<FrameResult> run_batch(const std::vector<FrameSource>& frames, const PipelineConfig& config,
                                   const BatchOptions& options) {
  config.validate();
  std::vector<FrameResult> results(frames.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < frames.size(); k = next++) {
      const FrameSource& src = frames[k];
      try {
        PipelineOutput o = run_pipeline(load_frame(src), config);
        if (options.output_dir) {
          if (o.depth) write_depth_pfm(*options.output_dir / (src.frame_id + ".pfm"), *o.depth);
          write_text_file(*options.output_dir / (src.frame_id + ".json"), frame_result_json(o.result, false));
        }
        if (options.debug_dir) dump_debug(*options.debug_dir / src.frame_id, o);
        results[k] = std::move(o.result);
      } catch (const Error& e) {
        FrameResult r;
        r.frame_id = src.frame_id;
        r.status = FrameStatus::kFailed;
        r.error_category = std::string(to_string(e.category()));
        r.message = e.what();
        results[k] = std::move(r);
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(1, frames.size()))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace radfuse
