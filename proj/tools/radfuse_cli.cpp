// radfuse command line: simulate, align, augment, refine, eval, run, score-confidence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "radfuse/align.hpp"
#include "radfuse/augment.hpp"
#include "radfuse/error.hpp"
#include "radfuse/geometry.hpp"
#include "radfuse/io.hpp"
#include "radfuse/metrics.hpp"
#include "radfuse/pipeline.hpp"
#include "radfuse/refine.hpp"
#include "radfuse/synth.hpp"

namespace fs = std::filesystem;
using namespace radfuse;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitNotConverged = 4;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string debug_dir;
  bool quiet = false;
  bool strict = false;
};

int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kParameter:
    case ErrorCategory::kFormat:
    case ErrorCategory::kInput: return kExitInput;
    case ErrorCategory::kDegenerate:
    case ErrorCategory::kNumeric:
    case ErrorCategory::kUndefined: return kExitDegenerate;
    case ErrorCategory::kNotConverged: return kExitNotConverged;
  }
  return kExitInput;
}

// One line per failure on stderr: "radfuse: error[<category>]: <message>".
int report_error(std::string_view category, const std::string& message, int code) {
  std::cerr << "radfuse: error[" << category << "]: " << message << "\n";
  return code;
}

PipelineConfig load_config(const Globals& g) {
  if (g.config_path.empty()) return {};
  return parse_pipeline_config(read_text_file(g.config_path), g.config_path);
}

void info(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cout << line << "\n";
}

void write_json_or_stdout(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<double> parse_ranges(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCategory::kParameter, "bad range cap '" + item + "'");
    }
    require(out.back() > 0.0, ErrorCategory::kParameter, "range caps must be > 0");
  }
  require(!out.empty(), ErrorCategory::kParameter, "no range caps given");
  return out;
}

ojson alignment_json(const AlignmentResult& a) {
  return {{"scale", a.scale},  {"brent_scale", a.brent_scale}, {"objective", a.objective}, {"n_samples", a.n_samples},
          {"lo", a.lo},        {"hi", a.hi},                   {"iterations", a.iterations}};
}

ojson metrics_json(const MetricsReport& m) {
  return {{"range_cap", m.range_cap}, {"iMAE", m.imae},     {"iRMSE", m.irmse},   {"MAE", m.mae},
          {"RMSE", m.rmse},           {"AbsRel", m.absrel}, {"SqRel", m.sqrel},   {"delta1", m.delta1},
          {"n_pixels", m.n_pixels},   {"coverage", m.coverage}};
}

SparseDepthProjection project_in_range(const RadarPointCloud& cloud, const Calibration& calib,
                                       const PipelineConfig& cfg) {
  return range_filter(project_points(cloud, calib.cam_from_radar, calib.camera), cfg.radar_min, cfg.radar_max);
}

// --- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string spec;
  std::string out_dir;
  bool random = false;
  bool ground = false;
  int width = 256;
  int height = 192;
  RadarSimSpec radar;
  MonoCorruption mono;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  SceneSpec spec;
  if (!a.spec.empty()) {
    spec = parse_scene_spec(read_text_file(a.spec), a.spec);
    if (g.seed) spec.seed = *g.seed;
  } else {
    require(a.random, ErrorCategory::kParameter, "simulate needs --spec or --random");
    RandomSceneOptions o;
    o.width = a.width;
    o.height = a.height;
    o.ground = a.ground;
    o.radar = a.radar;
    o.mono = a.mono;
    spec = random_scene_spec(g.seed.value_or(0), o);
  }
  const FrameBundle b = generate_scene(spec);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_depth_pfm(dir / "gt.pfm", b.gt_depth);
  write_depth_pfm(dir / "mono.pfm", b.mono_depth);
  write_depth_pfm(dir / "guide.pfm", b.guide_image);
  if (b.lidar_depth.valid_count() > 0) write_depth_pfm(dir / "lidar.pfm", b.lidar_depth);
  write_point_cloud(dir / "cloud.ply", b.cloud);
  write_calibration(dir / "calib.json", b.calib);
  write_text_file(dir / "scene.json", serialize_scene_spec(spec));
  info(g, "simulate: wrote " + dir.string() + " (" + std::to_string(b.cloud.size()) + " radar points)");
  return kExitOk;
}

// --- align ----------------------------------------------------------------------

struct AlignArgs {
  std::string mono, cloud, calib, out, report;
};

int cmd_align(const Globals& g, const AlignArgs& a) {
  const PipelineConfig cfg = load_config(g);
  const DepthImage mono = read_depth_pfm(a.mono);
  const Calibration calib = read_calibration(a.calib);
  require(mono.same_shape(calib.camera.width, calib.camera.height), ErrorCategory::kInput,
          a.mono + ": shape differs from calibration");
  const auto radar = project_in_range(read_point_cloud(a.cloud), calib, cfg);
  AlignmentOptions opts;
  opts.brent_tol = cfg.brent_tol;
  opts.space = cfg.alignment_space;
  const AlignedDepth aligned = align_global(mono, radar, opts);
  if (!a.out.empty()) write_depth_pfm(a.out, aligned.depth);
  if (!a.report.empty()) write_text_file(a.report, alignment_json(aligned.result).dump(2) + "\n");
  if (!g.debug_dir.empty()) write_depth_pfm(fs::path(g.debug_dir) / "d_ga.pfm", aligned.depth);
  info(g, "align: scale " + std::to_string(aligned.result.scale) + " from " +
              std::to_string(aligned.result.n_samples) + " samples");
  return kExitOk;
}

// --- augment --------------------------------------------------------------------

struct AugmentArgs {
  std::string cloud, calib, guide, out, provider = "heuristic", conf_dir, frame_id = "frame", export_conf;
  std::optional<double> tau;
};

int cmd_augment(const Globals& g, const AugmentArgs& a) {
  PipelineConfig cfg = load_config(g);
  if (a.tau) cfg.tau = *a.tau;
  if (a.provider == "external") cfg.provider = ConfidenceProvider::kExternal;
  else require(a.provider == "heuristic", ErrorCategory::kParameter, "provider must be heuristic or external");
  cfg.validate();

  const Calibration calib = read_calibration(a.calib);
  const DepthImage guide = read_depth_pfm(a.guide);
  const CameraModel& cam = calib.camera;
  require(guide.same_shape(cam.width, cam.height), ErrorCategory::kInput, a.guide + ": shape differs from calibration");
  const RadarPointCloud cloud = read_point_cloud(a.cloud);
  const auto radar = project_in_range(cloud, calib, cfg);

  std::vector<double> depths(cloud.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& e : radar.entries) depths[e.source_index] = e.depth;
  std::vector<ConfidenceMap> maps;
  std::size_t unmatched = 0;
  if (cfg.provider == ConfidenceProvider::kHeuristic) {
    for (const auto& e : radar.entries) {
      maps.push_back(heuristic_confidence(crop_patch_rect(e, cfg.patch_w, cfg.patch_h, cam), e, guide, cfg.sigma_d,
                                          cfg.effective_sigma_uv()));
    }
  } else {
    require(!a.conf_dir.empty(), ErrorCategory::kParameter, "external provider needs --conf-dir");
    LoadedConfidence loaded = load_external_confidence(a.conf_dir, a.frame_id, cam.width, cam.height);
    for (auto& m : loaded.maps) {
      if (m.point_index < depths.size() && !std::isnan(depths[m.point_index])) maps.push_back(std::move(m));
      else ++unmatched;
    }
  }
  const DepthImage dq = quasi_dense_depth(maps, depths, cfg.tau, cam.width, cam.height);
  write_depth_pfm(a.out, dq);
  if (!a.export_conf.empty()) write_external_confidence(a.export_conf, a.frame_id, maps);
  if (!g.debug_dir.empty()) write_depth_pfm(fs::path(g.debug_dir) / "d_q.pfm", dq);
  info(g, "augment: " + std::to_string(maps.size()) + " maps, " + std::to_string(dq.valid_count()) +
              " quasi-dense pixels" + (unmatched ? ", " + std::to_string(unmatched) + " unmatched maps" : ""));
  return kExitOk;
}

// --- refine ---------------------------------------------------------------------

struct RefineArgs {
  std::string dq, dga, out, report;
  std::optional<double> lambda_smooth, beta, tol;
  std::optional<int> max_iters;
};

int cmd_refine(const Globals& g, const RefineArgs& a) {
  PipelineConfig cfg = load_config(g);
  if (a.lambda_smooth) cfg.lambda_smooth = *a.lambda_smooth;
  if (a.beta) cfg.beta = *a.beta;
  if (a.tol) cfg.solver_tol = *a.tol;
  if (a.max_iters) cfg.solver_max_iters = *a.max_iters;
  cfg.validate();

  const DepthImage dq = read_depth_pfm(a.dq);
  const DepthImage dga = read_depth_pfm(a.dga);
  require_same_shape(dq, dga, "quasi-dense and aligned depth");
  const QuasiDenseScale qs = quasi_dense_scale(dq, dga);
  const SolveReport rep = solve_scale_field(qs.field, sobel_edge_weights(dga, cfg.beta), cfg.solver_options());
  const DepthImage dhat = compose_depth(rep.field, invert(dga));
  write_depth_pfm(a.out, dhat);

  ojson j;
  j["iterations"] = rep.iterations;
  j["cg_iterations"] = rep.cg_iterations;
  j["converged"] = rep.converged;
  j["clamp_count"] = rep.clamp_count;
  j["demoted"] = qs.demoted;
  j["observed"] = qs.field.observed_count();
  j["energy_l1"] = rep.energy_l1;
  j["energy_trace"] = rep.energy_trace;
  if (!a.report.empty()) write_text_file(a.report, j.dump(2) + "\n");
  if (!g.debug_dir.empty()) {
    DepthImage u(rep.field.width, rep.field.height);
    for (std::size_t i = 0; i < rep.field.size(); ++i) u.set(i, rep.field.u[i]);
    write_depth_pfm(fs::path(g.debug_dir) / "u.pfm", u);
  }
  info(g, "refine: " + std::to_string(rep.iterations) + " iterations, converged=" + (rep.converged ? "true" : "false"));
  if (!rep.converged && g.strict) {
    return report_error(to_string(ErrorCategory::kNotConverged), "scale solver stopped at the iteration limit",
                        kExitNotConverged);
  }
  return kExitOk;
}

// --- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt, ranges = "50,60,70", report, csv, missing = "exclude";
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  PipelineConfig cfg = load_config(g);
  if (a.missing == "penalize") cfg.missing = MissingPrediction::kPenalize;
  else require(a.missing == "exclude", ErrorCategory::kParameter, "--missing must be exclude or penalize");
  const DepthImage pred = read_depth_pfm(a.pred);
  const DepthImage gt = read_depth_pfm(a.gt);
  require_same_shape(pred, gt, "prediction and ground truth");

  ojson reports = ojson::array();
  std::string csv = metrics_csv_header() + "\n";
  for (double cap : parse_ranges(a.ranges)) {
    const MetricsReport m = compute_metrics(pred, gt, cap, cfg.missing);
    reports.push_back(metrics_json(m));
    std::ostringstream label;
    label << "0-" << cap;
    csv += metrics_csv_row(label.str(), m) + "\n";
  }
  if (!a.report.empty()) write_text_file(a.report, reports.dump(2) + "\n");
  if (a.csv.empty()) {
    if (!g.quiet) std::cout << csv;
  } else {
    write_text_file(a.csv, csv);
  }
  return kExitOk;
}

// --- run ------------------------------------------------------------------------

struct RunArgs {
  std::string mono, cloud, calib, gt, conf_dir, frame_id, out, report;
  std::string batch, out_dir;
  unsigned jobs = 0;
};

int cmd_run(const Globals& g, const RunArgs& a) {
  const PipelineConfig cfg = load_config(g);
  if (!a.batch.empty()) {
    const auto frames = parse_manifest(read_text_file(a.batch), fs::path(a.batch).parent_path(), a.batch);
    BatchOptions opts;
    opts.jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
    if (!a.out_dir.empty()) opts.output_dir = a.out_dir;
    if (!g.debug_dir.empty()) opts.debug_dir = g.debug_dir;
    const auto results = run_batch(frames, cfg, opts);
    ojson summary = ojson::array();
    int code = kExitOk;
    for (const auto& r : results) {
      ojson item{{"frame_id", r.frame_id}, {"status", to_string(r.status)}};
      if (r.status == FrameStatus::kFailed) {
        item["error_category"] = r.error_category;
        item["message"] = r.message;
        code = std::max(code, kExitInput);
      }
      if (g.strict && r.solver && !r.solver->converged) code = std::max(code, kExitNotConverged);
      summary.push_back(item);
    }
    write_json_or_stdout(a.report, summary.dump(2) + "\n");
    for (const auto& r : results) {
      if (r.status == FrameStatus::kFailed) {
        std::cerr << "radfuse: error[" << r.error_category << "]: " << r.frame_id << ": " << r.message << "\n";
      }
    }
    return code;
  }

  FrameSource src;
  src.mono = a.mono;
  src.cloud = a.cloud;
  src.calib = a.calib;
  if (!a.gt.empty()) src.gt = a.gt;
  if (!a.conf_dir.empty()) src.confidence_dir = a.conf_dir;
  src.frame_id = a.frame_id.empty() ? fs::path(a.mono).stem().string() : a.frame_id;
  require(!src.mono.empty() && !src.cloud.empty() && !src.calib.empty(), ErrorCategory::kParameter,
          "run needs --mono, --cloud and --calib (or --batch)");
  const PipelineOutput o = run_pipeline(load_frame(src), cfg);
  if (o.depth && !a.out.empty()) write_depth_pfm(a.out, *o.depth);
  write_json_or_stdout(a.report, frame_result_json(o.result));
  if (!g.debug_dir.empty()) dump_debug(g.debug_dir, o);
  if (o.result.status == FrameStatus::kSkippedAlignmentUnavailable) {
    return report_error(to_string(ErrorCategory::kDegenerate), src.frame_id + ": " + to_string(o.result.status),
                        kExitDegenerate);
  }
  if (g.strict && o.result.solver && !o.result.solver->converged) {
    return report_error(to_string(ErrorCategory::kNotConverged), src.frame_id + ": scale solver did not converge",
                        kExitNotConverged);
  }
  return kExitOk;
}

// --- score-confidence -----------------------------------------------------------

struct ScoreArgs {
  std::string conf_dir, frame_id = "frame", gt, cloud, calib, report;
};

int cmd_score(const Globals& g, const ScoreArgs& a) {
  const PipelineConfig cfg = load_config(g);
  const Calibration calib = read_calibration(a.calib);
  const DepthImage d_int = read_depth_pfm(a.gt);
  require(d_int.same_shape(calib.camera.width, calib.camera.height), ErrorCategory::kInput,
          a.gt + ": shape differs from calibration");
  const RadarPointCloud cloud = read_point_cloud(a.cloud);
  const auto radar = project_in_range(cloud, calib, cfg);
  std::vector<double> depths(cloud.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& e : radar.entries) depths[e.source_index] = e.depth;

  const LoadedConfidence loaded = load_external_confidence(a.conf_dir, a.frame_id, calib.camera.width,
                                                           calib.camera.height);
  ojson per_point = ojson::array();
  double sum = 0.0;
  std::size_t n = 0, unlabeled = 0, unmatched = 0;
  for (const auto& m : loaded.maps) {
    if (m.point_index >= depths.size() || std::isnan(depths[m.point_index])) {
      ++unmatched;
      continue;
    }
    const AssociationLabels labels = make_association_labels(d_int, m.rect, depths[m.point_index], cfg.label_tol);
    try {
      const double bce = bce_score(m, labels);
      per_point.push_back({{"point_index", m.point_index}, {"bce", bce}});
      sum += bce;
      ++n;
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::kUndefined) throw;
      ++unlabeled;
    }
  }
  if (n == 0) fail(ErrorCategory::kUndefined, "no confidence map has a labeled pixel");
  ojson j;
  j["mean_bce"] = sum / static_cast<double>(n);
  j["scored_maps"] = n;
  j["unlabeled_maps"] = unlabeled;
  j["unmatched_maps"] = unmatched;
  j["clamped_values"] = loaded.clamped_values;
  j["per_point"] = per_point;
  if (!a.report.empty()) write_text_file(a.report, j.dump(2) + "\n");
  if (!g.quiet) std::cout << "mean_bce " << j["mean_bce"].get<double>() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar-guided metric depth from monocular predictions"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Pipeline configuration JSON");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for simulation");
  app.add_option("--debug-dir", g.debug_dir, "Dump intermediate maps here");
  app.add_flag("--quiet", g.quiet, "Suppress informational output");
  app.add_flag("--strict", g.strict, "Treat solver non-convergence as an error (exit 4)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic frame");
  c_sim->add_option("--spec", sim.spec, "SceneSpec JSON");
  c_sim->add_flag("--random", sim.random, "Random layout from --seed");
  c_sim->add_flag("--ground", sim.ground, "Add a ground plane to random layouts");
  c_sim->add_option("--width", sim.width);
  c_sim->add_option("--height", sim.height);
  c_sim->add_option("--mono-scale", sim.mono.global_scale, "Random layouts: global mono scale a");
  c_sim->add_option("--mono-eps", sim.mono.amplitude, "Random layouts: smooth field amplitude");
  c_sim->add_option("--mono-wavelength", sim.mono.wavelength, "Random layouts: field wavelength (px)");
  c_sim->add_option("--radar-points", sim.radar.n_points);
  c_sim->add_option("--radar-sigma", sim.radar.depth_noise_sigma, "Radar depth noise (m)");
  c_sim->add_option("--outlier-rate", sim.radar.outlier_rate);
  c_sim->add_option("--outlier-scale", sim.radar.outlier_scale);
  c_sim->add_option("--out-dir", sim.out_dir)->required();

  AlignArgs al;
  auto* c_align = app.add_subcommand("align", "Global scale alignment against radar");
  c_align->add_option("--mono", al.mono)->required();
  c_align->add_option("--cloud", al.cloud)->required();
  c_align->add_option("--calib", al.calib)->required();
  c_align->add_option("--out", al.out);
  c_align->add_option("--report", al.report);

  AugmentArgs au;
  auto* c_aug = app.add_subcommand("augment", "Quasi-dense radar depth");
  c_aug->add_option("--cloud", au.cloud)->required();
  c_aug->add_option("--calib", au.calib)->required();
  c_aug->add_option("--guide", au.guide, "Globally aligned depth")->required();
  c_aug->add_option("--tau", au.tau);
  c_aug->add_option("--provider", au.provider)->check(CLI::IsMember({"heuristic", "external"}));
  c_aug->add_option("--conf-dir", au.conf_dir);
  c_aug->add_option("--frame-id", au.frame_id);
  c_aug->add_option("--export-conf", au.export_conf, "Write the confidence maps used in the external layout");
  c_aug->add_option("--out", au.out)->required();

  RefineArgs rf;
  auto* c_ref = app.add_subcommand("refine", "Dense scale refinement");
  c_ref->add_option("--dq", rf.dq)->required();
  c_ref->add_option("--dga", rf.dga)->required();
  c_ref->add_option("--lambda-smooth", rf.lambda_smooth);
  c_ref->add_option("--beta", rf.beta);
  c_ref->add_option("--max-iters", rf.max_iters);
  c_ref->add_option("--tol", rf.tol);
  c_ref->add_option("--out", rf.out)->required();
  c_ref->add_option("--report", rf.report);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Depth metrics per range cap");
  c_eval->add_option("--pred", ev.pred)->required();
  c_eval->add_option("--gt", ev.gt)->required();
  c_eval->add_option("--ranges", ev.ranges);
  c_eval->add_option("--missing", ev.missing)->check(CLI::IsMember({"exclude", "penalize"}));
  c_eval->add_option("--report", ev.report);
  c_eval->add_option("--csv", ev.csv);

  RunArgs rn;
  auto* c_run = app.add_subcommand("run", "Full pipeline on one frame or a manifest");
  c_run->add_option("--mono", rn.mono);
  c_run->add_option("--cloud", rn.cloud);
  c_run->add_option("--calib", rn.calib);
  c_run->add_option("--gt", rn.gt);
  c_run->add_option("--conf-dir", rn.conf_dir);
  c_run->add_option("--frame-id", rn.frame_id);
  c_run->add_option("--out", rn.out);
  c_run->add_option("--report", rn.report);
  c_run->add_option("--batch", rn.batch, "Manifest JSON");
  c_run->add_option("--jobs", rn.jobs, "Worker threads for --batch (default: all cores)");
  c_run->add_option("--out-dir", rn.out_dir, "Per-frame outputs for --batch");

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score-confidence", "Mean BCE of external confidence maps");
  c_score->add_option("--conf-dir", sc.conf_dir)->required();
  c_score->add_option("--frame-id", sc.frame_id);
  c_score->add_option("--gt", sc.gt, "Interpolated ground truth")->required();
  c_score->add_option("--cloud", sc.cloud)->required();
  c_score->add_option("--calib", sc.calib)->required();
  c_score->add_option("--report", sc.report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kExitInput);
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*c_sim) return cmd_simulate(g, sim);
    if (*c_align) return cmd_align(g, al);
    if (*c_aug) return cmd_augment(g, au);
    if (*c_ref) return cmd_refine(g, rf);
    if (*c_eval) return cmd_eval(g, ev);
    if (*c_run) return cmd_run(g, rn);
    if (*c_score) return cmd_score(g, sc);
  } catch (const Error& e) {
    return report_error(to_string(e.category()), e.what(), exit_code_for(e.category()));
  } catch (const fs::filesystem_error& e) {
    return report_error(to_string(ErrorCategory::kInput), e.what(), kExitInput);
  } catch (const std::bad_alloc&) {
    return report_error("resource", "out of memory", kExitInput);
  }
  return kExitOk;
}
