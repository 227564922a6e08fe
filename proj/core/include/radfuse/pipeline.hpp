#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radfuse/align.hpp"
#include "radfuse/augment.hpp"
#include "radfuse/geometry.hpp"
#include "radfuse/image.hpp"
#include "radfuse/metrics.hpp"
#include "radfuse/refine.hpp"

namespace radfuse {

enum class ConfidenceProvider { kHeuristic, kExternal };

struct PipelineConfig {
  double tau = 0.5;
  double lambda_smooth = 1.0;
  double lambda_gt = 1.0;
  double beta = 0.5;  // 1/m
  int patch_w = 150;
  int patch_h = 50;
  double sigma_d = 1.0;                 // m
  std::optional<double> sigma_uv;       // px; default_sigma_uv(patch) when unset
  double brent_tol = 1e-10;
  AlignmentSpace alignment_space = AlignmentSpace::kDepth;
  int solver_max_iters = 100;
  double solver_tol = 1e-6;
  std::vector<double> range_caps{50.0, 60.0, 70.0};
  double radar_min = 0.0;  // valid radar depth is (radar_min, radar_max]
  double radar_max = 100.0;
  ConfidenceProvider provider = ConfidenceProvider::kHeuristic;
  MissingPrediction missing = MissingPrediction::kExclude;
  double label_tol = 0.5;  // m

  double effective_sigma_uv() const { return sigma_uv ? *sigma_uv : default_sigma_uv(patch_w, patch_h); }
  SolverOptions solver_options() const;
  /// Throws kParameter on the first violated invariant.
  void validate() const;
};

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
PipelineConfig parse_pipeline_config(const std::string& json_text, const std::string& name = "<memory>");
std::string serialize_pipeline_config(const PipelineConfig& config);

struct FrameInputs {
  std::string frame_id = "frame";
  DepthImage mono;
  RadarPointCloud cloud;
  Calibration calib;
  std::optional<DepthImage> gt;                         // sparse or dense ground truth
  std::optional<std::filesystem::path> confidence_dir;  // external provider only
};

enum class FrameStatus { kOk, kSkippedAlignmentUnavailable, kFailed };
std::string to_string(FrameStatus status);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct SolverSummary {
  int iterations = 0;
  int cg_iterations = 0;
  bool converged = false;
  std::size_t clamp_count = 0;
  std::vector<double> energy_trace;
  double energy_l1 = 0.0;
};

struct RangeMetrics {
  double range_cap = 0.0;
  std::optional<MetricsReport> refined;  // d-hat; empty when the bucket has no evaluable pixel
  std::optional<MetricsReport> aligned;  // globally aligned depth
};

struct FrameResult {
  std::string frame_id;
  FrameStatus status = FrameStatus::kOk;
  std::string message;  // failure detail
  std::string error_category;

  std::size_t radar_points = 0;
  std::size_t radar_projected = 0;
  std::size_t radar_in_range = 0;

  std::optional<AlignmentResult> alignment;
  std::size_t confidence_maps = 0;
  std::size_t confidence_clamped = 0;
  std::size_t confidence_unmatched = 0;  // external maps whose point did not survive projection
  std::optional<double> dq_coverage;
  std::size_t dq_demoted = 0;
  std::optional<SolverSummary> solver;
  std::vector<RangeMetrics> metrics;
  std::optional<LossReport> losses;
  std::optional<double> mean_bce;
  std::vector<StageTiming> timings;
};

struct PipelineOutput {
  FrameResult result;
  std::optional<DepthImage> aligned;  // d_ga
  std::optional<DepthImage> dq;
  std::optional<ScaleField> scale;  // u
  std::optional<DepthImage> depth;  // d-hat
  std::optional<DepthImage> d_int;
};

/// Project -> range filter -> global alignment -> confidence -> quasi-dense
/// depth -> scale observations -> edge weights -> scale solve -> compose.
/// With ground truth, also interpolates it, evaluates d-hat and d_ga per range
/// cap and reports the training-style losses and mean association BCE.
///
/// A frame without usable radar overlap is returned with status
/// kSkippedAlignmentUnavailable. Format and shape errors propagate.
PipelineOutput run_pipeline(const FrameInputs& inputs, const PipelineConfig& config);

/// Single JSON document. Timings are included only on request so that two
/// runs can be compared byte for byte.
std::string frame_result_json(const FrameResult& result, bool include_timings = true);

/// Writes d_ga, d_q, u, d_hat and d_int (those present) as PFM files.
void dump_debug(const std::filesystem::path& directory, const PipelineOutput& output);

/// Where to find one frame on disk.
struct FrameSource {
  std::string frame_id;
  std::filesystem::path mono;
  std::filesystem::path cloud;
  std::filesystem::path calib;
  std::optional<std::filesystem::path> gt;
  std::optional<std::filesystem::path> confidence_dir;
};

/// Standard layout written by `simulate`: mono.pfm, cloud.ply, calib.json and,
/// when present, gt.pfm.
FrameSource frame_source_from_directory(const std::filesystem::path& directory);

/// Manifest: a JSON list whose items are either a frame directory (string) or
/// an object {id, mono, cloud, calib, gt?, conf_dir?}. Relative paths resolve
/// against the manifest's directory.
std::vector<FrameSource> parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir,
                                        const std::string& name = "<memory>");

FrameInputs load_frame(const FrameSource& source);

struct BatchOptions {
  unsigned jobs = 1;
  std::optional<std::filesystem::path> output_dir;  // per-frame <id>.pfm and <id>.json (without timings)
  std::optional<std::filesystem::path> debug_dir;   // per-frame subdirectories
};

/// Runs every frame on a pool of `jobs` workers. Results come back in manifest
/// order and do not depend on `jobs`. A frame that fails to load or process is
/// reported with status kFailed instead of aborting the batch.
std::vector<FrameResult> run_batch(const std::vector<FrameSource>& frames, const PipelineConfig& config,
                                   const BatchOptions& options);

}  // namespace radfuse
