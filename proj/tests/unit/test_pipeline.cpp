#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "radfuse/io.hpp"
#include "radfuse/pipeline.hpp"
#include "radfuse/synth.hpp"
#include "test_support.hpp"

using namespace radfuse;

namespace {

FrameBundle small_scene(std::uint64_t seed, double a, double eps, double sigma) {
  RandomSceneOptions o;
  o.width = 128;
  o.height = 96;
  o.mono = {a, eps, 80.0};
  o.radar.n_points = 120;
  o.radar.depth_noise_sigma = sigma;
  return generate_scene(random_scene_spec(seed, o));
}

FrameInputs inputs_from(const FrameBundle& b, const std::string& id = "frame") {
  FrameInputs in;
  in.frame_id = id;
  in.mono = b.mono_depth;
  in.cloud = b.cloud;
  in.calib = b.calib;
  in.gt = b.gt_depth;
  return in;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.patch_w = 40;
  c.patch_h = 16;
  return c;
}

void write_frame(const std::filesystem::path& dir, const FrameBundle& b) {
  std::filesystem::create_directories(dir);
  write_depth_pfm(dir / "mono.pfm", b.mono_depth);
  write_depth_pfm(dir / "gt.pfm", b.gt_depth);
  write_point_cloud(dir / "cloud.ply", b.cloud);
  write_calibration(dir / "calib.json", b.calib);
}

}  // namespace

TEST(Config, ParseSerializeRoundTrip) {
  const PipelineConfig c = parse_pipeline_config(
      R"({"tau": 0.4, "lambda_smooth": 2, "range_caps": [30, 80], "radar_range": [1, 90],
          "alignment_space": "inverse_depth", "provider": "external", "missing_prediction": "penalize"})");
  EXPECT_EQ(c.tau, 0.4);
  EXPECT_EQ(c.lambda_smooth, 2.0);
  EXPECT_EQ(c.range_caps, (std::vector<double>{30, 80}));
  EXPECT_EQ(c.radar_min, 1.0);
  EXPECT_EQ(c.alignment_space, AlignmentSpace::kInverseDepth);
  EXPECT_EQ(c.provider, ConfidenceProvider::kExternal);
  EXPECT_EQ(c.missing, MissingPrediction::kPenalize);
  const PipelineConfig back = parse_pipeline_config(serialize_pipeline_config(c));
  EXPECT_EQ(serialize_pipeline_config(back), serialize_pipeline_config(c));
}

TEST(Config, Errors) {
  EXPECT_RADFUSE_ERROR(parse_pipeline_config(R"({"tua": 0.5})"), kFormat);
  EXPECT_RADFUSE_ERROR(parse_pipeline_config("[1]"), kFormat);
  EXPECT_RADFUSE_ERROR(parse_pipeline_config(R"({"provider": "magic"})"), kFormat);
  EXPECT_RADFUSE_ERROR(parse_pipeline_config(R"({"radar_range": [1]})"), kFormat);
  EXPECT_RADFUSE_ERROR(parse_pipeline_config(R"({"tau": 1.5})"), kParameter);
  EXPECT_RADFUSE_ERROR(parse_pipeline_config(R"({"beta": 0})"), kParameter);
  EXPECT_RADFUSE_ERROR(parse_pipeline_config(R"({"lambda_smooth": -1})"), kParameter);
}

TEST(Pipeline, NoRadarIsSkipped) {
  FrameBundle b = small_scene(1, 2.0, 0.0, 0.0);
  b.cloud.points.clear();
  const PipelineOutput out = run_pipeline(inputs_from(b), small_config());
  EXPECT_EQ(out.result.status, FrameStatus::kSkippedAlignmentUnavailable);
  EXPECT_EQ(to_string(out.result.status), "skipped: alignment-unavailable");
  EXPECT_FALSE(out.depth.has_value());
}

TEST(Pipeline, ShapeMismatchIsInputError) {
  FrameInputs in = inputs_from(small_scene(1, 2.0, 0.0, 0.0));
  in.mono = DepthImage::filled(10, 10, 1.0);
  EXPECT_RADFUSE_ERROR(run_pipeline(in, small_config()), kInput);
  in = inputs_from(small_scene(1, 2.0, 0.0, 0.0));
  in.gt = DepthImage(5, 5);
  EXPECT_RADFUSE_ERROR(run_pipeline(in, small_config()), kInput);
}

TEST(Pipeline, NoiselessScaledMonoIsRecovered) {
  const PipelineOutput out = run_pipeline(inputs_from(small_scene(3, 2.0, 0.0, 0.0)), small_config());
  ASSERT_EQ(out.result.status, FrameStatus::kOk);
  EXPECT_NEAR(out.result.alignment->scale, 0.5, 1e-12);
  for (const auto& m : out.result.metrics) {
    ASSERT_TRUE(m.refined.has_value());
    EXPECT_DOUBLE_EQ(m.refined->delta1, 1.0);
    EXPECT_LT(m.refined->absrel, 1e-9);
  }
}

TEST(Pipeline, RefinementImprovesCorruptedMono) {
  int improved = 0;
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    const PipelineOutput out = run_pipeline(inputs_from(small_scene(seed, 2.0, 0.1, 0.2)), small_config());
    ASSERT_EQ(out.result.status, FrameStatus::kOk);
    const auto& m = out.result.metrics.back();
    ASSERT_TRUE(m.refined && m.aligned);
    improved += m.refined->mae < m.aligned->mae;
    EXPECT_TRUE(out.result.losses.has_value());
    EXPECT_TRUE(out.result.mean_bce.has_value());
  }
  EXPECT_GE(improved, 3);
}

TEST(Pipeline, DeterministicJson) {
  const FrameInputs in = inputs_from(small_scene(5, 1.5, 0.1, 0.2));
  const auto a = frame_result_json(run_pipeline(in, small_config()).result, false);
  const auto b = frame_result_json(run_pipeline(in, small_config()).result, false);
  EXPECT_EQ(a, b);
  EXPECT_NE(frame_result_json(run_pipeline(in, small_config()).result, true).find("timing_ms"), std::string::npos);
}

TEST(Pipeline, ExternalProviderMatchesHeuristic) {
  TempDir dir("pipeline");
  FrameInputs in = inputs_from(small_scene(6, 1.5, 0.1, 0.2), "f6");
  const PipelineConfig heur = small_config();
  const PipelineOutput ref = run_pipeline(in, heur);
  ASSERT_EQ(ref.result.status, FrameStatus::kOk);

  // Rebuild the heuristic maps, store them as float and read them back.
  const auto proj = range_filter(project_points(in.cloud, in.calib.cam_from_radar, in.calib.camera), heur.radar_min,
                                 heur.radar_max);
  std::vector<ConfidenceMap> maps;
  for (const auto& e : proj.entries) {
    const PatchRect r = crop_patch_rect(e, heur.patch_w, heur.patch_h, in.calib.camera);
    ConfidenceMap m = heuristic_confidence(r, e, *ref.aligned, heur.sigma_d, heur.effective_sigma_uv());
    for (auto& v : m.values) v = static_cast<float>(v);
    maps.push_back(std::move(m));
  }
  write_external_confidence(dir.path(), "f6", maps);

  PipelineConfig ext = heur;
  ext.provider = ConfidenceProvider::kExternal;
  in.confidence_dir = dir.path();
  const PipelineOutput got = run_pipeline(in, ext);
  ASSERT_EQ(got.result.status, FrameStatus::kOk);
  EXPECT_EQ(got.result.confidence_maps, ref.result.confidence_maps);
  EXPECT_EQ(got.result.confidence_unmatched, 0u);
  // float storage perturbs confidences slightly; depth agrees closely
  const auto& a = *got.depth;
  const auto& b = *ref.depth;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.valid(i), b.valid(i));
    if (a.valid(i)) EXPECT_NEAR(a.at(i), b.at(i), 1e-3 * b.at(i));
  }

  in.confidence_dir.reset();
  EXPECT_RADFUSE_ERROR(run_pipeline(in, ext), kInput);
}

TEST(Batch, ResultsIndependentOfJobs) {
  TempDir dir("batch");
  for (int f = 0; f < 4; ++f) write_frame(dir.path() / ("f" + std::to_string(f)), small_scene(20 + f, 1.8, 0.1, 0.2));
  std::filesystem::create_directories(dir.path() / "broken");
  const auto sources =
      parse_manifest(R"(["f0", "f1", {"id": "x2", "mono": "f2/mono.pfm", "cloud": "f2/cloud.ply", "calib": "f2/calib.json"},
                        "f3", "broken"])",
                     dir.path());
  ASSERT_EQ(sources.size(), 5u);
  EXPECT_EQ(sources[2].frame_id, "x2");
  EXPECT_FALSE(sources[2].gt.has_value());

  BatchOptions one;
  one.jobs = 1;
  one.output_dir = dir.path() / "out1";
  BatchOptions three;
  three.jobs = 3;
  three.output_dir = dir.path() / "out3";
  const auto r1 = run_batch(sources, small_config(), one);
  const auto r3 = run_batch(sources, small_config(), three);
  ASSERT_EQ(r1.size(), 5u);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].frame_id, sources[i].frame_id);
    EXPECT_EQ(frame_result_json(r1[i], false), frame_result_json(r3[i], false));
  }
  EXPECT_EQ(r1[4].status, FrameStatus::kFailed);
  EXPECT_EQ(r1[0].status, FrameStatus::kOk);
  for (const auto* id : {"f0", "x2"}) {
    EXPECT_EQ(read_text_file(dir.path() / "out1" / (std::string(id) + ".pfm")),
              read_text_file(dir.path() / "out3" / (std::string(id) + ".pfm")));
    EXPECT_EQ(read_text_file(dir.path() / "out1" / (std::string(id) + ".json")),
              read_text_file(dir.path() / "out3" / (std::string(id) + ".json")));
  }
}

TEST(Batch, ManifestErrors) {
  EXPECT_RADFUSE_ERROR(parse_manifest("{}", "."), kFormat);
  EXPECT_RADFUSE_ERROR(parse_manifest(R"(["a", "a"])", "."), kFormat);
  EXPECT_RADFUSE_ERROR(parse_manifest(R"([{"id": "a"}])", "."), kFormat);
}

TEST(Debug, DumpWritesStages) {
  TempDir dir("debug");
  const PipelineOutput out = run_pipeline(inputs_from(small_scene(2, 2.0, 0.1, 0.0)), small_config());
  dump_debug(dir.path(), out);
  for (const char* f : {"d_ga.pfm", "d_q.pfm", "u.pfm", "d_hat.pfm", "d_int.pfm"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  }
  EXPECT_EQ(read_depth_pfm(dir.path() / "d_hat.pfm").width(), 128);
}
