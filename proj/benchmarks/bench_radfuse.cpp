#include <vector>

#include <benchmark/benchmark.h>

#include "radfuse/align.hpp"
#include "radfuse/augment.hpp"
#include "radfuse/interp.hpp"
#include "radfuse/pipeline.hpp"
#include "radfuse/refine.hpp"
#include "radfuse/rng.hpp"
#include "radfuse/synth.hpp"

using namespace radfuse;

namespace {

FrameBundle scene(int width, int height) {
  RandomSceneOptions o;
  o.width = width;
  o.height = height;
  o.mono = {2.0, 0.1, 160.0};
  o.radar.depth_noise_sigma = 0.2;
  o.radar.n_points = 200;
  return generate_scene(random_scene_spec(1, o));
}

}  // namespace

static void BM_GlobalScale(benchmark::State& state) {
  Rng rng(1);
  std::vector<ScaleSample> s;
  for (int i = 0; i < state.range(0); ++i) {
    const double m = rng.uniform(1, 60);
    s.push_back({m, 0.5 * m * (1 + 0.1 * rng.normal())});
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_global_scale(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GlobalScale)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

static void BM_LogLinearInterpolation(benchmark::State& state) {
  const FrameBundle b = scene(512, 384);
  const DepthImage sparse = sample_lidar(b.gt_depth, {static_cast<int>(state.range(0)), 4});
  for (auto _ : state) benchmark::DoNotOptimize(interpolate_log_linear(sparse));
  state.counters["sites"] = static_cast<double>(sparse.valid_count());
}
BENCHMARK(BM_LogLinearInterpolation)->Arg(16)->Arg(8)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_QuasiDense(benchmark::State& state) {
  const FrameBundle b = scene(512, 384);
  const auto proj = project_points(b.cloud, b.calib.cam_from_radar, b.calib.camera);
  std::vector<ConfidenceMap> maps;
  std::vector<double> depths(b.cloud.size(), 0.0);
  for (const auto& e : proj.entries) {
    maps.push_back(heuristic_confidence(crop_patch_rect(e, 150, 50, b.calib.camera), e, b.gt_depth, 1.0,
                                        default_sigma_uv(150, 50)));
    depths[e.source_index] = e.depth;
  }
  for (auto _ : state) benchmark::DoNotOptimize(quasi_dense_depth(maps, depths, 0.5, 512, 384));
}
BENCHMARK(BM_QuasiDense)->Unit(benchmark::kMillisecond);

static void BM_ScaleSolver(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const int h = w * 3 / 4;
  Rng rng(2);
  ScaleField obs(w, h);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (rng.uniform() < 0.2) {
      obs.u[i] = rng.uniform(0.8, 1.2);
      obs.provenance[i] = ScaleProvenance::kObserved;
    }
  }
  DepthImage dga(w, h);
  for (std::size_t i = 0; i < dga.size(); ++i) dga.set(i, 10.0 + (i % static_cast<std::size_t>(w) > static_cast<std::size_t>(w / 2) ? 20.0 : 0.0));
  const SmoothnessWeights weights = sobel_edge_weights(dga, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_scale_field(obs, weights));
}
BENCHMARK(BM_ScaleSolver)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_FullPipeline(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const FrameBundle b = scene(w, w * 3 / 4);
  FrameInputs in;
  in.mono = b.mono_depth;
  in.cloud = b.cloud;
  in.calib = b.calib;
  in.gt = b.gt_depth;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(in, {}));
}
BENCHMARK(BM_FullPipeline)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
