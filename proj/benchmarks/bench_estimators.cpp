#include <benchmark/benchmark.h>

#include "e2x/attribution.hpp"
#include "e2x/detection.hpp"
#include "e2x/scene.hpp"
#include "e2x/segmentation.hpp"

namespace {

using namespace e2x;

struct Setup {
  ToyDetector detector{ToyDetectorConfig{}};
  Image image = make_scene(SceneParams{}, 1000).image;
  Segmentation slic = slic_segment(image, SlicParams{200});
  OutputSelector sel{*top_detections(detector, image, 1).front().output_index};
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_Forward(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(s.detector.forward(s.image));
}
BENCHMARK(BM_Forward);

void BM_Backward(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(s.detector.value_and_gradient(s.image, s.sel));
}
BENCHMARK(BM_Backward);

void BM_Slic(benchmark::State& state) {
  const auto& s = setup();
  const SlicParams p{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(slic_segment(s.image, p));
}
BENCHMARK(BM_Slic)->Arg(50)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_E2x(benchmark::State& state) {
  const auto& s = setup();
  E2xParams p;
  p.num_samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(e2x_attribution(s.detector, s.image, s.slic, s.sel, p));
}
BENCHMARK(BM_E2x)->Arg(8)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Lime(benchmark::State& state) {
  const auto& s = setup();
  LimeParams p;
  p.num_samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        lime_attribution(s.detector, s.image, s.slic, s.sel, p, ReferenceInput::zero()));
  }
}
BENCHMARK(BM_Lime)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_IntegratedGradients(benchmark::State& state) {
  const auto& s = setup();
  IgParams p;
  p.num_steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrated_gradients(s.detector, s.image, s.sel, p));
}
BENCHMARK(BM_IntegratedGradients)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Pda(benchmark::State& state) {
  const auto& s = setup();
  PdaParams p;
  p.stride = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pda_attribution(s.detector, s.image, s.sel, p));
}
BENCHMARK(BM_Pda)->Arg(4)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExactShapley(benchmark::State& state) {
  const auto& s = setup();
  const Segmentation grid = grid_segment(s.image, 2, static_cast<int>(state.range(0)) / 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        exact_shapley(s.detector, s.image, grid, s.sel, ReferenceInput::zero()));
  }
}
BENCHMARK(BM_ExactShapley)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

// The packaged benchmark_main archive carries LTO bytecode from another
// compiler release, so the entry point is compiled here.
BENCHMARK_MAIN();
