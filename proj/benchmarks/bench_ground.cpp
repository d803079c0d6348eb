#include <benchmark/benchmark.h>

#include "weaklab/activelabel.hpp"
#include "weaklab/synth.hpp"

namespace weaklab {
namespace {

const SceneFrame& frame() {
  static const SceneFrame f = generate_scene(SceneConfig::defaults(), 7);
  return f;
}

void BM_DetectGround(benchmark::State& state) {
  ActiveLabelConfig cfg;
  cfg.ransac.iterations = static_cast<int>(state.range(0));
  const PointMatrix& points = frame().points;
  for (auto _ : state) benchmark::DoNotOptimize(detect_ground(points, cfg.pillars, cfg.ransac, 7));
}
BENCHMARK(BM_DetectGround)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_AnnotationUnits(benchmark::State& state) {
  const ActiveLabelConfig cfg;
  const PointMatrix& points = frame().points;
  for (auto _ : state) benchmark::DoNotOptimize(build_annotation_units(points, cfg, 7));
}
BENCHMARK(BM_AnnotationUnits)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace weaklab
