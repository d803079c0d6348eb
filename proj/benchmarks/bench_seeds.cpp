#include <benchmark/benchmark.h>

#include "weaklab/superpixel.hpp"
#include "weaklab/synth.hpp"

namespace weaklab {
namespace {

const Image& camera_image() {
  static const Image img = generate_scene(SceneConfig::defaults(), 3).images.front();
  return img;
}

void BM_Seeds(benchmark::State& state) {
  SeedsConfig cfg;
  cfg.num_superpixels = static_cast<int>(state.range(0));
  cfg.iterations = static_cast<int>(state.range(1));
  const Image& img = camera_image();
  for (auto _ : state) benchmark::DoNotOptimize(seeds_segment(img, cfg));
}
BENCHMARK(BM_Seeds)->Args({64, 0})->Args({64, 4})->Args({256, 4})->Unit(benchmark::kMillisecond);

void BM_SeedsEnergy(benchmark::State& state) {
  SeedsConfig cfg;
  const SuperpixelMap m = seeds_segment(camera_image(), cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(seeds_energy(camera_image(), m.assignment, m.num_superpixels, cfg.histogram_bins));
  }
}
BENCHMARK(BM_SeedsEnergy)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace weaklab
