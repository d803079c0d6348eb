#include <benchmark/benchmark.h>

#include "weaklab/hdbscan.hpp"
#include "weaklab/rng.hpp"

namespace weaklab {
namespace {

Matrix blobs(int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, 3);
  for (int i = 0; i < n; ++i) {
    const double cx = 8.0 * static_cast<double>(i % 6);
    x.row(i) << cx + rng.normal(0, 0.6), rng.normal(0, 0.6), rng.normal(0, 0.4);
  }
  return x;
}

void BM_Hdbscan(benchmark::State& state) {
  const Matrix x = blobs(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(hdbscan(x, {20, 8}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hdbscan)->RangeMultiplier(2)->Range(256, 4096)->Unit(benchmark::kMillisecond)->Complexity();

void BM_MutualReachabilityMst(benchmark::State& state) {
  const Matrix x = blobs(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(mutual_reachability_mst(x, 8));
}
BENCHMARK(BM_MutualReachabilityMst)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace weaklab
