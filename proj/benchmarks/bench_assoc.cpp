#include <benchmark/benchmark.h>

#include "weaklab/assoc.hpp"
#include "weaklab/rng.hpp"

namespace weaklab {
namespace {

Matrix random_features(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, 1.0);
  return m;
}

// range(0): labelled 3D points, range(1): superpixels.
void BM_AssocLoss(benchmark::State& state) {
  Rng rng(1);
  const int nl = static_cast<int>(state.range(0)), ns = static_cast<int>(state.range(1));
  const Matrix f3 = random_features(rng, nl, 256), f2 = random_features(rng, ns, 256);
  std::vector<int> y(nl);
  for (int& v : y) v = static_cast<int>(rng.index(6));
  const AssocConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(assoc_loss(f3, f2, y, cfg));
}
BENCHMARK(BM_AssocLoss)->Args({16, 384})->Args({64, 768})->Args({256, 1536})->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace weaklab
