#include <benchmark/benchmark.h>

#include "weaklab/assoc.hpp"
#include "weaklab/rectify.hpp"
#include "weaklab/rng.hpp"

namespace weaklab {
namespace {

struct Inputs {
  Matrix probs, features;
  PrototypeBank bank;
  LabelSet labels;
  std::vector<int> points;
};

Inputs make_inputs(int n) {
  Rng rng(5);
  const int c = 6, d = 64;
  Inputs in;
  Matrix logits(n, c);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal(0.0, 2.0);
  in.probs = softmax_rows(logits);
  in.features.resize(n, d);
  for (Eigen::Index i = 0; i < in.features.size(); ++i) in.features.data()[i] = rng.normal(0.0, 1.0);
  in.features = normalize_rows(in.features);
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.index(c));
  in.bank = build_prototypes(in.features, y, c);
  in.labels.num_points = n;
  in.labels.num_classes = c;
  for (int i = 0; i < n; ++i) in.points.push_back(i);
  return in;
}

void BM_ActFsf(benchmark::State& state) {
  const Inputs in = make_inputs(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate_pseudo_labels(in.probs, in.features, in.bank, in.labels, in.points, RectifyConfig{}, 1, 0.05));
  }
}
BENCHMARK(BM_ActFsf)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_AdaptiveThresholds(benchmark::State& state) {
  const Inputs in = make_inputs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(adaptive_thresholds(in.probs, RectifyConfig{}));
}
BENCHMARK(BM_AdaptiveThresholds)->Arg(100000)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace weaklab
