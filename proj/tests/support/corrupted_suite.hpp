#pragma once

#include <algorithm>
#include <vector>

#include "test_support.hpp"
#include "weaklab/assoc.hpp"
#include "weaklab/labels.hpp"
#include "weaklab/metrics.hpp"
#include "weaklab/rectify.hpp"

namespace weaklab::testing {

/// Candidates with clustered features and classifier outputs in which a
/// fraction of predictions is replaced by a confidently wrong class. Wrong and
/// right predictions share one confidence distribution, so confidence alone
/// cannot separate them.
struct CorruptedSuite {
  int num_classes = 5;
  Matrix probs;                 // candidates x C
  Matrix features;              // candidates x D, unit rows
  std::vector<int> truth;
  std::vector<bool> corrupted;
  PrototypeBank bank;           // from a separate labelled set
  LabelSet labels;              // every candidate unlabelled
  std::vector<int> points;
};

inline CorruptedSuite make_corrupted_suite(std::uint64_t seed, int candidates = 2000, double noise_rate = 0.2,
                                           int dim = 16, int labelled_per_class = 40) {
  Rng rng(seed);
  CorruptedSuite s;
  const int c = s.num_classes;
  const Matrix centres = random_matrix(rng, c, dim, 1.0);
  auto feature = [&](int cls) {
    RowVector f = centres.row(cls) + random_matrix(rng, 1, dim, 0.45).row(0);
    return RowVector(f / f.norm());
  };
  Matrix lab_f(c * labelled_per_class, dim);
  std::vector<int> lab_y(c * labelled_per_class);
  for (int i = 0; i < c * labelled_per_class; ++i) {
    lab_y[i] = i % c;
    lab_f.row(i) = feature(lab_y[i]);
  }
  s.bank = build_prototypes(lab_f, lab_y, c);

  s.probs.resize(candidates, c);
  s.features.resize(candidates, dim);
  s.truth.resize(candidates);
  s.corrupted.resize(candidates);
  for (int i = 0; i < candidates; ++i) {
    const int y = static_cast<int>(rng.index(c));
    s.truth[i] = y;
    s.features.row(i) = feature(y);
    s.corrupted[i] = rng.uniform() < noise_rate;
    int pred = y;
    if (s.corrupted[i]) pred = (y + 1 + static_cast<int>(rng.index(c - 1))) % c;
    const double peak = 0.35 + 0.64 * std::sqrt(rng.uniform());
    RowVector rest(c);
    for (int k = 0; k < c; ++k) rest[k] = k == pred ? 0.0 : rng.uniform(0.05, 1.0);
    rest *= (1.0 - peak) / rest.sum();
    rest[pred] = peak;
    s.probs.row(i) = rest;
  }
  s.labels.num_points = candidates;
  s.labels.num_classes = c;
  for (int i = 0; i < candidates; ++i) s.points.push_back(i);
  return s;
}

/// Largest-first sorted confidences give the fix threshold accepting at most `count` rows.
inline double fix_threshold_for_count(const Matrix& probs, int count) {
  std::vector<double> conf(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) conf[i] = probs.row(i).maxCoeff();
  std::sort(conf.rbegin(), conf.rend());
  if (count <= 0) return 1.0 + 1e-9;
  if (count >= static_cast<int>(conf.size())) return 0.0;
  // Strictly above the (count+1)-th confidence, so ties never push past `count`.
  return std::nextafter(conf[count], 2.0);
}

inline std::vector<int> masked_labels(const std::vector<bool>& accept, const std::vector<int>& predicted) {
  std::vector<int> out(accept.size(), -1);
  for (std::size_t i = 0; i < accept.size(); ++i) {
    if (accept[i]) out[i] = predicted[i];
  }
  return out;
}

}  // namespace weaklab::testing
