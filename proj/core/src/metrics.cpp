#include "weaklab/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "weaklab/error.hpp"

namespace weaklab {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

void ConfusionMatrix::add(int truth, int prediction, std::int64_t count) {
  require(truth >= 0 && truth < num_classes_ && prediction >= 0 && prediction < num_classes_, ErrorCategory::kData,
          "class index outside the confusion matrix");
  counts_[static_cast<std::size_t>(truth) * num_classes_ + prediction] += count;
}

void ConfusionMatrix::add(const std::vector<int>& truth, const std::vector<int>& prediction) {
  require(truth.size() == prediction.size(), ErrorCategory::kData, "truth and prediction lengths differ");
  for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], prediction[i]);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  require(other.num_classes_ == num_classes_, ErrorCategory::kData, "confusion matrix sizes differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::int64_t ConfusionMatrix::truth_count(int cls) const {
  std::int64_t t = 0;
  for (int p = 0; p < num_classes_; ++p) t += at(cls, p);
  return t;
}

std::int64_t ConfusionMatrix::prediction_count(int cls) const {
  std::int64_t t = 0;
  for (int g = 0; g < num_classes_; ++g) t += at(g, cls);
  return t;
}

IoUReport miou(const ConfusionMatrix& cm) {
  const int c = cm.num_classes();
  IoUReport r;
  r.per_class.assign(c, std::numeric_limits<double>::quiet_NaN());
  r.evaluated.assign(c, false);
  double sum = 0;
  int n = 0;
  for (int k = 0; k < c; ++k) {
    const auto tp = cm.at(k, k);
    const auto gt = cm.truth_count(k);
    const auto pred = cm.prediction_count(k);
    const auto denom = gt + pred - tp;
    if (denom > 0) r.per_class[k] = static_cast<double>(tp) / static_cast<double>(denom);
    if (gt > 0) {
      r.evaluated[k] = true;
      sum += r.per_class[k];
      ++n;
    }
  }
  r.miou = n ? sum / n : 0.0;
  return r;
}

PseudoLabelQuality pseudo_label_quality(const std::vector<int>& predicted, const std::vector<int>& truth) {
  require(predicted.size() == truth.size(), ErrorCategory::kData, "pseudo label and truth lengths differ");
  PseudoLabelQuality q;
  q.candidates = static_cast<std::int64_t>(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0) continue;
    ++q.accepted;
    if (predicted[i] == truth[i]) ++q.correct;
  }
  if (q.accepted > 0) q.precision = static_cast<double>(q.correct) / static_cast<double>(q.accepted);
  q.recall = q.candidates ? static_cast<double>(q.correct) / static_cast<double>(q.candidates) : 0.0;
  return q;
}

double adjusted_rand_index(const std::vector<int>& clustering, const std::vector<int>& truth) {
  require(clustering.size() == truth.size(), ErrorCategory::kData, "clustering and truth lengths differ");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> a, b;
  double n = 0;
  for (std::size_t i = 0; i < clustering.size(); ++i) {
    if (clustering[i] < 0) continue;
    joint[{clustering[i], truth[i]}] += 1;
    a[clustering[i]] += 1;
    b[truth[i]] += 1;
    n += 1;
  }
  auto pairs = [](double x) { return x * (x - 1) / 2; };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : joint) sum_joint += pairs(v);
  for (const auto& [k, v] : a) sum_a += pairs(v);
  for (const auto& [k, v] : b) sum_b += pairs(v);
  const double total = pairs(n);
  if (total <= 0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace weaklab
