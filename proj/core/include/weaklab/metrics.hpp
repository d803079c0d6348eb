#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace weaklab {

/// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes = 0);

  void add(int truth, int prediction, std::int64_t count = 1);
  void add(const std::vector<int>& truth, const std::vector<int>& prediction);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  int num_classes() const { return num_classes_; }
  std::int64_t at(int truth, int prediction) const { return counts_[static_cast<std::size_t>(truth) * num_classes_ + prediction]; }
  std::int64_t total() const;
  std::int64_t truth_count(int cls) const;
  std::int64_t prediction_count(int cls) const;

 private:
  int num_classes_;
  std::vector<std::int64_t> counts_;
};

struct IoUReport {
  std::vector<double> per_class;  // NaN for classes absent from truth and predictions
  std::vector<bool> evaluated;    // classes present in truth
  double miou = 0.0;              // in [0, 1]
};

/// IoU_c = TP / (TP + FP + FN); the mean runs over classes present in truth.
IoUReport miou(const ConfusionMatrix& cm);

struct PseudoLabelQuality {
  std::int64_t accepted = 0;
  std::int64_t correct = 0;
  std::int64_t candidates = 0;
  std::optional<double> precision;  // absent when nothing was accepted
  double recall = 0.0;              // correct / candidates
  std::optional<double> error_rate() const {
    if (!precision) return std::nullopt;
    return 1.0 - *precision;
  }
};

/// `predicted[i]` is the accepted label of candidate i, or -1 when rejected.
PseudoLabelQuality pseudo_label_quality(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Adjusted Rand index over points whose cluster id is not -1.
double adjusted_rand_index(const std::vector<int>& clustering, const std::vector<int>& truth);

}  // namespace weaklab
