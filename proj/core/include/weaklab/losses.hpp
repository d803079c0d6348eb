#pragma once

#include <vector>

#include "weaklab/labels.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // same shape as the differentiated input
};

/// Weighted cross-entropy on logits: (1/N) sum_i w_i (logsumexp(z_i) - z_i[y_i]).
/// `weights` may be empty (all ones). Gradient is with respect to the logits.
LossResult cross_entropy(const Matrix& logits, const std::vector<int>& labels, const std::vector<double>& weights = {});

/// Lovász-softmax over the classes present in `labels`, gradient with respect
/// to `probs`. Classes outside `class_subset` are skipped when it is non-empty.
LossResult lovasz_softmax(const Matrix& probs, const std::vector<int>& labels, const std::vector<int>& class_subset = {});

/// Lovász extension of the Jaccard loss for one class given per-point errors
/// and foreground flags.
double lovasz_extension(const std::vector<double>& errors, const std::vector<bool>& foreground);

struct NegativeLossResult {
  double loss = 0.0;
  Matrix grad;        // with respect to probs
  int clamped = 0;    // rows whose permitted mass fell below 1e-12
};

/// -(1/N) sum_i log(1 - sum_{j not permitted} p_ij); `permitted[i]` is the class set of row i.
NegativeLossResult negative_loss(const Matrix& probs, const std::vector<ClassMask>& permitted);

}  // namespace weaklab
