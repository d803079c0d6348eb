#include "weaklab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weaklab/error.hpp"

namespace weaklab {

LossResult cross_entropy(const Matrix& logits, const std::vector<int>& labels, const std::vector<double>& weights) {
  const auto n = logits.rows();
  require(static_cast<Eigen::Index>(labels.size()) == n, ErrorCategory::kData, "label count differs from logits");
  require(weights.empty() || static_cast<Eigen::Index>(weights.size()) == n, ErrorCategory::kData,
          "weight count differs from logits");
  LossResult r;
  r.grad = Matrix::Zero(n, logits.cols());
  if (n == 0) return r;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double m = logits.row(i).maxCoeff();
    const RowVector e = (logits.row(i).array() - m).exp();
    const double s = e.sum();
    r.loss += w * (m + std::log(s) - logits(i, labels[i]));
    r.grad.row(i) = w * e / s;
    r.grad(i, labels[i]) -= w;
  }
  r.loss /= static_cast<double>(n);
  r.grad /= static_cast<double>(n);
  return r;
}

double lovasz_extension(const std::vector<double>& errors, const std::vector<bool>& fg) {
  const std::size_t n = errors.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
  const double gts = static_cast<double>(std::count(fg.begin(), fg.end(), true));
  double cum_fg = 0, cum_bg = 0, prev = 0, loss = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    if (fg[i]) cum_fg += 1; else cum_bg += 1;
    const double jaccard = 1.0 - (gts - cum_fg) / (gts + cum_bg);
    loss += errors[i] * (jaccard - prev);
    prev = jaccard;
  }
  return loss;
}

LossResult lovasz_softmax(const Matrix& probs, const std::vector<int>& labels, const std::vector<int>& subset) {
  const auto n = probs.rows();
  const auto c = static_cast<int>(probs.cols());
  require(static_cast<Eigen::Index>(labels.size()) == n, ErrorCategory::kData, "label count differs from probs");
  LossResult r;
  r.grad = Matrix::Zero(n, c);
  std::vector<bool> present(c, false);
  for (int y : labels) present[y] = true;
  if (!subset.empty()) {
    std::vector<bool> keep(c, false);
    for (int k : subset) keep[k] = true;
    for (int k = 0; k < c; ++k) present[k] = present[k] && keep[k];
  }
  const int num_present = static_cast<int>(std::count(present.begin(), present.end(), true));
  if (num_present == 0) return r;

  std::vector<double> err(n);
  std::vector<Eigen::Index> order(n);
  for (int k = 0; k < c; ++k) {
    if (!present[k]) continue;
    double gts = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool fg = labels[i] == k;
      gts += fg;
      err[i] = fg ? 1.0 - probs(i, k) : probs(i, k);
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return err[a] > err[b]; });
    double cum_fg = 0, cum_bg = 0, prev = 0;
    for (Eigen::Index pos = 0; pos < n; ++pos) {
      const Eigen::Index i = order[pos];
      const bool fg = labels[i] == k;
      if (fg) cum_fg += 1; else cum_bg += 1;
      const double jaccard = 1.0 - (gts - cum_fg) / (gts + cum_bg);
      const double weight = jaccard - prev;
      prev = jaccard;
      r.loss += err[i] * weight;
      r.grad(i, k) += (fg ? -weight : weight);
    }
  }
  r.loss /= num_present;
  r.grad /= num_present;
  return r;
}

NegativeLossResult negative_loss(const Matrix& probs, const std::vector<ClassMask>& permitted) {
  const auto n = probs.rows();
  require(static_cast<Eigen::Index>(permitted.size()) == n, ErrorCategory::kData,
          "negative set count differs from probs");
  NegativeLossResult r;
  r.grad = Matrix::Zero(n, probs.cols());
  if (n == 0) return r;
  for (Eigen::Index i = 0; i < n; ++i) {
    double forbidden = 0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      if (!mask_has(permitted[i], static_cast<int>(j))) forbidden += probs(i, j);
    }
    double arg = 1.0 - forbidden;
    if (arg < 1e-12) {
      arg = 1e-12;
      ++r.clamped;
      r.loss -= std::log(arg);
      continue;  // flat in the clamped region
    }
    r.loss -= std::log(arg);
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      if (!mask_has(permitted[i], static_cast<int>(j))) r.grad(i, j) = 1.0 / arg;
    }
  }
  r.loss /= static_cast<double>(n);
  r.grad /= static_cast<double>(n);
  return r;
}

}  // namespace weaklab
