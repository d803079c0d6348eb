#include <algorithm>
#include "weaklab/assoc.hpp"

#include <cmath>
#include <map>

#include "weaklab/error.hpp"

namespace weaklab {

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix softmax_rows_backward(const Matrix& a, const Matrix& grad_a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double inner = a.row(i).dot(grad_a.row(i));
    out.row(i) = a.row(i).array() * (grad_a.row(i).array() - inner);
  }
  return out;
}

Matrix normalize_rows(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double n = x.row(i).norm();
    if (n > 1e-12) out.row(i) /= n;
  }
  return out;
}

Matrix normalize_rows_backward(const Matrix& x, const Matrix& grad) {
  Matrix out = grad;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double n = x.row(i).norm();
    if (n <= 1e-12) continue;
    const RowVector unit = x.row(i) / n;
    out.row(i) = (grad.row(i) - unit * unit.dot(grad.row(i))) / n;
  }
  return out;
}

TransitionMatrices transition_matrices(const Matrix& f3d, const Matrix& f2d) {
  require(f3d.cols() == f2d.cols(), ErrorCategory::kData, "feature dimensions differ");
  require(f3d.allFinite() && f2d.allFinite(), ErrorCategory::kData, "non-finite association features");
  const Matrix scores = f3d * f2d.transpose();
  return {softmax_rows(scores), softmax_rows(scores.transpose())};
}

Matrix similarity_target(const std::vector<int>& labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  std::map<int, int> count;
  for (int y : labels) ++count[y];
  Matrix y = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (labels[i] == labels[j]) y(i, j) = 1.0 / count[labels[i]];
    }
  }
  return y;
}

double walker_loss_value(const Matrix& a_sim, const Matrix& y_sim) {
  double loss = 0;
  for (Eigen::Index i = 0; i < y_sim.rows(); ++i) {
    double row = 0;
    for (Eigen::Index j = 0; j < y_sim.cols(); ++j) {
      const double y = y_sim(i, j);
      if (y > 0) row += y * (std::log(y) - std::log(a_sim(i, j)));
    }
    // Each row is a KL divergence; clamp rounding below zero.
    loss += std::max(row, 0.0);
  }
  return y_sim.rows() ? loss / static_cast<double>(y_sim.rows()) : 0.0;
}

namespace {

// Gradient of a loss through both softmaxes back to the features, given
// dL/dA_lc and dL/dA_cl.
void backprop_transitions(const Matrix& f3d, const Matrix& f2d, const TransitionMatrices& t, const Matrix& d_lc,
                          const Matrix& d_cl, LossGradients& out) {
  Matrix d_scores = softmax_rows_backward(t.a_lc, d_lc);
  d_scores += softmax_rows_backward(t.a_cl, d_cl).transpose();
  out.d_f3d = d_scores * f2d;
  out.d_f2d = d_scores.transpose() * f3d;
}

}  // namespace

LossGradients walker_loss(const Matrix& f3d, const Matrix& f2d, const std::vector<int>& labels3d) {
  require(static_cast<Eigen::Index>(labels3d.size()) == f3d.rows(), ErrorCategory::kData,
          "label count differs from 3D feature rows");
  const auto t = transition_matrices(f3d, f2d);
  const Matrix a_sim = t.a_lc * t.a_cl;
  const Matrix y_sim = similarity_target(labels3d);
  const auto n = static_cast<double>(f3d.rows());
  LossGradients out;
  out.loss = walker_loss_value(a_sim, y_sim);
  Matrix g = Matrix::Zero(a_sim.rows(), a_sim.cols());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (y_sim(i, j) > 0) g(i, j) = -y_sim(i, j) / (n * a_sim(i, j));
    }
  }
  backprop_transitions(f3d, f2d, t, g * t.a_cl.transpose(), t.a_lc.transpose() * g, out);
  return out;
}

LossGradients visit_loss(const Matrix& f3d, const Matrix& f2d) {
  const auto t = transition_matrices(f3d, f2d);
  const auto nl = static_cast<double>(f3d.rows());
  const auto ns = static_cast<double>(f2d.rows());
  const RowVector visit = t.a_lc.colwise().sum() / nl;
  LossGradients out;
  out.loss = -visit.array().log().sum() / ns - std::log(ns);
  const RowVector d_visit = -1.0 / (ns * visit.array());
  const Matrix d_lc = Matrix::Ones(t.a_lc.rows(), 1) * (d_visit / nl);
  backprop_transitions(f3d, f2d, t, d_lc, Matrix::Zero(t.a_cl.rows(), t.a_cl.cols()), out);
  return out;
}

AssocBatch make_assoc_batch(const Matrix& f3d, const Matrix& f2d, std::vector<int> labels3d, bool normalize) {
  require(f3d.rows() > 0 && f2d.rows() > 0, ErrorCategory::kData, "empty association batch");
  require(static_cast<Eigen::Index>(labels3d.size()) == f3d.rows(), ErrorCategory::kData,
          "label count differs from 3D feature rows");
  AssocBatch b;
  b.f3d = normalize ? normalize_rows(f3d) : f3d;
  b.f2d = normalize ? normalize_rows(f2d) : f2d;
  auto t = transition_matrices(b.f3d, b.f2d);
  b.a_lc = std::move(t.a_lc);
  b.a_cl = std::move(t.a_cl);
  b.a_sim = b.a_lc * b.a_cl;
  b.y_sim = similarity_target(labels3d);
  b.labels3d = std::move(labels3d);
  return b;
}

AssocLoss assoc_loss(const Matrix& f3d, const Matrix& f2d, const std::vector<int>& labels3d, const AssocConfig& cfg) {
  require(f3d.rows() > 0 && f2d.rows() > 0, ErrorCategory::kData, "empty association batch");
  const Matrix x3 = cfg.normalize ? normalize_rows(f3d) : f3d;
  const Matrix x2 = cfg.normalize ? normalize_rows(f2d) : f2d;
  AssocLoss out;
  Matrix d3 = Matrix::Zero(x3.rows(), x3.cols());
  Matrix d2 = Matrix::Zero(x2.rows(), x2.cols());
  if (cfg.beta_w != 0) {
    const auto w = walker_loss(x3, x2, labels3d);
    out.walker = w.loss;
    d3 += cfg.beta_w * w.d_f3d;
    d2 += cfg.beta_w * w.d_f2d;
  }
  if (cfg.beta_v != 0) {
    const auto v = visit_loss(x3, x2);
    out.visit = v.loss;
    d3 += cfg.beta_v * v.d_f3d;
    d2 += cfg.beta_v * v.d_f2d;
  }
  out.total = cfg.beta_w * out.walker + cfg.beta_v * out.visit;
  out.d_f3d = cfg.normalize ? normalize_rows_backward(f3d, d3) : d3;
  out.d_f2d = cfg.normalize ? normalize_rows_backward(f2d, d2) : d2;
  return out;
}

}  // namespace weaklab
