#pragma once

#include <vector>

#include "weaklab/types.hpp"

namespace weaklab {

struct AssocConfig {
  double beta_w = 1.0;
  double beta_v = 0.5;
  int projection_dim = 256;
  bool normalize = true;  // L2-normalize features before the scalar product
};

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
/// Backward of softmax_rows: given A = softmax(S) and dL/dA, returns dL/dS.
Matrix softmax_rows_backward(const Matrix& a, const Matrix& grad_a);

/// Each row scaled to unit L2 norm (rows with norm below 1e-12 are left as is).
Matrix normalize_rows(const Matrix& x);
/// Backward of normalize_rows.
Matrix normalize_rows_backward(const Matrix& x, const Matrix& grad_normalized);

struct TransitionMatrices {
  Matrix a_lc;  // N_l x N_s, softmax over superpixels of <f3d_i, f2d_j>
  Matrix a_cl;  // N_s x N_l, softmax over labelled points of the transposed scores
};

TransitionMatrices transition_matrices(const Matrix& f3d, const Matrix& f2d);

/// Y_sim[i, j] = 1 / |{k : y_k = y_i}| when y_i = y_j (diagonal included), else 0.
Matrix similarity_target(const std::vector<int>& labels);

/// KL(Y_sim || A_sim) averaged over rows, summed over entries with Y_sim > 0.
double walker_loss_value(const Matrix& a_sim, const Matrix& y_sim);

struct LossGradients {
  double loss = 0.0;
  Matrix d_f3d;
  Matrix d_f2d;
};

/// Walker loss of the round trip 3D -> 2D -> 3D, with gradients with respect to
/// the (already projected) features.
LossGradients walker_loss(const Matrix& f3d, const Matrix& f2d, const std::vector<int>& labels3d);

/// Cross-entropy from the uniform distribution to the mean visit probability
/// v_j = mean_i A_lc[i, j], minus the uniform entropy, so a uniform visit gives 0.
LossGradients visit_loss(const Matrix& f3d, const Matrix& f2d);

struct AssocBatch {
  Matrix f3d;  // N_l x D, as used in the scalar product
  Matrix f2d;  // N_s x D
  std::vector<int> labels3d;
  Matrix a_lc;
  Matrix a_cl;
  Matrix a_sim;
  Matrix y_sim;

  int num_labeled() const { return static_cast<int>(f3d.rows()); }
  int num_superpixels() const { return static_cast<int>(f2d.rows()); }
};

/// Builds transition and target matrices. Features are normalized first when
/// `normalize` is set. Throws ErrorCategory::kData for empty or non-finite input.
AssocBatch make_assoc_batch(const Matrix& f3d, const Matrix& f2d, std::vector<int> labels3d, bool normalize);

struct AssocLoss {
  double walker = 0.0;
  double visit = 0.0;
  double total = 0.0;  // beta_w * walker + beta_v * visit
  Matrix d_f3d;        // with respect to the raw (pre-normalization) features
  Matrix d_f2d;
};

AssocLoss assoc_loss(const Matrix& f3d, const Matrix& f2d, const std::vector<int>& labels3d, const AssocConfig& config);

}  // namespace weaklab
