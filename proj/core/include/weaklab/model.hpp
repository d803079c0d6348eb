#pragma once

#include <cstdint>
#include <vector>

#include "weaklab/features.hpp"
#include "weaklab/nn.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

struct ModelConfig {
  int num_classes = 6;
  int point_dim = kPointFeatureDim;
  int pixel_dim = kPixelFeatureDim;
  int hidden = 32;
  int gate_hidden = 16;
  int projection_dim = 256;
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

/// Dual-branch toy classifier: point head and image head (two ReLU layers
/// each), fusion gate, linear classifier on the fused feature, and one
/// projection head per branch for association.
class ClassifierState {
 public:
  ClassifierState() = default;
  explicit ClassifierState(const ModelConfig& config);

  struct Forward {
    Matrix point_x, pixel_x;
    Matrix p_hidden, f3;   // point head activations
    Matrix i_hidden, f2;   // image head activations
    std::vector<char> has_pixel;
    FusionGate::Cache gate;
    Matrix fused;          // rows x 2 hidden
    Matrix logits;
  };

  /// Rows without a pixel hit use fused = [F3, 0] and bypass the gate.
  Forward forward(const Matrix& point_x, const Matrix& pixel_x, const std::vector<char>& has_pixel) const;

  /// Backward from dL/dlogits plus optional extra gradients on F3 and F2.
  void backward(const Forward& fw, const Matrix& d_logits, const Matrix* d_f3, const Matrix* d_f2,
                Gradients& grads) const;

  struct ImageForward {
    Matrix x, hidden, f2;
  };
  ImageForward image_head(const Matrix& pixel_x) const;
  void image_head_backward(const ImageForward& fw, const Matrix& d_f2, Gradients& grads) const;

  Matrix project3(const Matrix& f3) const { return proj3_.forward(params, f3); }
  Matrix project2(const Matrix& f2) const { return proj2_.forward(params, f2); }
  Matrix project3_backward(const Matrix& f3, const Matrix& d, Gradients& g) const { return proj3_.backward(params, f3, d, g); }
  Matrix project2_backward(const Matrix& f2, const Matrix& d, Gradients& g) const { return proj2_.backward(params, f2, d, g); }

  const FusionGate& gate() const { return gate_; }

  ModelConfig config;
  ParameterSet params;
  NesterovSgd optimizer;

 private:
  Linear p1_, p2_, i1_, i2_, cls_, proj3_, proj2_;
  FusionGate gate_;
};

}  // namespace weaklab
