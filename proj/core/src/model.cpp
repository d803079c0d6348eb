#include "weaklab/model.hpp"

#include "weaklab/error.hpp"
#include "weaklab/rng.hpp"

namespace weaklab {

ClassifierState::ClassifierState(const ModelConfig& cfg) : config(cfg) {
  require(cfg.num_classes >= 2 && cfg.hidden > 0 && cfg.gate_hidden > 0 && cfg.projection_dim > 0,
          ErrorCategory::kConfig, "invalid model dimensions");
  const auto s = cfg.seed;
  p1_ = Linear::create(params, "point.0", cfg.point_dim, cfg.hidden, mix_seed(s, 11));
  p2_ = Linear::create(params, "point.1", cfg.hidden, cfg.hidden, mix_seed(s, 12));
  i1_ = Linear::create(params, "image.0", cfg.pixel_dim, cfg.hidden, mix_seed(s, 21));
  i2_ = Linear::create(params, "image.1", cfg.hidden, cfg.hidden, mix_seed(s, 22));
  gate_ = FusionGate::create(params, "gate", cfg.hidden, cfg.hidden, cfg.gate_hidden, mix_seed(s, 31));
  cls_ = Linear::create(params, "classifier", 2 * cfg.hidden, cfg.num_classes, mix_seed(s, 41));
  proj3_ = Linear::create(params, "proj3", cfg.hidden, cfg.projection_dim, mix_seed(s, 51));
  proj2_ = Linear::create(params, "proj2", cfg.hidden, cfg.projection_dim, mix_seed(s, 52));
  optimizer = NesterovSgd(params);
}

ClassifierState::ImageForward ClassifierState::image_head(const Matrix& pixel_x) const {
  ImageForward fw;
  fw.x = pixel_x;
  fw.hidden = relu(i1_.forward(params, pixel_x));
  fw.f2 = relu(i2_.forward(params, fw.hidden));
  return fw;
}

void ClassifierState::image_head_backward(const ImageForward& fw, const Matrix& d_f2, Gradients& grads) const {
  const Matrix d_h = i2_.backward(params, fw.hidden, relu_backward(fw.f2, d_f2), grads);
  i1_.backward(params, fw.x, relu_backward(fw.hidden, d_h), grads);
}

ClassifierState::Forward ClassifierState::forward(const Matrix& point_x, const Matrix& pixel_x,
                                                  const std::vector<char>& has_pixel) const {
  require(point_x.rows() == pixel_x.rows() && static_cast<Eigen::Index>(has_pixel.size()) == point_x.rows(),
          ErrorCategory::kData, "classifier inputs have different row counts");
  Forward fw;
  fw.point_x = point_x;
  fw.pixel_x = pixel_x;
  fw.has_pixel = has_pixel;
  fw.p_hidden = relu(p1_.forward(params, point_x));
  fw.f3 = relu(p2_.forward(params, fw.p_hidden));
  fw.i_hidden = relu(i1_.forward(params, pixel_x));
  fw.f2 = relu(i2_.forward(params, fw.i_hidden));
  fw.fused = gate_.forward(params, fw.f3, fw.f2, &fw.gate);
  const int h = config.hidden;
  for (Eigen::Index r = 0; r < fw.fused.rows(); ++r) {
    if (!has_pixel[r]) fw.fused.row(r).tail(h).setZero();
  }
  fw.logits = cls_.forward(params, fw.fused);
  return fw;
}

void ClassifierState::backward(const Forward& fw, const Matrix& d_logits, const Matrix* d_f3_extra,
                               const Matrix* d_f2_extra, Gradients& grads) const {
  const int h = config.hidden;
  Matrix d_fused = cls_.backward(params, fw.fused, d_logits, grads);
  Matrix d_f3, d_f2;
  bool any_bypass = false;
  for (char c : fw.has_pixel) any_bypass = any_bypass || !c;
  if (any_bypass) {
    // Bypassed rows contribute only through F3; keep them out of the gate.
    Matrix d_gated = d_fused;
    for (Eigen::Index r = 0; r < d_gated.rows(); ++r) {
      if (!fw.has_pixel[r]) d_gated.row(r).tail(h).setZero();
    }
    auto [a, b] = gate_.backward(params, fw.f3, fw.f2, fw.gate, d_gated, grads);
    d_f3 = std::move(a);
    d_f2 = std::move(b);
  } else {
    auto [a, b] = gate_.backward(params, fw.f3, fw.f2, fw.gate, d_fused, grads);
    d_f3 = std::move(a);
    d_f2 = std::move(b);
  }
  if (d_f3_extra) d_f3 += *d_f3_extra;
  if (d_f2_extra) d_f2 += *d_f2_extra;

  const Matrix d_ph = p2_.backward(params, fw.p_hidden, relu_backward(fw.f3, d_f3), grads);
  p1_.backward(params, fw.point_x, relu_backward(fw.p_hidden, d_ph), grads);
  const Matrix d_ih = i2_.backward(params, fw.i_hidden, relu_backward(fw.f2, d_f2), grads);
  i1_.backward(params, fw.pixel_x, relu_backward(fw.i_hidden, d_ih), grads);
}

}  // namespace weaklab
