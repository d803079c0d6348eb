#include "weaklab/nn.hpp"

#include <cmath>
#include <numbers>

#include "weaklab/error.hpp"
#include "weaklab/rng.hpp"

namespace weaklab {

int ParameterSet::add(const std::string& name, Matrix value) {
  require(find(name) < 0, ErrorCategory::kData, "duplicate parameter " + name);
  names_.push_back(name);
  values_.push_back(std::move(value));
  return static_cast<int>(values_.size()) - 1;
}

int ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<Matrix> ParameterSet::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(Matrix::Zero(v.rows(), v.cols()));
  return out;
}

bool ParameterSet::all_finite() const {
  for (const auto& v : values_) {
    if (!v.allFinite()) return false;
  }
  return true;
}

long long ParameterSet::scalar_count() const {
  long long n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].rows() != other.values_[i].rows() || values_[i].cols() != other.values_[i].cols()) return false;
    if (values_[i] != other.values_[i]) return false;
  }
  return true;
}

Linear Linear::create(ParameterSet& params, const std::string& name, int in, int out, std::uint64_t seed) {
  Rng rng(seed);
  const double scale = std::sqrt(2.0 / in);
  Matrix w(out, in);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, scale);
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = params.add(name + ".weight", std::move(w));
  l.bias = params.add(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Matrix Linear::forward(const ParameterSet& params, const Matrix& x) const {
  require(x.cols() == in, ErrorCategory::kData, "linear layer input width mismatch");
  Matrix y = x * params.value(weight).transpose();
  y.rowwise() += params.value(bias).row(0);
  return y;
}

Matrix Linear::backward(const ParameterSet& params, const Matrix& x, const Matrix& grad_y, Gradients& grads) const {
  grads[weight].noalias() += grad_y.transpose() * x;
  grads[bias] += grad_y.colwise().sum();
  return grad_y * params.value(weight);
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& y, const Matrix& grad_y) {
  return (y.array() > 0.0).select(grad_y, 0.0);
}

FusionGate FusionGate::create(ParameterSet& params, const std::string& name, int dim3, int dim2, int hidden,
                              std::uint64_t seed) {
  FusionGate gate;
  gate.f = Linear::create(params, name + ".f", dim3, hidden, mix_seed(seed, 1));
  gate.g = Linear::create(params, name + ".g", dim2, hidden, mix_seed(seed, 2));
  gate.h = Linear::create(params, name + ".h", hidden, 1, mix_seed(seed, 3));
  return gate;
}

Matrix FusionGate::forward(const ParameterSet& params, const Matrix& f3, const Matrix& f2, Cache* cache) const {
  require(f3.rows() == f2.rows(), ErrorCategory::kData, "fusion inputs have different row counts");
  Cache local;
  Cache& c = cache ? *cache : local;
  c.pre = f.forward(params, f3) + g.forward(params, f2);
  c.act = c.pre.array().tanh();
  const Matrix s = h.forward(params, c.act);
  c.gate = (1.0 / (1.0 + (-s.col(0).array()).exp())).matrix();
  Matrix out(f3.rows(), f3.cols() + f2.cols());
  out.leftCols(f3.cols()) = f3;
  out.rightCols(f2.cols()) = c.gate.asDiagonal() * f2;
  return out;
}

std::pair<Matrix, Matrix> FusionGate::backward(const ParameterSet& params, const Matrix& f3, const Matrix& f2,
                                               const Cache& c, const Matrix& grad_out, Gradients& grads) const {
  Matrix d3 = grad_out.leftCols(f3.cols());
  const Matrix d_gated = grad_out.rightCols(f2.cols());
  Matrix d2 = c.gate.asDiagonal() * d_gated;
  const Vector d_gate = (d_gated.array() * f2.array()).rowwise().sum();
  const Vector d_s = d_gate.array() * c.gate.array() * (1.0 - c.gate.array());
  const Matrix d_act = h.backward(params, c.act, d_s, grads);
  const Matrix d_pre = d_act.array() * (1.0 - c.act.array().square());
  d3 += f.backward(params, f3, d_pre, grads);
  d2 += g.backward(params, f2, d_pre, grads);
  return {std::move(d3), std::move(d2)};
}

NesterovSgd::NesterovSgd(const ParameterSet& params, SgdConfig config)
    : config_(config), velocity_(params.zeros_like()) {}

void NesterovSgd::step(ParameterSet& params, const Gradients& grads, double lr) {
  ++steps_;
  if (lr == 0.0) return;
  for (int i = 0; i < params.size(); ++i) {
    Matrix g = grads[i];
    if (config_.weight_decay != 0) g += config_.weight_decay * params.value(i);
    velocity_[i] = config_.momentum * velocity_[i] + g;
    params.value(i) -= lr * (g + config_.momentum * velocity_[i]);
  }
}

void NesterovSgd::reset() {
  for (auto& v : velocity_) v.setZero();
}

void NesterovSgd::restore(std::vector<Matrix> velocity, std::int64_t steps) {
  velocity_ = std::move(velocity);
  steps_ = steps;
}

double cosine_lr(double initial, std::int64_t step, std::int64_t total_steps) {
  if (total_steps <= 1) return step == 0 ? initial : 0.0;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return 0.5 * initial * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace weaklab
