#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weaklab/types.hpp"

namespace weaklab {

/// Named, ordered parameter tensors. Biases are stored as 1 x out matrices.
class ParameterSet {
 public:
  int add(const std::string& name, Matrix value);

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  int find(const std::string& name) const;  // -1 when absent
  Matrix& value(int i) { return values_[i]; }
  const Matrix& value(int i) const { return values_[i]; }

  std::vector<Matrix> zeros_like() const;
  bool all_finite() const;
  long long scalar_count() const;

  bool operator==(const ParameterSet&) const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

using Gradients = std::vector<Matrix>;

/// y = x W^T + b with W of shape out x in.
struct Linear {
  int weight = -1;
  int bias = -1;
  int in = 0;
  int out = 0;

  static Linear create(ParameterSet& params, const std::string& name, int in, int out, std::uint64_t seed);

  Matrix forward(const ParameterSet& params, const Matrix& x) const;
  /// Accumulates parameter gradients into `grads`, returns dL/dx.
  Matrix backward(const ParameterSet& params, const Matrix& x, const Matrix& grad_y, Gradients& grads) const;
};

Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& y, const Matrix& grad_y);

/// LI-Fusion style gate: w = sigmoid(h(tanh(f(F3) + g(F2)))), one scalar per
/// row; output = [F3, w * F2].
struct FusionGate {
  Linear f;
  Linear g;
  Linear h;

  static FusionGate create(ParameterSet& params, const std::string& name, int dim3, int dim2, int hidden,
                           std::uint64_t seed);

  struct Cache {
    Matrix pre;   // f(F3) + g(F2)
    Matrix act;   // tanh(pre)
    Vector gate;  // w
  };

  Matrix forward(const ParameterSet& params, const Matrix& f3, const Matrix& f2, Cache* cache = nullptr) const;
  /// Returns (dL/dF3, dL/dF2) and accumulates gate parameter gradients.
  std::pair<Matrix, Matrix> backward(const ParameterSet& params, const Matrix& f3, const Matrix& f2,
                                     const Cache& cache, const Matrix& grad_out, Gradients& grads) const;
};

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// SGD with Nesterov momentum: v = mu v + g; p -= lr (g + mu v).
class NesterovSgd {
 public:
  NesterovSgd() = default;
  explicit NesterovSgd(const ParameterSet& params, SgdConfig config = {});

  void step(ParameterSet& params, const Gradients& grads, double lr);
  void reset();

  std::int64_t steps() const { return steps_; }
  const std::vector<Matrix>& velocity() const { return velocity_; }
  void restore(std::vector<Matrix> velocity, std::int64_t steps);

 private:
  SgdConfig config_;
  std::vector<Matrix> velocity_;
  std::int64_t steps_ = 0;
};

/// Cosine decay from `initial` at step 0 to 0 at `total_steps - 1`.
double cosine_lr(double initial, std::int64_t step, std::int64_t total_steps);

}  // namespace weaklab
