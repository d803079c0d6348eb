#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace weaklab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using IndexList = std::vector<int>;

// Pixel rows of an H x W x 3 image, stored row-major as (v * W + u, channel).
struct Image {
  int width = 0;
  int height = 0;
  Matrix rgb;  // (width * height) x 3, values in [0, 1]

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(Matrix::Zero(static_cast<Eigen::Index>(w) * h, 3)) {}

  Eigen::Index index(int u, int v) const { return static_cast<Eigen::Index>(v) * width + u; }
  bool empty() const { return width == 0 || height == 0; }
};

}  // namespace weaklab
