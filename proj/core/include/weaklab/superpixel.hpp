#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "weaklab/geometry.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

struct SeedsConfig {
  int num_superpixels = 64;
  int num_levels = 3;
  int iterations = 4;
  int histogram_bins = 5;  // per colour channel
};

struct SuperpixelMap {
  int width = 0;
  int height = 0;
  std::vector<int> assignment;  // v * width + u
  int num_superpixels = 0;
  std::vector<int> pixel_count;
  std::vector<Eigen::Vector2d> centroid;  // (u, v) pixel-centre coordinates
  Matrix mean_color;                      // num_superpixels x 3
  std::vector<double> energy_history;     // initial grid, then after each iteration

  int at(int u, int v) const { return assignment[static_cast<std::size_t>(v) * width + u]; }
};

/// SEEDS: regular block grid, then coarse-to-fine block moves and pixel moves
/// along superpixel boundaries. A move is taken only when it strictly raises
/// the colour-histogram energy sum_k sum_j (h_k(j) / |A_k|)^2 and provably
/// keeps the source superpixel 4-connected.
SuperpixelMap seeds_segment(const Image& image, const SeedsConfig& config);

/// The energy maximized by seeds_segment, evaluated from scratch.
double seeds_energy(const Image& image, const std::vector<int>& assignment, int num_superpixels, int histogram_bins);

/// True when every label in [0, num_superpixels) is present and 4-connected.
bool superpixels_connected(const SuperpixelMap& map);

struct MatchedSuperpixel {
  int superpixel = 0;
  int cls = 0;
  std::vector<int> points;  // sparse-labelled points of class `cls` inside the superpixel

  bool operator==(const MatchedSuperpixel&) const = default;
};

/// Superpixels containing at least one sparse-labelled point, one entry per
/// (superpixel, class), ordered by superpixel then class.
std::vector<MatchedSuperpixel> match_superpixels(const SuperpixelMap& map, const std::vector<PixelHit>& hits,
                                                 const std::map<int, int>& sparse_labels);

/// Mean of `feature_map` rows (one row per pixel, v * width + u) over each superpixel.
Matrix superpixel_features(const SuperpixelMap& map, const Matrix& feature_map);

}  // namespace weaklab
