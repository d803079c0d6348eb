#pragma once

#include <cstdint>
#include <vector>

#include "weaklab/geometry.hpp"
#include "weaklab/superpixel.hpp"
#include "weaklab/synth.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

inline constexpr int kPointFeatureDim = 10;
inline constexpr int kPixelFeatureDim = 8;

/// Handcrafted per-point descriptors: height above the local minimum, height,
/// range, intensity, eigenvalue shape measures (linearity, planarity,
/// scattering), verticality of the normal, neighbour density and vertical span.
Matrix point_features(const PointMatrix& points, const Vector& intensity, int neighbors = 12);

/// Per-pixel descriptors (row v * W + u): colour, 5x5 mean colour, gradient
/// magnitude and 5x5 standard deviation of the grey level.
Matrix pixel_features(const Image& image);

/// Indices of the k nearest neighbours (excluding the point itself) for every
/// point, found through a uniform grid in the xy plane.
std::vector<std::vector<int>> nearest_neighbors(const PointMatrix& points, int k, double cell = 0.5);

struct CameraView {
  SuperpixelMap superpixels;
  Matrix pooled;                // num_superpixels x kPixelFeatureDim
  std::vector<PixelHit> hits;   // hits of scene points in this camera
};

/// Everything the classifier needs from one scene, computed once.
struct PreparedScene {
  std::uint64_t seed = 0;
  int num_points = 0;
  int num_classes = 0;
  IndexList rows;                 // point index of each row
  std::vector<int> row_of_point;  // -1 for points without a row
  Matrix point_x;                 // rows x kPointFeatureDim
  Matrix pixel_x;                 // rows x kPixelFeatureDim, zero without a hit
  std::vector<char> has_pixel;
  std::vector<int> gt;            // per row
  std::vector<CameraView> views;

  int num_rows() const { return static_cast<int>(rows.size()); }
};

struct PrepareConfig {
  SeedsConfig seeds;
  bool drop_invisible = true;  // keep only points seen by at least one camera
  int neighbors = 12;
};

/// Superpixel maps are computed with SEEDS unless supplied (one per camera).
PreparedScene prepare_scene(const SceneFrame& frame, const PrepareConfig& config,
                            const std::vector<SuperpixelMap>* superpixels = nullptr);

}  // namespace weaklab
