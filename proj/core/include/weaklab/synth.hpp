#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "weaklab/geometry.hpp"
#include "weaklab/kvconfig.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

enum class ShapeKind { kGround, kBox, kCylinder, kBlob };

struct ClassSpec {
  std::string name;
  ShapeKind shape = ShapeKind::kBox;
  Eigen::Vector3d size{1.0, 1.0, 1.0};  // box: length, width, height; cylinder: radius, -, height; blob: radii
  Eigen::Vector3d color{0.5, 0.5, 0.5};
  double intensity = 0.5;
  int objects = 0;
  int points_per_object = 0;
};

/// Generator settings. Class 0 is always the ground class.
struct SceneConfig {
  std::vector<ClassSpec> classes;
  int ground_points = 5000;
  double ground_extent = 40.0;     // outer radius (m)
  double ground_min_range = 2.5;   // inner radius (m)
  double max_tilt_deg = 3.0;
  double noise_sigma = 0.02;       // point noise (m)
  double sensor_height = 1.8;      // LiDAR and camera centre above ground (m)
  double object_clearance = 0.3;   // gap between ground and object bottoms (m)
  double object_min_range = 6.0;
  double group_probability = 0.3;  // chance an object is placed touching an earlier one
  double group_gap = 0.25;
  double size_jitter = 0.15;       // relative
  double intensity_sigma = 0.08;
  double color_jitter = 0.05;
  double texture_sigma = 0.04;
  Eigen::Vector3d background_color{0.55, 0.75, 0.95};
  int num_cameras = 6;
  int image_width = 256;
  int image_height = 128;

  int num_classes() const { return static_cast<int>(classes.size()); }
  int class_count(int cls) const;
  int total_points() const;

  /// Throws ErrorCategory::kConfig for invalid settings.
  void validate() const;

  static SceneConfig defaults();
  /// Defaults overridden by `class.<i>.<field>` and top-level keys.
  static SceneConfig from_kv(const KeyValueConfig& kv);
  KeyValueConfig to_kv() const;
};

struct Primitive {
  ShapeKind shape = ShapeKind::kBox;
  int cls = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extent = Eigen::Vector3d::Ones();  // box half sizes, cylinder (r, r, h/2), blob radii
  double yaw = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

/// Everything rendered into images and sampled into points.
struct SceneGeometry {
  bool has_ground = true;
  // Ground plane z = slope_x * x + slope_y * y.
  double slope_x = 0.0;
  double slope_y = 0.0;
  Eigen::Vector3d ground_color = Eigen::Vector3d::Zero();
  Eigen::Vector3d sensor_origin = Eigen::Vector3d::Zero();
  std::vector<Primitive> objects;

  double ground_z(double x, double y) const { return slope_x * x + slope_y * y; }
  Eigen::Vector3d ground_normal() const;
};

struct RayHit {
  double t = 0.0;
  int primitive = -1;  // -1 ground, >= 0 object index
};

/// First intersection with t > t_min; nullopt when the ray escapes.
std::optional<RayHit> cast_ray(const SceneGeometry& geometry, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& direction, double t_min = 1e-9);

struct SceneFrame {
  std::uint64_t seed = 0;
  int num_classes = 0;
  std::vector<std::string> class_names;
  PointMatrix points;
  Vector intensity;
  std::vector<int> gt_class;
  std::vector<CameraModel> cameras;
  std::vector<Image> images;

  int num_points() const { return static_cast<int>(points.rows()); }
};

/// Deterministic in (config, seed).
SceneFrame generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Builds only the primitives of a scene (shared by generate_scene).
SceneGeometry build_geometry(const SceneConfig& config, std::uint64_t seed);

/// Ray-casts each pixel centre and shades with class albedo plus texture noise
/// drawn from `texture_seed`. Pixel values are quantized to multiples of 1/255.
Image render_image(const SceneGeometry& geometry, const CameraModel& camera, const SceneConfig& config,
                   std::uint64_t texture_seed);

/// Per-channel band half-width used to decide whether a pixel carries a class colour.
inline constexpr double kColorBand = 0.2;

/// Class whose base colour is nearest to `rgb`, or -1 when none lies within kColorBand
/// on every channel.
int color_band_class(const SceneConfig& config, const Eigen::Vector3d& rgb);

std::vector<CameraModel> make_camera_ring(const SceneConfig& config);

}  // namespace weaklab
