#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "weaklab/types.hpp"

namespace weaklab {

/// Pinhole camera with a rigid LiDAR-to-camera transform.
///
/// A LiDAR point p maps to the camera frame as q = R p + t; the pixel is
/// (fx q.x / q.z + cx, fy q.y / q.z + cy) with depth q.z.
struct CameraModel {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int width = 1;
  int height = 1;

  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }

  /// Throws ErrorCategory::kConfig when an invariant is violated.
  void validate() const;

  Eigen::Vector3d to_camera(const Eigen::Vector3d& point) const { return rotation * point + translation; }
  Eigen::Vector3d to_lidar(const Eigen::Vector3d& camera_point) const {
    return rotation.transpose() * (camera_point - translation);
  }
};

struct PixelHit {
  int point_index = 0;
  int camera_index = 0;
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;

  int pixel_u() const { return static_cast<int>(u); }
  int pixel_v() const { return static_cast<int>(v); }
};

// Points closer to the camera plane than this are treated as not visible.
inline constexpr double kMinDepth = 1e-6;

/// Projects one camera-frame point; nullopt when behind the camera or outside
/// the half-open image rectangle [0, W) x [0, H).
std::optional<PixelHit> project_camera_point(const Eigen::Vector3d& camera_point, const CameraModel& camera);

std::vector<PixelHit> project_points(const PointMatrix& points, const CameraModel& camera, int camera_index = 0);

/// Inverse of the pinhole projection followed by the inverse rigid transform.
Eigen::Vector3d unproject(double u, double v, double depth, const CameraModel& camera);

/// Sorted indices of points visible in at least one camera.
IndexList camera_subset(const PointMatrix& points, const std::vector<CameraModel>& cameras);

/// Every hit of every point across all cameras, ordered by camera then point.
std::vector<PixelHit> project_all(const PointMatrix& points, const std::vector<CameraModel>& cameras);

/// For each point, the hit with the smallest depth across cameras (ties go to
/// the lower camera index).
std::vector<std::optional<PixelHit>> nearest_hits(const PointMatrix& points, const std::vector<CameraModel>& cameras);

/// Rotation about +z by `angle` radians.
Eigen::Matrix3d rotation_z(double angle);

/// Camera looking horizontally along azimuth `yaw` (radians, from +x toward +y)
/// from `position`, with image x to the right and image y downward.
CameraModel make_ring_camera(double yaw, const Eigen::Vector3d& position, double focal, int width, int height);

}  // namespace weaklab
