#include "weaklab/geometry.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "weaklab/error.hpp"

namespace weaklab {

void CameraModel::validate() const {
  require(width > 0 && height > 0, ErrorCategory::kConfig, "camera image size must be positive");
  require(fx() > 0.0 && fy() > 0.0, ErrorCategory::kConfig, "camera focal lengths must be positive");
  require(cx() >= 0.0 && cx() < width && cy() >= 0.0 && cy() < height, ErrorCategory::kConfig,
          "camera principal point must lie inside the image");
  const double orth = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(orth <= 1e-9, ErrorCategory::kConfig, "camera rotation is not orthonormal");
  require(translation.allFinite(), ErrorCategory::kConfig, "camera translation is not finite");
}

std::optional<PixelHit> project_camera_point(const Eigen::Vector3d& q, const CameraModel& camera) {
  if (!(q.z() > kMinDepth)) return std::nullopt;
  const double u = camera.fx() * q.x() / q.z() + camera.cx();
  const double v = camera.fy() * q.y() / q.z() + camera.cy();
  if (!(u >= 0.0 && u < camera.width && v >= 0.0 && v < camera.height)) return std::nullopt;
  PixelHit hit;
  hit.u = u;
  hit.v = v;
  hit.depth = q.z();
  return hit;
}

std::vector<PixelHit> project_points(const PointMatrix& points, const CameraModel& camera, int camera_index) {
  std::vector<PixelHit> hits;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::Vector3d p = points.row(i).transpose();
    if (auto hit = project_camera_point(camera.to_camera(p), camera)) {
      hit->point_index = static_cast<int>(i);
      hit->camera_index = camera_index;
      hits.push_back(*hit);
    }
  }
  return hits;
}

Eigen::Vector3d unproject(double u, double v, double depth, const CameraModel& camera) {
  const Eigen::Vector3d q((u - camera.cx()) * depth / camera.fx(), (v - camera.cy()) * depth / camera.fy(), depth);
  return camera.to_lidar(q);
}

std::vector<PixelHit> project_all(const PointMatrix& points, const std::vector<CameraModel>& cameras) {
  std::vector<PixelHit> all;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    auto hits = project_points(points, cameras[c], static_cast<int>(c));
    all.insert(all.end(), hits.begin(), hits.end());
  }
  return all;
}

IndexList camera_subset(const PointMatrix& points, const std::vector<CameraModel>& cameras) {
  std::vector<char> visible(static_cast<std::size_t>(points.rows()), 0);
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    for (const auto& hit : project_points(points, cameras[c], static_cast<int>(c))) visible[hit.point_index] = 1;
  }
  IndexList out;
  for (std::size_t i = 0; i < visible.size(); ++i) {
    if (visible[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::optional<PixelHit>> nearest_hits(const PointMatrix& points, const std::vector<CameraModel>& cameras) {
  std::vector<std::optional<PixelHit>> best(static_cast<std::size_t>(points.rows()));
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    for (const auto& hit : project_points(points, cameras[c], static_cast<int>(c))) {
      auto& slot = best[hit.point_index];
      if (!slot || hit.depth < slot->depth) slot = hit;
    }
  }
  return best;
}

Eigen::Matrix3d rotation_z(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

CameraModel make_ring_camera(double yaw, const Eigen::Vector3d& position, double focal, int width, int height) {
  // Camera axes in LiDAR coordinates: optical axis along the yaw direction,
  // image x to the right of it, image y pointing down.
  const Eigen::Vector3d forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Eigen::Vector3d right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Eigen::Vector3d down(0.0, 0.0, -1.0);
  CameraModel cam;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * position;
  cam.intrinsics << focal, 0.0, width / 2.0, 0.0, focal, height / 2.0, 0.0, 0.0, 1.0;
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace weaklab
