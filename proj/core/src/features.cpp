#include "weaklab/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "weaklab/error.hpp"

namespace weaklab {
namespace {

std::int64_t cell_key(int cx, int cy) {
  return (static_cast<std::int64_t>(cx) << 32) ^ static_cast<std::uint32_t>(cy);
}

// Box mean over a (2r+1)^2 window with clamped borders, one channel.
std::vector<double> box_mean(const std::vector<double>& x, int w, int h, int r) {
  std::vector<double> out(x.size());
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double s = 0;
      int n = 0;
      for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
          const int uu = std::clamp(u + du, 0, w - 1), vv = std::clamp(v + dv, 0, h - 1);
          s += x[static_cast<std::size_t>(vv) * w + uu];
          ++n;
        }
      }
      out[static_cast<std::size_t>(v) * w + u] = s / n;
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<int>> nearest_neighbors(const PointMatrix& points, int k, double cell) {
  const auto n = static_cast<int>(points.rows());
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  auto cell_of = [&](double x) { return static_cast<int>(std::floor(x / cell)); };
  for (int i = 0; i < n; ++i) grid[cell_key(cell_of(points(i, 0)), cell_of(points(i, 1)))].push_back(i);

  std::vector<std::vector<int>> out(n);
  std::vector<std::pair<double, int>> cand;
  const int max_ring = 16;
  for (int i = 0; i < n; ++i) {
    const int cx = cell_of(points(i, 0)), cy = cell_of(points(i, 1));
    cand.clear();
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int dx = -ring; dx <= ring; ++dx) {
        for (int dy = -ring; dy <= ring; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
          auto it = grid.find(cell_key(cx + dx, cy + dy));
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j != i) cand.push_back({(points.row(j) - points.row(i)).squaredNorm(), j});
          }
        }
      }
      if (static_cast<int>(cand.size()) >= k) {
        std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
        // Anything outside the searched rings is at least ring * cell away in xy.
        const double reach = ring * cell;
        if (cand[k - 1].first <= reach * reach) break;
      }
    }
    const int take = std::min<int>(k, static_cast<int>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    out[i].reserve(take);
    for (int t = 0; t < take; ++t) out[i].push_back(cand[t].second);
  }
  return out;
}

Matrix point_features(const PointMatrix& points, const Vector& intensity, int neighbors) {
  const auto n = static_cast<int>(points.rows());
  require(intensity.size() == n, ErrorCategory::kData, "intensity length differs from point count");
  Matrix x = Matrix::Zero(n, kPointFeatureDim);

  // Lowest point in a 3x3 neighbourhood of 2 m cells approximates local ground.
  const double ground_cell = 2.0;
  std::unordered_map<std::int64_t, double> lowest;
  auto gc = [&](double v) { return static_cast<int>(std::floor(v / ground_cell)); };
  for (int i = 0; i < n; ++i) {
    const auto key = cell_key(gc(points(i, 0)), gc(points(i, 1)));
    auto [it, inserted] = lowest.try_emplace(key, points(i, 2));
    if (!inserted) it->second = std::min(it->second, points(i, 2));
  }

  const auto knn = nearest_neighbors(points, neighbors);
  for (int i = 0; i < n; ++i) {
    double floor_z = points(i, 2);
    const int cx = gc(points(i, 0)), cy = gc(points(i, 1));
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        auto it = lowest.find(cell_key(cx + dx, cy + dy));
        if (it != lowest.end()) floor_z = std::min(floor_z, it->second);
      }
    }
    const double range = std::hypot(points(i, 0), points(i, 1));
    x(i, 0) = std::min(points(i, 2) - floor_z, 5.0) / 2.0;
    x(i, 1) = points(i, 2) / 2.0;
    x(i, 2) = range / 40.0;
    x(i, 3) = intensity(i);

    const auto& nb = knn[i];
    if (nb.size() < 3) continue;
    Eigen::Vector3d mean = points.row(i).transpose();
    double zmin = points(i, 2), zmax = points(i, 2), dist = 0;
    for (int j : nb) {
      mean += points.row(j).transpose();
      zmin = std::min(zmin, points(j, 2));
      zmax = std::max(zmax, points(j, 2));
      dist += (points.row(j) - points.row(i)).norm();
    }
    mean /= static_cast<double>(nb.size() + 1);
    Eigen::Matrix3d cov = (points.row(i).transpose() - mean) * (points.row(i).transpose() - mean).transpose();
    for (int j : nb) {
      const Eigen::Vector3d d = points.row(j).transpose() - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nb.size() + 1);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);  // ascending
    const double l1 = ev(2) + 1e-12, l2 = ev(1), l3 = ev(0);
    x(i, 4) = (l1 - l2) / l1;
    x(i, 5) = (l2 - l3) / l1;
    x(i, 6) = l3 / l1;
    x(i, 7) = std::abs(es.eigenvectors().col(0).z());
    x(i, 8) = std::log1p(dist / static_cast<double>(nb.size()));
    x(i, 9) = std::min(zmax - zmin, 4.0) / 2.0;
  }
  return x;
}

Matrix pixel_features(const Image& image) {
  const int w = image.width, h = image.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  Matrix x(static_cast<Eigen::Index>(n), kPixelFeatureDim);
  std::vector<double> grey(n), grey_sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    grey[i] = (image.rgb(r, 0) + image.rgb(r, 1) + image.rgb(r, 2)) / 3.0;
    grey_sq[i] = grey[i] * grey[i];
  }
  for (int c = 0; c < 3; ++c) {
    std::vector<double> ch(n);
    for (std::size_t i = 0; i < n; ++i) ch[i] = image.rgb(static_cast<Eigen::Index>(i), c);
    const auto m = box_mean(ch, w, h, 2);
    for (std::size_t i = 0; i < n; ++i) {
      x(static_cast<Eigen::Index>(i), c) = ch[i];
      x(static_cast<Eigen::Index>(i), 3 + c) = m[i];
    }
  }
  const auto gm = box_mean(grey, w, h, 2);
  const auto gsq = box_mean(grey_sq, w, h, 2);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      auto at = [&](int uu, int vv) {
        return grey[static_cast<std::size_t>(std::clamp(vv, 0, h - 1)) * w + std::clamp(uu, 0, w - 1)];
      };
      const double gx = 0.5 * (at(u + 1, v) - at(u - 1, v));
      const double gy = 0.5 * (at(u, v + 1) - at(u, v - 1));
      x(static_cast<Eigen::Index>(i), 6) = 4.0 * std::hypot(gx, gy);
      x(static_cast<Eigen::Index>(i), 7) = 4.0 * std::sqrt(std::max(0.0, gsq[i] - gm[i] * gm[i]));
    }
  }
  return x;
}

PreparedScene prepare_scene(const SceneFrame& frame, const PrepareConfig& cfg,
                            const std::vector<SuperpixelMap>* superpixels) {
  const int n = frame.num_points();
  const int cams = static_cast<int>(frame.cameras.size());
  require(frame.images.size() == frame.cameras.size(), ErrorCategory::kData, "image count differs from camera count");
  require(!superpixels || static_cast<int>(superpixels->size()) == cams, ErrorCategory::kData,
          "superpixel map count differs from camera count");

  PreparedScene s;
  s.seed = frame.seed;
  s.num_points = n;
  s.num_classes = frame.num_classes;

  const auto nearest = nearest_hits(frame.points, frame.cameras);
  s.row_of_point.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (cfg.drop_invisible && !nearest[i]) continue;
    s.row_of_point[i] = static_cast<int>(s.rows.size());
    s.rows.push_back(i);
  }

  const Matrix px_all = point_features(frame.points, frame.intensity, cfg.neighbors);
  const int m = s.num_rows();
  s.point_x.resize(m, kPointFeatureDim);
  s.pixel_x = Matrix::Zero(m, kPixelFeatureDim);
  s.has_pixel.assign(m, 0);
  s.gt.resize(m);

  std::vector<Matrix> pixel_maps(cams);
  for (int c = 0; c < cams; ++c) pixel_maps[c] = pixel_features(frame.images[c]);

  for (int r = 0; r < m; ++r) {
    const int i = s.rows[r];
    s.point_x.row(r) = px_all.row(i);
    s.gt[r] = frame.gt_class[i];
    if (const auto& hit = nearest[i]) {
      const auto& img = frame.images[hit->camera_index];
      s.pixel_x.row(r) = pixel_maps[hit->camera_index].row(img.index(hit->pixel_u(), hit->pixel_v()));
      s.has_pixel[r] = 1;
    }
  }

  s.views.resize(cams);
  for (int c = 0; c < cams; ++c) {
    auto& view = s.views[c];
    view.superpixels = superpixels ? (*superpixels)[c] : seeds_segment(frame.images[c], cfg.seeds);
    view.pooled = superpixel_features(view.superpixels, pixel_maps[c]);
    view.hits = project_points(frame.points, frame.cameras[c], c);
  }
  return s;
}

}  // namespace weaklab
