#include "weaklab/activelabel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "weaklab/error.hpp"
#include "weaklab/rng.hpp"

namespace weaklab {
namespace {

std::optional<Plane> plane_through(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  Eigen::Vector3d n = (b - a).cross(c - a);
  const double len = n.norm();
  // Relative to edge lengths so the test is scale free.
  const double scale = (b - a).norm() * (c - a).norm();
  if (scale <= 0.0 || len <= 1e-6 * scale) return std::nullopt;
  n /= len;
  if (n.z() < 0) n = -n;
  return Plane{n, -n.dot(a)};
}

std::optional<Plane> least_squares_plane(const PointMatrix& points, const IndexList& idx) {
  if (idx.size() < 3) return std::nullopt;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i : idx) mean += points.row(i).transpose();
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i : idx) {
    const Eigen::Vector3d d = points.row(i).transpose() - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  // Degenerate (collinear) when the two largest spreads are not both present.
  if (es.eigenvalues()(1) <= 1e-12 * std::max(1.0, es.eigenvalues()(2))) return std::nullopt;
  Eigen::Vector3d n = es.eigenvectors().col(0).normalized();
  if (n.z() < 0) n = -n;
  return Plane{n, -n.dot(mean)};
}

}  // namespace

PillarPartition partition_pillars(const PointMatrix& points, const PillarConfig& cfg) {
  require(cfg.radial_bins > 0 && cfg.angular_bins > 0, ErrorCategory::kConfig, "pillar bins must be positive");
  PillarPartition part;
  part.radial_bins = cfg.radial_bins;
  part.angular_bins = cfg.angular_bins;
  double r_max = cfg.max_range;
  if (r_max <= 0.0) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) r_max = std::max(r_max, std::hypot(points(i, 0), points(i, 1)));
    if (r_max <= 0.0) r_max = 1.0;
  }
  part.max_range = r_max;
  part.assignment.resize(static_cast<std::size_t>(points.rows()));
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double r = std::hypot(points(i, 0), points(i, 1));
    double theta = std::atan2(points(i, 1), points(i, 0));
    if (theta < 0) theta += two_pi;
    int rb = static_cast<int>(r / r_max * cfg.radial_bins);
    int ab = static_cast<int>(theta / two_pi * cfg.angular_bins);
    rb = std::clamp(rb, 0, cfg.radial_bins - 1);
    ab = std::clamp(ab, 0, cfg.angular_bins - 1);
    part.assignment[i] = rb * cfg.angular_bins + ab;
  }
  return part;
}

std::optional<Plane> fit_ground_plane(const PointMatrix& points, const IndexList& members, const RansacConfig& cfg,
                                      std::uint64_t seed, const Plane* reference) {
  if (members.size() < 3) return std::nullopt;
  auto height = [&](int i) {
    if (!reference) return points(i, 2);
    return reference->normal.dot(points.row(i).transpose()) + reference->offset;
  };
  double z_min = std::numeric_limits<double>::infinity();
  for (int i : members) z_min = std::min(z_min, height(i));
  IndexList seeds;
  for (int i : members) {
    if (height(i) <= z_min + cfg.seed_band) seeds.push_back(i);
  }
  if (seeds.size() < 3) return std::nullopt;

  Rng rng(seed);
  std::optional<Plane> best;
  std::size_t best_inliers = 0;
  const auto m = seeds.size();
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto a = rng.index(m);
    auto b = rng.index(m - 1);
    if (b >= a) ++b;
    auto c = rng.index(m - 2);
    if (c >= std::min(a, b)) ++c;
    if (c >= std::max(a, b)) ++c;
    auto plane = plane_through(points.row(seeds[a]).transpose(), points.row(seeds[b]).transpose(),
                               points.row(seeds[c]).transpose());
    if (!plane) continue;
    std::size_t inliers = 0;
    for (int i : seeds) inliers += plane->distance(points.row(i).transpose()) <= cfg.inlier_threshold ? 1 : 0;
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best = plane;
    }
  }
  if (!best) return std::nullopt;

  IndexList inliers;
  for (int i : seeds) {
    if (best->distance(points.row(i).transpose()) <= cfg.inlier_threshold) inliers.push_back(i);
  }
  if (auto refit = least_squares_plane(points, inliers)) best = refit;
  return best;
}

std::vector<bool> detect_ground(const PointMatrix& points, const PillarConfig& pillars, const RansacConfig& ransac,
                                std::uint64_t seed) {
  const PillarPartition part = partition_pillars(points, pillars);
  const int np = part.num_pillars();
  std::vector<IndexList> members(np);
  for (std::size_t i = 0; i < part.assignment.size(); ++i) members[part.assignment[i]].push_back(static_cast<int>(i));

  const double cos_max = std::cos(ransac.max_normal_angle_deg * std::numbers::pi / 180.0);
  IndexList minima;
  for (const auto& m : members) {
    if (m.empty()) continue;
    minima.push_back(*std::min_element(m.begin(), m.end(), [&](int a, int b) { return points(a, 2) < points(b, 2); }));
  }
  RansacConfig coarse = ransac;
  coarse.seed_band = std::numeric_limits<double>::infinity();
  coarse.inlier_threshold = 2 * ransac.inlier_threshold;
  std::optional<Plane> reference = fit_ground_plane(points, minima, coarse, mix_seed(seed, 0x6E0F));
  if (reference && reference->normal.z() < cos_max) reference.reset();

  std::vector<std::optional<Plane>> planes(np);
  std::vector<Eigen::Vector2d> centre(np, Eigen::Vector2d::Zero());
  for (int pid = 0; pid < np; ++pid) {
    for (int i : members[pid]) centre[pid] += Eigen::Vector2d(points(i, 0), points(i, 1));
    if (!members[pid].empty()) centre[pid] /= static_cast<double>(members[pid].size());
    auto plane = fit_ground_plane(points, members[pid], ransac, mix_seed(seed, static_cast<std::uint64_t>(pid)),
                                  reference ? &*reference : nullptr);
    if (plane && plane->normal.z() >= cos_max) planes[pid] = plane;
  }

  auto height = [](const Plane& p, const Eigen::Vector2d& xy) {
    return -(p.normal.x() * xy.x() + p.normal.y() * xy.y() + p.offset) / p.normal.z();
  };
  std::vector<std::optional<Plane>> chosen = planes;
  if (ransac.consensus_tolerance > 0) {
    for (int pid = 0; pid < np; ++pid) {
      if (!planes[pid]) continue;
      const int rb = pid / part.angular_bins, ab = pid % part.angular_bins;
      std::vector<std::pair<double, int>> nb;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int da = -1; da <= 1; ++da) {
          if (dr == 0 && da == 0) continue;
          const int r = rb + dr;
          if (r < 0 || r >= part.radial_bins) continue;
          const int a = (ab + da + part.angular_bins) % part.angular_bins;
          const int q = r * part.angular_bins + a;
          if (q != pid && planes[q]) nb.push_back({height(*planes[q], centre[pid]), q});
        }
      }
      if (nb.size() < 2) continue;
      std::sort(nb.begin(), nb.end());
      const auto& med = nb[(nb.size() - 1) / 2];
      if (std::abs(height(*planes[pid], centre[pid]) - med.first) > ransac.consensus_tolerance) {
        chosen[pid] = planes[med.second];
      }
    }
  }

  // Pillars too sparse or steep for their own plane fall back to the reference.
  if (reference) {
    for (int pid = 0; pid < np; ++pid) {
      if (!chosen[pid]) chosen[pid] = reference;
    }
  }

  std::vector<bool> ground(static_cast<std::size_t>(points.rows()), false);
  for (int pid = 0; pid < np; ++pid) {
    if (!chosen[pid]) continue;
    for (int i : members[pid]) {
      if (chosen[pid]->distance(points.row(i).transpose()) <= ransac.inlier_threshold) ground[i] = true;
    }
  }
  return ground;
}

AnnotationUnits build_annotation_units(const PointMatrix& points, const ActiveLabelConfig& cfg, std::uint64_t seed) {
  AnnotationUnits units;
  units.ground_mask = detect_ground(points, cfg.pillars, cfg.ransac, seed);
  const auto n = static_cast<int>(points.rows());
  IndexList rest;
  for (int i = 0; i < n; ++i) {
    if (!cfg.ground_as_unit || !units.ground_mask[i]) rest.push_back(i);
  }
  Matrix sub(static_cast<Eigen::Index>(rest.size()), 3);
  for (std::size_t k = 0; k < rest.size(); ++k) sub.row(k) = points.row(rest[k]);
  const Clustering c = hdbscan(sub, cfg.hdbscan);

  units.clustering.cluster_id.assign(n, -1);
  units.clustering.num_clusters = c.num_clusters;
  for (std::size_t k = 0; k < rest.size(); ++k) units.clustering.cluster_id[rest[k]] = c.cluster_id[k];
  if (cfg.ground_as_unit) {
    bool any = false;
    for (int i = 0; i < n; ++i) {
      if (units.ground_mask[i]) {
        units.clustering.cluster_id[i] = c.num_clusters;
        any = true;
      }
    }
    if (any) units.ground_unit = units.clustering.num_clusters++;
  }
  return units;
}

int medoid(const PointMatrix& points, const IndexList& members) {
  require(!members.empty(), ErrorCategory::kData, "medoid of an empty set");
  int best = members.front();
  double best_cost = std::numeric_limits<double>::infinity();
  for (int i : members) {
    double cost = 0.0;
    for (int j : members) {
      cost += (points.row(i) - points.row(j)).norm();
      if (cost > best_cost) break;
    }
    if (cost < best_cost || (cost == best_cost && i < best)) {
      best_cost = cost;
      best = i;
    }
  }
  return best;
}

LabelSet simulate_annotation(const Clustering& units, const PointMatrix& points, const std::vector<int>& gt,
                             int num_classes) {
  const auto n = static_cast<int>(points.rows());
  require(static_cast<int>(units.cluster_id.size()) == n && static_cast<int>(gt.size()) == n, ErrorCategory::kData,
          "clustering, points and ground truth must have equal length");
  require(num_classes >= 1 && num_classes <= 32, ErrorCategory::kData, "num_classes must be in [1, 32]");
  LabelSet labels;
  labels.num_points = n;
  labels.num_classes = num_classes;

  std::vector<IndexList> members(units.num_clusters);
  for (int i = 0; i < n; ++i) {
    const int u = units.cluster_id[i];
    if (u >= 0) members[u].push_back(i);
  }
  for (const auto& unit : members) {
    if (unit.empty()) continue;
    std::vector<IndexList> by_class(num_classes);
    ClassMask present = 0;
    for (int i : unit) {
      by_class[gt[i]].push_back(i);
      present |= class_bit(gt[i]);
    }
    if (mask_count(present) == 1) {
      const int cls = gt[unit.front()];
      const int click = medoid(points, unit);
      labels.sparse[click] = cls;
      for (int i : unit) {
        if (i != click) labels.propagated[i] = cls;
      }
      continue;
    }
    for (int c = 0; c < num_classes; ++c) {
      if (!by_class[c].empty()) labels.sparse[medoid(points, by_class[c])] = c;
    }
    for (int i : unit) {
      if (!labels.sparse.contains(i)) labels.negative[i] = present;
    }
  }
  return labels;
}

LabelStatistics label_statistics(const std::vector<LabelSet>& sets) {
  LabelStatistics s;
  for (const auto& l : sets) {
    s.total_points += l.num_points;
    s.sparse += static_cast<long long>(l.sparse.size());
    s.propagated += static_cast<long long>(l.propagated.size());
    s.negative += static_cast<long long>(l.negative.size());
    s.pseudo += static_cast<long long>(l.pseudo.size());
  }
  return s;
}

}  // namespace weaklab
