#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>
#include <vector>

#include "weaklab/hdbscan.hpp"
#include "weaklab/labels.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

struct PillarConfig {
  int radial_bins = 10;
  int angular_bins = 36;
  double max_range = 0.0;  // <= 0: use the farthest point
};

struct PillarPartition {
  int radial_bins = 0;
  int angular_bins = 0;
  double max_range = 0.0;
  std::vector<int> assignment;  // radial * angular_bins + angular

  int num_pillars() const { return radial_bins * angular_bins; }
};

PillarPartition partition_pillars(const PointMatrix& points, const PillarConfig& config);

struct RansacConfig {
  int iterations = 200;
  double inlier_threshold = 0.1;   // m
  double max_normal_angle_deg = 15.0;
  double seed_band = 0.25;         // hypotheses are drawn from points within this height of the pillar minimum
  double consensus_tolerance = 0.2;  // m; <= 0 disables the neighbour check
};

struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // unit, n.z >= 0
  double offset = 0.0;                                // n . x + offset = 0

  double distance(const Eigen::Vector3d& p) const { return std::abs(normal.dot(p) + offset); }
};

/// RANSAC over one pillar. Hypotheses are drawn from points within the seed
/// band of the lowest member, heights measured above `reference` when given
/// (so the band follows a sloped ground). nullopt when fewer than 3 points or
/// all samples are degenerate. The returned plane is refit by least squares on its inliers.
std::optional<Plane> fit_ground_plane(const PointMatrix& points, const IndexList& members, const RansacConfig& config,
                                      std::uint64_t seed, const Plane* reference = nullptr);

/// Per-pillar RANSAC ground detection; deterministic in `seed`. A coarse
/// reference plane is first fitted to the pillar minima. A pillar plane
/// whose height at the pillar centre differs from the median of its
/// neighbours' planes by more than the consensus tolerance is replaced by the
/// median neighbour plane.
std::vector<bool> detect_ground(const PointMatrix& points, const PillarConfig& pillars, const RansacConfig& ransac,
                                std::uint64_t seed);

struct ActiveLabelConfig {
  PillarConfig pillars;
  RansacConfig ransac;
  HdbscanConfig hdbscan{20, 8};
  bool ground_as_unit = true;  // all detected ground forms one annotation unit
};

/// Annotation units shown to the annotator: HDBSCAN clusters over non-ground
/// points plus, when enabled, one unit holding all detected ground.
struct AnnotationUnits {
  Clustering clustering;          // unit id per point, -1 = noise
  std::vector<bool> ground_mask;  // detect_ground output
  int ground_unit = -1;           // id of the ground unit, -1 when absent
};

AnnotationUnits build_annotation_units(const PointMatrix& points, const ActiveLabelConfig& config, std::uint64_t seed);

/// Member of `members` minimizing the summed distance to the other members;
/// ties go to the smallest index.
int medoid(const PointMatrix& points, const IndexList& members);

/// Cluster-level oracle annotation: pure units give one sparse click at the
/// medoid plus propagated labels; mixed units give one sparse click per class
/// (class medoid) and negative labels carrying the unit's class set.
LabelSet simulate_annotation(const Clustering& units, const PointMatrix& points, const std::vector<int>& gt_class,
                             int num_classes);

struct LabelStatistics {
  long long total_points = 0;
  long long sparse = 0;
  long long propagated = 0;
  long long negative = 0;
  long long pseudo = 0;

  double sparse_rate() const { return total_points ? static_cast<double>(sparse) / total_points : 0.0; }
  double propagated_rate() const { return total_points ? static_cast<double>(propagated) / total_points : 0.0; }
  double negative_rate() const { return total_points ? static_cast<double>(negative) / total_points : 0.0; }
  double coverage() const {
    return total_points ? static_cast<double>(sparse + propagated + negative) / total_points : 0.0;
  }
};

LabelStatistics label_statistics(const std::vector<LabelSet>& label_sets);

}  // namespace weaklab
