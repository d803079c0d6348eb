#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "weaklab/activelabel.hpp"
#include "weaklab/labels.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

struct ClusterSummary {
  int id = 0;
  int point_count = 0;
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;  // bird's-eye bounding box (m)
  std::vector<int> scatter;                            // member point indices, at most kMaxScatter
  bool finalized = false;
  bool ground = false;
};

inline constexpr int kMaxScatter = 2000;

struct Assignment {
  int cls = 0;
  std::optional<int> point_index;
};

enum class AnnotationMode { kPure, kMixed };

struct LabelRequest {
  int cluster_id = 0;
  AnnotationMode mode = AnnotationMode::kPure;
  std::vector<Assignment> assignments;
  std::optional<std::string> request_id;
};

struct ApplyResult {
  int cluster_id = 0;
  int sparse = 0;
  int propagated = 0;
  int negative = 0;
  bool replayed = false;
};

/// Applies cluster-level annotations to one scene's LabelSet with the same
/// rules as simulate_annotation. Finalized clusters are immutable.
///
/// Errors: kNotFound for an unknown cluster, kConflict for a finalized one,
/// kData for a malformed assignment. A failed request leaves the labels untouched.
class AnnotationSession {
 public:
  AnnotationSession(std::string scene, PointMatrix points, Clustering units, LabelSet labels, int ground_unit = -1);

  const std::string& scene() const { return scene_; }
  const LabelSet& labels() const { return labels_; }
  int num_clusters() const { return units_.num_clusters; }

  std::vector<ClusterSummary> summaries() const;
  ClusterSummary summary(int cluster) const;
  bool finalized(int cluster) const;

  ApplyResult apply(const LabelRequest& request);

 private:
  void check_cluster(int cluster) const;
  std::string scene_;
  PointMatrix points_;
  Clustering units_;
  LabelSet labels_;
  int ground_unit_;
  std::vector<IndexList> members_;
  std::map<std::string, ApplyResult> replies_;
};

}  // namespace weaklab
