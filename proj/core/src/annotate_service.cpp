#include "weaklab/annotate_service.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "weaklab/error.hpp"

namespace weaklab {

AnnotationSession::AnnotationSession(std::string scene, PointMatrix points, Clustering units, LabelSet labels,
                                     int ground_unit)
    : scene_(std::move(scene)),
      points_(std::move(points)),
      units_(std::move(units)),
      labels_(std::move(labels)),
      ground_unit_(ground_unit) {
  require(static_cast<Eigen::Index>(units_.cluster_id.size()) == points_.rows(), ErrorCategory::kData,
          "cluster ids do not match the point count");
  members_.resize(units_.num_clusters);
  for (std::size_t i = 0; i < units_.cluster_id.size(); ++i) {
    if (units_.cluster_id[i] >= 0) members_[units_.cluster_id[i]].push_back(static_cast<int>(i));
  }
}

void AnnotationSession::check_cluster(int cluster) const {
  if (cluster < 0 || cluster >= units_.num_clusters) {
    fail(ErrorCategory::kNotFound, "unknown cluster " + std::to_string(cluster) + " in scene " + scene_);
  }
}

bool AnnotationSession::finalized(int cluster) const {
  check_cluster(cluster);
  for (int p : members_[cluster]) {
    if (labels_.sparse.contains(p) || labels_.propagated.contains(p) || labels_.negative.contains(p)) return true;
  }
  return false;
}

ClusterSummary AnnotationSession::summary(int cluster) const {
  check_cluster(cluster);
  const auto& m = members_[cluster];
  ClusterSummary s;
  s.id = cluster;
  s.point_count = static_cast<int>(m.size());
  s.finalized = finalized(cluster);
  s.ground = cluster == ground_unit_;
  if (!m.empty()) {
    s.min_x = s.min_y = std::numeric_limits<double>::infinity();
    s.max_x = s.max_y = -std::numeric_limits<double>::infinity();
    for (int p : m) {
      s.min_x = std::min(s.min_x, points_(p, 0));
      s.max_x = std::max(s.max_x, points_(p, 0));
      s.min_y = std::min(s.min_y, points_(p, 1));
      s.max_y = std::max(s.max_y, points_(p, 1));
    }
  }
  // Evenly strided subset keeps the scatter deterministic.
  const std::size_t stride = (m.size() + kMaxScatter - 1) / kMaxScatter;
  for (std::size_t i = 0; i < m.size(); i += std::max<std::size_t>(stride, 1)) s.scatter.push_back(m[i]);
  return s;
}

std::vector<ClusterSummary> AnnotationSession::summaries() const {
  std::vector<ClusterSummary> out;
  for (int c = 0; c < units_.num_clusters; ++c) out.push_back(summary(c));
  return out;
}

ApplyResult AnnotationSession::apply(const LabelRequest& req) {
  if (req.request_id) {
    if (auto it = replies_.find(*req.request_id); it != replies_.end()) {
      ApplyResult r = it->second;
      r.replayed = true;
      return r;
    }
  }
  check_cluster(req.cluster_id);
  if (finalized(req.cluster_id)) {
    fail(ErrorCategory::kConflict, "cluster " + std::to_string(req.cluster_id) + " is already finalized");
  }
  const auto& members = members_[req.cluster_id];
  const int num_classes = labels_.num_classes;
  for (const auto& a : req.assignments) {
    require(a.cls >= 0 && a.cls < num_classes, ErrorCategory::kData, "class " + std::to_string(a.cls) + " out of range");
    if (a.point_index) {
      require(std::binary_search(members.begin(), members.end(), *a.point_index), ErrorCategory::kData,
              "point " + std::to_string(*a.point_index) + " is not in cluster " + std::to_string(req.cluster_id));
    }
  }

  ApplyResult result;
  result.cluster_id = req.cluster_id;
  LabelSet next = labels_;
  if (req.mode == AnnotationMode::kPure) {
    require(req.assignments.size() == 1, ErrorCategory::kData, "pure mode takes exactly one assignment");
    const auto& a = req.assignments.front();
    const int click = a.point_index ? *a.point_index : medoid(points_, members);
    for (int p : members) {
      if (p == click) {
        next.sparse[p] = a.cls;
        ++result.sparse;
      } else {
        next.propagated[p] = a.cls;
        ++result.propagated;
      }
    }
  } else {
    std::set<int> classes;
    std::set<int> clicks;
    ClassMask mask = 0;
    for (const auto& a : req.assignments) {
      require(a.point_index.has_value(), ErrorCategory::kData, "mixed mode needs a point pick per class");
      require(classes.insert(a.cls).second, ErrorCategory::kData, "class listed twice in mixed mode");
      require(clicks.insert(*a.point_index).second, ErrorCategory::kData, "point picked twice in mixed mode");
      mask |= class_bit(a.cls);
    }
    require(classes.size() >= 2, ErrorCategory::kData, "mixed mode needs at least two classes");
    for (const auto& a : req.assignments) {
      next.sparse[*a.point_index] = a.cls;
      ++result.sparse;
    }
    for (int p : members) {
      if (clicks.contains(p)) continue;
      next.negative[p] = mask;
      ++result.negative;
    }
  }
  next.validate();
  labels_ = std::move(next);
  if (req.request_id) replies_[*req.request_id] = result;
  return result;
}

}  // namespace weaklab
