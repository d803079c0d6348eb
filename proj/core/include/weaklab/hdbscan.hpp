#pragma once

#include <vector>

#include "weaklab/types.hpp"

namespace weaklab {

struct Clustering {
  std::vector<int> cluster_id;  // -1 = noise
  int num_clusters = 0;
};

struct HdbscanConfig {
  int min_cluster_size = 15;
  int min_samples = 5;
};

struct WeightedEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

/// Distance to the min_samples-th nearest neighbour, counting the point itself.
Vector core_distances(const Matrix& points, int min_samples);

/// Minimum spanning tree of the mutual-reachability graph (Prim, dense),
/// edges sorted by (weight, a, b) with a < b.
std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points, int min_samples);

/// One row of the condensed cluster tree: `child` is a cluster id when
/// child_size > 1 or the child is itself a cluster, else a point index.
struct CondensedEdge {
  int parent = 0;
  int child = 0;
  double lambda = 0.0;
  int child_size = 0;
  bool child_is_cluster = false;
};

struct CondensedTree {
  int num_points = 0;
  int num_clusters = 0;  // cluster 0 is the root
  std::vector<CondensedEdge> edges;
};

CondensedTree condense_tree(const std::vector<WeightedEdge>& mst, int num_points, int min_cluster_size);

/// Excess-of-mass selection; the root is never selected. Returns selection flags per cluster.
std::vector<bool> select_clusters_eom(const CondensedTree& tree);

/// Full HDBSCAN*: core distances, mutual reachability, MST, condensed tree,
/// excess-of-mass extraction. Cluster ids are dense and ordered by the
/// condensed-tree id of the selected cluster.
Clustering hdbscan(const Matrix& points, const HdbscanConfig& config);

}  // namespace weaklab
