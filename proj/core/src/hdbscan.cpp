#include "weaklab/hdbscan.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "weaklab/error.hpp"

namespace weaklab {
namespace {

double sq_dist(const Matrix& x, Eigen::Index i, Eigen::Index j) { return (x.row(i) - x.row(j)).squaredNorm(); }

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void link(int child, int root) { parent_[child] = root; }

 private:
  std::vector<int> parent_;
};

struct LinkageNode {
  int left = -1;
  int right = -1;
  double distance = 0.0;
  int size = 1;
};

}  // namespace

Vector core_distances(const Matrix& points, int min_samples) {
  const auto n = points.rows();
  require(min_samples >= 1, ErrorCategory::kData, "min_samples must be >= 1");
  Vector core(n);
  const auto k = std::min<Eigen::Index>(min_samples, n) - 1;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[j] = sq_dist(points, i, j);
    std::nth_element(row.begin(), row.begin() + k, row.end());
    core[i] = std::sqrt(row[k]);
  }
  return core;
}

std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points, int min_samples) {
  const auto n = static_cast<int>(points.rows());
  std::vector<WeightedEdge> edges;
  if (n < 2) return edges;
  const Vector core = core_distances(points, min_samples);

  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> from(n, -1);
  std::vector<char> in_tree(n, 0);
  int current = 0;
  in_tree[0] = 1;
  for (int step = 1; step < n; ++step) {
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = std::max({std::sqrt(sq_dist(points, current, j)), core[current], core[j]});
      if (d < best[j] || (d == best[j] && current < from[j])) {
        best[j] = d;
        from[j] = current;
      }
    }
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (!in_tree[j] && (next < 0 || best[j] < best[next])) next = j;
    }
    in_tree[next] = 1;
    edges.push_back({std::min(from[next], next), std::max(from[next], next), best[next]});
    current = next;
  }
  std::sort(edges.begin(), edges.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
    return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
  });
  return edges;
}

CondensedTree condense_tree(const std::vector<WeightedEdge>& mst, int n, int min_cluster_size) {
  CondensedTree tree;
  tree.num_points = n;
  tree.num_clusters = 1;
  if (n <= 1) return tree;

  // Single-linkage dendrogram: leaves 0..n-1, merges n..2n-2.
  std::vector<LinkageNode> nodes(2 * n - 1);
  UnionFind uf(2 * n - 1);
  int next = n;
  for (const auto& e : mst) {
    const int ra = uf.find(e.a), rb = uf.find(e.b);
    nodes[next] = {ra, rb, e.weight, nodes[ra].size + nodes[rb].size};
    uf.link(ra, next);
    uf.link(rb, next);
    ++next;
  }
  const int root = 2 * n - 2;

  auto leaves_of = [&](int node, std::vector<int>& out) {
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (x < n) out.push_back(x);
      else {
        stack.push_back(nodes[x].right);
        stack.push_back(nodes[x].left);
      }
    }
  };

  std::vector<int> label(2 * n - 1, -1);
  label[root] = 0;
  // Breadth-first so cluster ids grow with depth.
  std::vector<int> queue{root};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int node = queue[q];
    if (node < n) continue;
    const int parent_cluster = label[node];
    const LinkageNode& nd = nodes[node];
    const double lambda = 1.0 / std::max(nd.distance, 1e-12);
    const int l = nd.left, r = nd.right;
    const int ls = nodes[l].size, rs = nodes[r].size;
    const bool l_big = ls >= min_cluster_size, r_big = rs >= min_cluster_size;
    if (l_big && r_big) {
      for (int child : {l, r}) {
        label[child] = tree.num_clusters++;
        tree.edges.push_back({parent_cluster, label[child], lambda, nodes[child].size, true});
        queue.push_back(child);
      }
    } else {
      for (int child : {l, r}) {
        const bool big = child == l ? l_big : r_big;
        if (big) {
          label[child] = parent_cluster;
          queue.push_back(child);
        } else {
          std::vector<int> pts;
          leaves_of(child, pts);
          for (int p : pts) tree.edges.push_back({parent_cluster, p, lambda, 1, false});
        }
      }
    }
  }
  return tree;
}

std::vector<bool> select_clusters_eom(const CondensedTree& tree) {
  const int k = tree.num_clusters;
  std::vector<double> birth(k, 0.0), stability(k, 0.0);
  std::vector<std::vector<int>> children(k);
  for (const auto& e : tree.edges) {
    if (e.child_is_cluster) {
      birth[e.child] = e.lambda;
      children[e.parent].push_back(e.child);
    }
  }
  for (const auto& e : tree.edges) stability[e.parent] += (e.lambda - birth[e.parent]) * e.child_size;

  std::vector<bool> selected(k, false);
  // Child ids are always larger than their parent's.
  for (int c = k - 1; c >= 1; --c) {
    double subtree = 0.0;
    for (int ch : children[c]) subtree += stability[ch];
    if (children[c].empty() || stability[c] >= subtree) {
      selected[c] = true;
      std::vector<int> stack(children[c].begin(), children[c].end());
      while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        selected[x] = false;
        stack.insert(stack.end(), children[x].begin(), children[x].end());
      }
    } else {
      stability[c] = subtree;
    }
  }
  return selected;
}

Clustering hdbscan(const Matrix& points, const HdbscanConfig& cfg) {
  require(cfg.min_cluster_size >= 2, ErrorCategory::kData, "min_cluster_size must be >= 2");
  const int n = static_cast<int>(points.rows());
  Clustering out;
  out.cluster_id.assign(n, -1);
  if (n < cfg.min_cluster_size || n < 2) return out;

  const CondensedTree tree = condense_tree(mutual_reachability_mst(points, cfg.min_samples), n, cfg.min_cluster_size);
  const std::vector<bool> selected = select_clusters_eom(tree);

  std::vector<int> parent_of(tree.num_clusters, -1);
  for (const auto& e : tree.edges) {
    if (e.child_is_cluster) parent_of[e.child] = e.parent;
  }
  std::vector<int> dense(tree.num_clusters, -1);
  for (int c = 0; c < tree.num_clusters; ++c) {
    if (selected[c]) dense[c] = out.num_clusters++;
  }
  // Nearest selected ancestor (or self) of every condensed cluster.
  std::vector<int> owner(tree.num_clusters, -1);
  for (int c = 0; c < tree.num_clusters; ++c) {
    if (selected[c]) owner[c] = dense[c];
    else if (parent_of[c] >= 0) owner[c] = owner[parent_of[c]];
  }
  for (const auto& e : tree.edges) {
    if (!e.child_is_cluster) out.cluster_id[e.child] = owner[e.parent];
  }
  return out;
}

}  // namespace weaklab
