#include "weaklab/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weaklab/error.hpp"

namespace weaklab {
namespace {

struct Rect {
  int u0, v0, u1, v1;  // half-open
};

class SeedsState {
 public:
  SeedsState(const Image& img, int bins) : img_(img), w_(img.width), h_(img.height), bins_(bins) {
    bin_.resize(static_cast<std::size_t>(w_) * h_);
    auto q = [&](double x) { return std::clamp(static_cast<int>(x * bins), 0, bins - 1); };
    for (int i = 0; i < w_ * h_; ++i) {
      bin_[i] = (q(img.rgb(i, 0)) * bins + q(img.rgb(i, 1))) * bins + q(img.rgb(i, 2));
    }
  }

  void init(std::vector<int> labels, int k) {
    label_ = std::move(labels);
    k_ = k;
    const int nb = bins_ * bins_ * bins_;
    hist_.assign(static_cast<std::size_t>(k) * nb, 0);
    size_.assign(k, 0);
    sumsq_.assign(k, 0.0);
    for (int i = 0; i < w_ * h_; ++i) {
      ++hist_[static_cast<std::size_t>(label_[i]) * nb + bin_[i]];
      ++size_[label_[i]];
    }
    for (int s = 0; s < k; ++s) {
      double acc = 0;
      for (int b = 0; b < nb; ++b) {
        const double c = hist_[static_cast<std::size_t>(s) * nb + b];
        acc += c * c;
      }
      sumsq_[s] = acc;
    }
  }

  double energy() const {
    double e = 0;
    for (int s = 0; s < k_; ++s) {
      if (size_[s] > 0) e += sumsq_[s] / (static_cast<double>(size_[s]) * size_[s]);
    }
    return e;
  }

  // Tries to move the pixels of `r` (all owned by one superpixel) to a neighbour.
  bool try_move(const Rect& r) {
    const int a = label_[idx(r.u0, r.v0)];
    block_bins_.clear();
    for (int v = r.v0; v < r.v1; ++v) {
      for (int u = r.u0; u < r.u1; ++u) {
        if (label_[idx(u, v)] != a) return false;
        block_bins_.push_back(bin_[idx(u, v)]);
      }
    }
    const int m = static_cast<int>(block_bins_.size());
    if (size_[a] <= m) return false;

    // Candidate targets: labels 4-adjacent to the rectangle.
    candidates_.clear();
    auto consider = [&](int u, int v) {
      if (u < 0 || v < 0 || u >= w_ || v >= h_) return;
      const int l = label_[idx(u, v)];
      if (l != a && std::find(candidates_.begin(), candidates_.end(), l) == candidates_.end()) candidates_.push_back(l);
    };
    for (int u = r.u0; u < r.u1; ++u) {
      consider(u, r.v0 - 1);
      consider(u, r.v1);
    }
    for (int v = r.v0; v < r.v1; ++v) {
      consider(r.u0 - 1, v);
      consider(r.u1, v);
    }
    if (candidates_.empty()) return false;
    if (!keeps_connected(r, a)) return false;

    std::sort(block_bins_.begin(), block_bins_.end());
    const int nb = bins_ * bins_ * bins_;
    double self_sq = 0;
    for (std::size_t i = 0; i < block_bins_.size();) {
      std::size_t j = i;
      while (j < block_bins_.size() && block_bins_[j] == block_bins_[i]) ++j;
      self_sq += static_cast<double>(j - i) * (j - i);
      i = j;
    }
    auto dot_with = [&](int s) {
      double acc = 0;
      for (std::size_t i = 0; i < block_bins_.size();) {
        std::size_t j = i;
        while (j < block_bins_.size() && block_bins_[j] == block_bins_[i]) ++j;
        acc += static_cast<double>(j - i) * hist_[static_cast<std::size_t>(s) * nb + block_bins_[i]];
        i = j;
      }
      return acc;
    };
    auto term = [](double sq, double n) { return sq / (n * n); };

    const double na = size_[a];
    const double sa_new = sumsq_[a] - 2 * dot_with(a) + self_sq;
    const double ea_old = term(sumsq_[a], na), ea_new = term(sa_new, na - m);
    int best = -1;
    double best_gain = 1e-12;
    double best_sb = 0;
    for (int b : candidates_) {
      const double nbsz = size_[b];
      const double sb_new = sumsq_[b] + 2 * dot_with(b) + self_sq;
      const double gain = (ea_new - ea_old) + (term(sb_new, nbsz + m) - term(sumsq_[b], nbsz));
      if (gain > best_gain) {
        best_gain = gain;
        best = b;
        best_sb = sb_new;
      }
    }
    if (best < 0) return false;

    for (int v = r.v0; v < r.v1; ++v) {
      for (int u = r.u0; u < r.u1; ++u) {
        const int i = idx(u, v);
        --hist_[static_cast<std::size_t>(a) * nb + bin_[i]];
        ++hist_[static_cast<std::size_t>(best) * nb + bin_[i]];
        label_[i] = best;
      }
    }
    sumsq_[a] = sa_new;
    sumsq_[best] = best_sb;
    size_[a] -= m;
    size_[best] += m;
    return true;
  }

  const std::vector<int>& labels() const { return label_; }

 private:
  int idx(int u, int v) const { return v * w_ + u; }

  // Sufficient condition: all pixels of `a` that touch the rectangle lie in a
  // single run of `a` along the one-pixel ring around it, so any path through
  // the rectangle can be rerouted along the ring.
  bool keeps_connected(const Rect& r, int a) const {
    ring_.clear();
    for (int u = r.u0 - 1; u <= r.u1; ++u) ring_.push_back({u, r.v0 - 1});
    for (int v = r.v0; v < r.v1; ++v) ring_.push_back({r.u1, v});
    for (int u = r.u1; u >= r.u0 - 1; --u) ring_.push_back({u, r.v1});
    for (int v = r.v1 - 1; v >= r.v0; --v) ring_.push_back({r.u0 - 1, v});
    const int n = static_cast<int>(ring_.size());
    auto owned = [&](int k) {
      const auto [u, v] = ring_[k];
      return u >= 0 && v >= 0 && u < w_ && v < h_ && label_[idx(u, v)] == a;
    };
    auto touches = [&](int k) {
      const auto [u, v] = ring_[k];
      const bool corner = (u == r.u0 - 1 || u == r.u1) && (v == r.v0 - 1 || v == r.v1);
      return !corner;
    };
    int start = -1;
    for (int k = 0; k < n; ++k) {
      if (!owned(k)) {
        start = k;
        break;
      }
    }
    if (start < 0) return false;  // rectangle is interior to `a`
    int runs_touching = 0;
    bool in_run = false, run_touches = false;
    for (int step = 1; step <= n; ++step) {
      const int k = (start + step) % n;
      if (owned(k)) {
        if (!in_run) {
          in_run = true;
          run_touches = false;
        }
        run_touches = run_touches || touches(k);
      } else if (in_run) {
        in_run = false;
        runs_touching += run_touches ? 1 : 0;
      }
    }
    return runs_touching <= 1;
  }

  const Image& img_;
  int w_, h_, bins_;
  int k_ = 0;
  std::vector<int> bin_;
  std::vector<int> label_;
  std::vector<int> hist_;
  std::vector<int> size_;
  std::vector<double> sumsq_;
  std::vector<int> block_bins_;
  std::vector<int> candidates_;
  mutable std::vector<std::pair<int, int>> ring_;
};

}  // namespace

double seeds_energy(const Image& image, const std::vector<int>& assignment, int k, int bins) {
  SeedsState state(image, bins);
  state.init(assignment, k);
  return state.energy();
}

SuperpixelMap seeds_segment(const Image& image, const SeedsConfig& cfg) {
  const int w = image.width, h = image.height;
  require(w > 0 && h > 0, ErrorCategory::kData, "empty image");
  require(cfg.num_superpixels >= 1, ErrorCategory::kConfig, "num_superpixels must be >= 1");
  require(static_cast<long long>(cfg.num_superpixels) <= static_cast<long long>(w) * h, ErrorCategory::kData,
          "num_superpixels exceeds the pixel count");
  require(cfg.num_levels >= 1 && cfg.histogram_bins >= 1 && cfg.iterations >= 0, ErrorCategory::kConfig,
          "invalid SEEDS settings");

  const int top_scale = 1 << (cfg.num_levels - 1);
  const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(cfg.num_superpixels * double(w) / h))));
  const int ny = std::max(1, static_cast<int>(std::lround(cfg.num_superpixels / double(nx))));
  const int bw0 = std::max(1, static_cast<int>(std::lround(double(w) / (nx * top_scale))));
  const int bh0 = std::max(1, static_cast<int>(std::lround(double(h) / (ny * top_scale))));
  const int bw_top = bw0 * top_scale, bh_top = bh0 * top_scale;
  const int cols = (w + bw_top - 1) / bw_top;
  const int rows = (h + bh_top - 1) / bh_top;

  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) labels[static_cast<std::size_t>(v) * w + u] = (v / bh_top) * cols + u / bw_top;
  }
  SeedsState state(image, cfg.histogram_bins);
  state.init(labels, rows * cols);

  SuperpixelMap out;
  out.width = w;
  out.height = h;
  out.energy_history.push_back(state.energy());
  for (int it = 0; it < cfg.iterations; ++it) {
    for (int level = cfg.num_levels - 2; level >= 0; --level) {
      const int bw = bw0 << level, bh = bh0 << level;
      for (int v0 = 0; v0 < h; v0 += bh) {
        for (int u0 = 0; u0 < w; u0 += bw) state.try_move({u0, v0, std::min(u0 + bw, w), std::min(v0 + bh, h)});
      }
    }
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) state.try_move({u, v, u + 1, v + 1});
    }
    out.energy_history.push_back(state.energy());
  }

  // Dense relabel in order of first appearance.
  const auto& final_labels = state.labels();
  std::vector<int> remap(rows * cols, -1);
  out.assignment.resize(final_labels.size());
  for (std::size_t i = 0; i < final_labels.size(); ++i) {
    int& r = remap[final_labels[i]];
    if (r < 0) r = out.num_superpixels++;
    out.assignment[i] = r;
  }
  const int k = out.num_superpixels;
  out.pixel_count.assign(k, 0);
  out.centroid.assign(k, Eigen::Vector2d::Zero());
  out.mean_color = Matrix::Zero(k, 3);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const auto i = static_cast<std::size_t>(v) * w + u;
      const int s = out.assignment[i];
      ++out.pixel_count[s];
      out.centroid[s] += Eigen::Vector2d(u + 0.5, v + 0.5);
      out.mean_color.row(s) += image.rgb.row(static_cast<Eigen::Index>(i));
    }
  }
  for (int s = 0; s < k; ++s) {
    out.centroid[s] /= out.pixel_count[s];
    out.mean_color.row(s) /= out.pixel_count[s];
  }
  return out;
}

bool superpixels_connected(const SuperpixelMap& map) {
  const int w = map.width, h = map.height, k = map.num_superpixels;
  if (static_cast<int>(map.assignment.size()) != w * h) return false;
  std::vector<int> seen_label(k, 0);
  std::vector<char> visited(map.assignment.size(), 0);
  std::vector<int> stack;
  for (int i = 0; i < w * h; ++i) {
    const int l = map.assignment[i];
    if (l < 0 || l >= k) return false;
    if (visited[i]) continue;
    if (seen_label[l]) return false;  // second component of the same label
    seen_label[l] = 1;
    stack.push_back(i);
    visited[i] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int u = p % w, v = p / w;
      const int nbr[4][2] = {{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}};
      for (const auto& q : nbr) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
        const int j = q[1] * w + q[0];
        if (!visited[j] && map.assignment[j] == l) {
          visited[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return std::all_of(seen_label.begin(), seen_label.end(), [](int s) { return s == 1; });
}

std::vector<MatchedSuperpixel> match_superpixels(const SuperpixelMap& map, const std::vector<PixelHit>& hits,
                                                 const std::map<int, int>& sparse) {
  std::map<std::pair<int, int>, std::vector<int>> grouped;
  for (const auto& hit : hits) {
    auto it = sparse.find(hit.point_index);
    if (it == sparse.end()) continue;
    const int u = hit.pixel_u(), v = hit.pixel_v();
    if (u < 0 || v < 0 || u >= map.width || v >= map.height) continue;
    auto& pts = grouped[{map.at(u, v), it->second}];
    if (std::find(pts.begin(), pts.end(), hit.point_index) == pts.end()) pts.push_back(hit.point_index);
  }
  std::vector<MatchedSuperpixel> out;
  for (auto& [key, pts] : grouped) {
    std::sort(pts.begin(), pts.end());
    out.push_back({key.first, key.second, std::move(pts)});
  }
  return out;
}

Matrix superpixel_features(const SuperpixelMap& map, const Matrix& feature_map) {
  require(feature_map.rows() == static_cast<Eigen::Index>(map.assignment.size()), ErrorCategory::kData,
          "feature map size does not match the superpixel map");
  Matrix out = Matrix::Zero(map.num_superpixels, feature_map.cols());
  std::vector<int> count(map.num_superpixels, 0);
  for (std::size_t i = 0; i < map.assignment.size(); ++i) {
    out.row(map.assignment[i]) += feature_map.row(static_cast<Eigen::Index>(i));
    ++count[map.assignment[i]];
  }
  for (int s = 0; s < map.num_superpixels; ++s) {
    if (count[s] > 0) out.row(s) /= count[s];
  }
  return out;
}

}  // namespace weaklab
