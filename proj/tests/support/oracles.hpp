#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "weaklab/superpixel.hpp"

namespace weaklab::testing {

/// Class thresholds by a direct per-column scan.
inline std::vector<double> brute_thresholds(const Matrix& p, double delta, double alpha) {
  std::vector<double> out;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    double peak = -1;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      Eigen::Index arg = 0;
      for (Eigen::Index k = 1; k < p.cols(); ++k) {
        if (p(i, k) > p(i, arg)) arg = k;
      }
      if (arg == c) peak = std::max(peak, p(i, c));
    }
    out.push_back(peak < 0 ? std::numeric_limits<double>::infinity() : std::max(peak - delta, alpha));
  }
  return out;
}

struct FixtureCase {
  int id = 0;
  int min_cluster_size = 0;
  int min_samples = 0;
  Matrix points;
  std::vector<double> core;
  std::vector<double> mst;
  std::vector<int> labels;
};

inline std::vector<double> read_doubles(std::istringstream& in) {
  std::vector<double> v;
  for (double x; in >> x;) v.push_back(x);
  return v;
}

inline std::vector<FixtureCase> load_hdbscan_fixture(const std::string& path) {
  std::ifstream in(path);
  std::vector<FixtureCase> cases;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "case") {
      FixtureCase c;
      int n = 0, dim = 0;
      ls >> c.id >> n >> dim >> c.min_cluster_size >> c.min_samples;
      c.points.resize(n, dim);
      cases.push_back(std::move(c));
      row = 0;
    } else if (tag == "point") {
      const auto v = read_doubles(ls);
      for (std::size_t j = 0; j < v.size(); ++j) cases.back().points(row, static_cast<Eigen::Index>(j)) = v[j];
      ++row;
    } else if (tag == "core") {
      cases.back().core = read_doubles(ls);
    } else if (tag == "mst") {
      cases.back().mst = read_doubles(ls);
    } else if (tag == "labels") {
      for (double x : read_doubles(ls)) cases.back().labels.push_back(static_cast<int>(x));
    }
  }
  return cases;
}

// Same partition up to renaming, with identical noise sets.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [x, nx] = ab.emplace(a[i], b[i]);
    auto [y, ny] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

inline Matrix blobs(Rng& rng, const std::vector<Eigen::Vector2d>& centres, int per, double sigma, std::vector<int>& truth) {
  Matrix x(static_cast<Eigen::Index>(centres.size()) * per, 2);
  truth.clear();
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (int i = 0; i < per; ++i) {
      const auto r = static_cast<Eigen::Index>(c * per + i);
      x(r, 0) = centres[c].x() + rng.normal(0, sigma);
      x(r, 1) = centres[c].y() + rng.normal(0, sigma);
      truth.push_back(static_cast<int>(c));
    }
  }
  return x;
}

inline Image random_image(Rng& rng, int w, int h) {
  Image img(w, h);
  const int blobs = 2 + static_cast<int>(rng.index(6));
  std::vector<Eigen::Vector3d> colors;
  std::vector<Eigen::Vector4d> rects;
  for (int b = 0; b < blobs; ++b) {
    colors.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
    rects.emplace_back(rng.uniform(0, w), rng.uniform(0, h), rng.uniform(3, w / 2.0), rng.uniform(3, h / 2.0));
  }
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      Eigen::Vector3d c(0.5, 0.5, 0.5);
      for (int b = 0; b < blobs; ++b) {
        if (std::abs(u - rects[b][0]) < rects[b][2] && std::abs(v - rects[b][1]) < rects[b][3]) c = colors[b];
      }
      for (int k = 0; k < 3; ++k) img.rgb(img.index(u, v), k) = std::clamp(c[k] + rng.normal(0, 0.05), 0.0, 1.0);
    }
  }
  return img;
}

/// Two flat regions split by `region`, with small colour noise.
inline Image two_region_image(Rng& rng, int w, int h, const std::function<int(int, int)>& region) {
  Image img(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const double base = region(u, v) ? 0.8 : 0.2;
      for (int k = 0; k < 3; ++k) img.rgb(img.index(u, v), k) = std::clamp(base + rng.normal(0, 0.03), 0.0, 1.0);
    }
  }
  return img;
}

/// Straight horizontal and vertical edges on a 64 x 48 image.
inline std::vector<std::function<int(int, int)>> two_region_fixtures() {
  return {
      [](int, int v) { return v < 19 ? 0 : 1; },
      [](int, int v) { return v < 30 ? 0 : 1; },
      [](int u, int) { return u < 25 ? 0 : 1; },
      [](int u, int) { return u < 40 ? 0 : 1; },
  };
}

// Fraction of true edge pixels with a superpixel boundary within `tol` pixels.
inline double boundary_recall(const SuperpixelMap& m, const std::function<int(int, int)>& region, int tol) {
  auto sp_boundary = [&](int u, int v) {
    const int a = m.at(u, v);
    return (u + 1 < m.width && m.at(u + 1, v) != a) || (v + 1 < m.height && m.at(u, v + 1) != a) ||
           (u > 0 && m.at(u - 1, v) != a) || (v > 0 && m.at(u, v - 1) != a);
  };
  int edge = 0, hit = 0;
  for (int v = 0; v < m.height; ++v) {
    for (int u = 0; u < m.width; ++u) {
      const int r = region(u, v);
      const bool on_edge = (u + 1 < m.width && region(u + 1, v) != r) || (v + 1 < m.height && region(u, v + 1) != r);
      if (!on_edge) continue;
      ++edge;
      bool found = false;
      for (int dv = -tol; dv <= tol && !found; ++dv) {
        for (int du = -tol; du <= tol && !found; ++du) {
          const int x = u + du, y = v + dv;
          found = x >= 0 && y >= 0 && x < m.width && y < m.height && sp_boundary(x, y);
        }
      }
      hit += found;
    }
  }
  return edge ? static_cast<double>(hit) / edge : 1.0;
}

}  // namespace weaklab::testing
