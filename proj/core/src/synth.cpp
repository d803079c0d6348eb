#include "weaklab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "weaklab/error.hpp"
#include "weaklab/rng.hpp"

namespace weaklab {
namespace {

constexpr double kPi = std::numbers::pi;

const char* shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::kGround: return "ground";
    case ShapeKind::kBox: return "box";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kBlob: return "blob";
  }
  return "box";
}

ShapeKind parse_shape(const std::string& key, const std::string& s) {
  if (s == "ground") return ShapeKind::kGround;
  if (s == "box") return ShapeKind::kBox;
  if (s == "cylinder") return ShapeKind::kCylinder;
  if (s == "blob") return ShapeKind::kBlob;
  fail(ErrorCategory::kConfig, "key '" + key + "': unknown shape '" + s + "'");
}

Eigen::Vector3d to_vec3(const std::string& key, const std::vector<double>& v) {
  require(v.size() == 3, ErrorCategory::kConfig, "key '" + key + "': expected three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

std::string vec3_text(const Eigen::Vector3d& v) {
  const auto fmt = format_number;
  return fmt(v.x()) + "," + fmt(v.y()) + "," + fmt(v.z());
}

// Ray / primitive intersections work in the primitive's local frame.
Eigen::Vector3d to_local(const Primitive& p, const Eigen::Vector3d& x) {
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  const Eigen::Vector3d d = x - p.center;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

Eigen::Vector3d rotate_local_dir(const Primitive& p, const Eigen::Vector3d& d) {
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

Eigen::Vector3d from_local(const Primitive& p, const Eigen::Vector3d& x) {
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  Eigen::Vector3d out(c * x.x() - s * x.y(), s * x.x() + c * x.y(), x.z());
  out += p.center;
  return out;
}

std::optional<double> intersect_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& h,
                                    double t_min) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < -h[a] || o[a] > h[a]) return std::nullopt;
      continue;
    }
    double ta = (-h[a] - o[a]) / d[a];
    double tb = (h[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 > t_min) return t0;
  if (t1 > t_min) return t1;
  return std::nullopt;
}

std::optional<double> intersect_cylinder(const Eigen::Vector3d& o, const Eigen::Vector3d& d, double r, double hz,
                                         double t_min) {
  double best = std::numeric_limits<double>::infinity();
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - 4 * a * c;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (t > t_min && std::abs(o.z() + t * d.z()) <= hz) best = std::min(best, t);
      }
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {-hz, hz}) {
      const double t = (zc - o.z()) / d.z();
      if (t > t_min) {
        const double x = o.x() + t * d.x(), y = o.y() + t * d.y();
        if (x * x + y * y <= r * r) best = std::min(best, t);
      }
    }
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

std::optional<double> intersect_ellipsoid(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                          const Eigen::Vector3d& radii, double t_min) {
  const Eigen::Vector3d os = o.cwiseQuotient(radii);
  const Eigen::Vector3d ds = d.cwiseQuotient(radii);
  const double a = ds.squaredNorm();
  const double b = 2.0 * os.dot(ds);
  const double c = os.squaredNorm() - 1.0;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double ta = (-b - sq) / (2 * a), tb = (-b + sq) / (2 * a);
  if (ta > t_min) return ta;
  if (tb > t_min) return tb;
  return std::nullopt;
}

std::optional<double> intersect(const Primitive& p, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                double t_min) {
  const Eigen::Vector3d o = to_local(p, origin);
  const Eigen::Vector3d d = rotate_local_dir(p, dir);
  switch (p.shape) {
    case ShapeKind::kBox: return intersect_box(o, d, p.half_extent, t_min);
    case ShapeKind::kCylinder: return intersect_cylinder(o, d, p.half_extent.x(), p.half_extent.z(), t_min);
    case ShapeKind::kBlob: return intersect_ellipsoid(o, d, p.half_extent, t_min);
    case ShapeKind::kGround: break;
  }
  return std::nullopt;
}

Eigen::Vector3d sample_surface(const Primitive& p, Rng& rng) {
  const Eigen::Vector3d& h = p.half_extent;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();
  switch (p.shape) {
    case ShapeKind::kBox: {
      const double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
      const double pick = rng.uniform() * (ax + ay + az);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double s = rng.uniform(-1, 1), t = rng.uniform(-1, 1);
      if (pick < ax) local = {sign * h.x(), s * h.y(), t * h.z()};
      else if (pick < ax + ay) local = {s * h.x(), sign * h.y(), t * h.z()};
      else local = {s * h.x(), t * h.y(), sign * h.z()};
      break;
    }
    case ShapeKind::kCylinder: {
      const double r = h.x(), hz = h.z();
      const double side = 2 * kPi * r * 2 * hz, cap = kPi * r * r;
      const double pick = rng.uniform() * (side + 2 * cap);
      const double ang = rng.uniform(0, 2 * kPi);
      if (pick < side) {
        local = {r * std::cos(ang), r * std::sin(ang), rng.uniform(-hz, hz)};
      } else {
        const double rr = r * std::sqrt(rng.uniform());
        local = {rr * std::cos(ang), rr * std::sin(ang), pick < side + cap ? hz : -hz};
      }
      break;
    }
    case ShapeKind::kBlob: {
      Eigen::Vector3d g(rng.normal(), rng.normal(), rng.normal());
      while (g.norm() < 1e-9) g = {rng.normal(), rng.normal(), rng.normal()};
      local = g.normalized().cwiseProduct(h);
      break;
    }
    case ShapeKind::kGround: local.setZero(); break;
  }
  return from_local(p, local);
}

double footprint_radius(const Primitive& p) {
  if (p.shape == ShapeKind::kBox) return std::hypot(p.half_extent.x(), p.half_extent.y());
  return std::max(p.half_extent.x(), p.half_extent.y());
}

// Half extent of a primitive along its local x (axis 0) or y (axis 1).
double half_along(const Primitive& p, int axis) {
  return p.shape == ShapeKind::kCylinder ? p.half_extent.x() : p.half_extent[axis];
}

bool visible_from(const SceneGeometry& g, const Eigen::Vector3d& point, int primitive) {
  const Eigen::Vector3d delta = point - g.sensor_origin;
  const double dist = delta.norm();
  if (dist < 1e-9) return false;
  auto hit = cast_ray(g, g.sensor_origin, delta / dist);
  return hit && hit->primitive == primitive && std::abs(hit->t - dist) <= 1e-6 * std::max(1.0, dist);
}

double visible_fraction(const SceneGeometry& g, int index, Rng& rng, int samples) {
  int ok = 0;
  for (int s = 0; s < samples; ++s) ok += visible_from(g, sample_surface(g.objects[index], rng), index) ? 1 : 0;
  return static_cast<double>(ok) / samples;
}

Primitive make_object(const SceneConfig& cfg, const SceneGeometry& g, int cls, Rng& rng) {
  const ClassSpec& spec = cfg.classes[cls];
  Primitive p;
  p.shape = spec.shape;
  p.cls = cls;
  const double scale = 1.0 + cfg.size_jitter * rng.uniform(-1, 1);
  switch (spec.shape) {
    case ShapeKind::kBox: p.half_extent = spec.size * 0.5 * scale; break;
    case ShapeKind::kCylinder:
      p.half_extent = {spec.size.x() * scale, spec.size.x() * scale, spec.size.z() * 0.5 * scale};
      break;
    case ShapeKind::kBlob: p.half_extent = spec.size * scale; break;
    case ShapeKind::kGround: break;
  }
  p.yaw = rng.uniform(0, kPi);
  for (int c = 0; c < 3; ++c) {
    p.color[c] = std::clamp(spec.color[c] + cfg.color_jitter * rng.uniform(-1, 1), 0.0, 1.0);
  }
  (void)g;
  return p;
}

void seat_on_ground(const SceneConfig& cfg, const SceneGeometry& g, Primitive& p) {
  p.center.z() = g.ground_z(p.center.x(), p.center.y()) + cfg.object_clearance + p.half_extent.z();
}

bool overlaps(const SceneGeometry& g, const Primitive& p, int skip, double margin) {
  for (std::size_t k = 0; k < g.objects.size(); ++k) {
    if (static_cast<int>(k) == skip) continue;
    const auto& q = g.objects[k];
    const double d = std::hypot(p.center.x() - q.center.x(), p.center.y() - q.center.y());
    if (d < footprint_radius(p) + footprint_radius(q) + margin) return true;
  }
  return false;
}

void place_free(const SceneConfig& cfg, const SceneGeometry& g, Primitive& p, Rng& rng) {
  const double r_hi = std::max(cfg.object_min_range + 1.0, cfg.ground_extent - 4.0);
  for (int attempt = 0; attempt < 500; ++attempt) {
    const double r = rng.uniform(cfg.object_min_range, r_hi);
    const double a = rng.uniform(0, 2 * kPi);
    p.center.x() = r * std::cos(a);
    p.center.y() = r * std::sin(a);
    seat_on_ground(cfg, g, p);
    if (!overlaps(g, p, -1, 0.8)) return;
  }
  fail(ErrorCategory::kConfig, "scene too crowded: cannot place all objects");
}

bool place_grouped(const SceneConfig& cfg, const SceneGeometry& g, Primitive& p, Rng& rng) {
  const int anchor = static_cast<int>(rng.index(g.objects.size()));
  const Primitive& a = g.objects[anchor];
  p.yaw = a.yaw;
  const int axis = static_cast<int>(rng.index(2));
  const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  offset[axis] = side * (half_along(a, axis) + half_along(p, axis) + cfg.group_gap);
  offset[1 - axis] = rng.uniform(-0.5, 0.5) * half_along(a, 1 - axis);
  const double c = std::cos(a.yaw), s = std::sin(a.yaw);
  p.center.x() = a.center.x() + c * offset.x() - s * offset.y();
  p.center.y() = a.center.y() + s * offset.x() + c * offset.y();
  const double range = std::hypot(p.center.x(), p.center.y());
  if (range < cfg.object_min_range || range > cfg.ground_extent - 2.0) return false;
  seat_on_ground(cfg, g, p);
  return !overlaps(g, p, anchor, 0.8);
}

}  // namespace

Eigen::Vector3d SceneGeometry::ground_normal() const { return Eigen::Vector3d(-slope_x, -slope_y, 1.0).normalized(); }

std::optional<RayHit> cast_ray(const SceneGeometry& g, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                               double t_min) {
  std::optional<RayHit> best;
  if (g.has_ground) {
    // n . (o + t d) = 0 with n = (-sx, -sy, 1).
    const double denom = dir.z() - g.slope_x * dir.x() - g.slope_y * dir.y();
    if (std::abs(denom) > 1e-15) {
      const double t = -(origin.z() - g.slope_x * origin.x() - g.slope_y * origin.y()) / denom;
      if (t > t_min) best = RayHit{t, -1};
    }
  }
  for (std::size_t k = 0; k < g.objects.size(); ++k) {
    if (auto t = intersect(g.objects[k], origin, dir, t_min)) {
      if (!best || *t < best->t) best = RayHit{*t, static_cast<int>(k)};
    }
  }
  return best;
}

int SceneConfig::class_count(int cls) const {
  if (cls == 0) return ground_points;
  return classes[cls].objects * classes[cls].points_per_object;
}

int SceneConfig::total_points() const {
  int n = 0;
  for (int c = 0; c < num_classes(); ++c) n += class_count(c);
  return n;
}

void SceneConfig::validate() const {
  require(num_classes() >= 3, ErrorCategory::kConfig, "need at least 3 classes (ground + 2 object classes)");
  require(classes[0].shape == ShapeKind::kGround, ErrorCategory::kConfig, "class 0 must have shape 'ground'");
  for (int c = 1; c < num_classes(); ++c) {
    require(classes[c].shape != ShapeKind::kGround, ErrorCategory::kConfig, "only class 0 may be ground");
    require(classes[c].objects >= 0 && classes[c].points_per_object >= 0, ErrorCategory::kConfig,
            "object counts must be non-negative");
    require((classes[c].size.array() > 0).all(), ErrorCategory::kConfig, "object sizes must be positive");
  }
  require(noise_sigma >= 0.0, ErrorCategory::kConfig, "noise_sigma must be >= 0");
  require(ground_points >= 0, ErrorCategory::kConfig, "ground_points must be >= 0");
  require(total_points() >= 1, ErrorCategory::kConfig, "scene must contain at least one point");
  require(ground_extent > ground_min_range && ground_min_range > 0, ErrorCategory::kConfig,
          "need 0 < ground_min_range < ground_extent");
  require(num_cameras >= 1, ErrorCategory::kConfig, "need at least one camera");
  require(image_width > 0 && image_height > 0, ErrorCategory::kConfig, "image size must be positive");
  require(max_tilt_deg >= 0.0 && max_tilt_deg < 30.0, ErrorCategory::kConfig, "max_tilt_deg must be in [0, 30)");
  require(group_probability >= 0.0 && group_probability <= 1.0, ErrorCategory::kConfig,
          "group_probability must be in [0, 1]");
}

SceneConfig SceneConfig::defaults() {
  SceneConfig cfg;
  auto add = [&](std::string name, ShapeKind shape, Eigen::Vector3d size, Eigen::Vector3d color, double intensity,
                 int objects, int ppo) {
    cfg.classes.push_back(ClassSpec{std::move(name), shape, size, color, intensity, objects, ppo});
  };
  add("road", ShapeKind::kGround, {1, 1, 1}, {0.38, 0.38, 0.40}, 0.20, 0, 0);
  add("car", ShapeKind::kBox, {4.2, 1.8, 1.5}, {0.80, 0.12, 0.12}, 0.60, 8, 120);
  add("truck", ShapeKind::kBox, {7.5, 2.5, 3.0}, {0.90, 0.60, 0.10}, 0.55, 3, 220);
  add("pedestrian", ShapeKind::kCylinder, {0.3, 0.3, 1.75}, {0.15, 0.25, 0.80}, 0.35, 6, 40);
  add("vegetation", ShapeKind::kBlob, {1.5, 1.5, 2.0}, {0.15, 0.60, 0.20}, 0.30, 5, 150);
  add("barrier", ShapeKind::kBox, {2.5, 0.4, 1.0}, {0.85, 0.85, 0.80}, 0.75, 6, 60);
  return cfg;
}

SceneConfig SceneConfig::from_kv(const KeyValueConfig& kv) {
  SceneConfig cfg = defaults();
  const int n = static_cast<int>(kv.get_int("num_classes", cfg.num_classes()));
  require(n >= 1 && n <= 32, ErrorCategory::kConfig, "num_classes must be in [1, 32]");
  while (cfg.num_classes() < n) {
    ClassSpec spec;
    spec.name = "class" + std::to_string(cfg.num_classes());
    cfg.classes.push_back(spec);
  }
  cfg.classes.resize(n);
  for (int c = 0; c < n; ++c) {
    const std::string p = "class." + std::to_string(c) + ".";
    ClassSpec& s = cfg.classes[c];
    s.name = kv.get_string(p + "name", s.name);
    if (auto shape = kv.find(p + "shape")) s.shape = parse_shape(p + "shape", *shape);
    if (kv.contains(p + "size")) s.size = to_vec3(p + "size", kv.get_doubles(p + "size", {}));
    if (kv.contains(p + "color")) s.color = to_vec3(p + "color", kv.get_doubles(p + "color", {}));
    s.intensity = kv.get_double(p + "intensity", s.intensity);
    s.objects = static_cast<int>(kv.get_int(p + "objects", s.objects));
    s.points_per_object = static_cast<int>(kv.get_int(p + "points_per_object", s.points_per_object));
  }
  cfg.ground_points = static_cast<int>(kv.get_int("ground_points", cfg.ground_points));
  cfg.ground_extent = kv.get_double("ground_extent", cfg.ground_extent);
  cfg.ground_min_range = kv.get_double("ground_min_range", cfg.ground_min_range);
  cfg.max_tilt_deg = kv.get_double("max_tilt_deg", cfg.max_tilt_deg);
  cfg.noise_sigma = kv.get_double("noise_sigma", cfg.noise_sigma);
  cfg.sensor_height = kv.get_double("sensor_height", cfg.sensor_height);
  cfg.object_clearance = kv.get_double("object_clearance", cfg.object_clearance);
  cfg.object_min_range = kv.get_double("object_min_range", cfg.object_min_range);
  cfg.group_probability = kv.get_double("group_probability", cfg.group_probability);
  cfg.group_gap = kv.get_double("group_gap", cfg.group_gap);
  cfg.size_jitter = kv.get_double("size_jitter", cfg.size_jitter);
  cfg.intensity_sigma = kv.get_double("intensity_sigma", cfg.intensity_sigma);
  cfg.color_jitter = kv.get_double("color_jitter", cfg.color_jitter);
  cfg.texture_sigma = kv.get_double("texture_sigma", cfg.texture_sigma);
  if (kv.contains("background_color")) {
    cfg.background_color = to_vec3("background_color", kv.get_doubles("background_color", {}));
  }
  cfg.num_cameras = static_cast<int>(kv.get_int("num_cameras", cfg.num_cameras));
  cfg.image_width = static_cast<int>(kv.get_int("image_width", cfg.image_width));
  cfg.image_height = static_cast<int>(kv.get_int("image_height", cfg.image_height));
  cfg.validate();
  return cfg;
}

KeyValueConfig SceneConfig::to_kv() const {
  KeyValueConfig kv;
  const auto num = format_number;
  kv.set("num_classes", std::to_string(num_classes()));
  for (int c = 0; c < num_classes(); ++c) {
    const std::string p = "class." + std::to_string(c) + ".";
    const ClassSpec& s = classes[c];
    kv.set(p + "name", s.name);
    kv.set(p + "shape", shape_name(s.shape));
    kv.set(p + "size", vec3_text(s.size));
    kv.set(p + "color", vec3_text(s.color));
    kv.set(p + "intensity", num(s.intensity));
    kv.set(p + "objects", std::to_string(s.objects));
    kv.set(p + "points_per_object", std::to_string(s.points_per_object));
  }
  kv.set("ground_points", std::to_string(ground_points));
  kv.set("ground_extent", num(ground_extent));
  kv.set("ground_min_range", num(ground_min_range));
  kv.set("max_tilt_deg", num(max_tilt_deg));
  kv.set("noise_sigma", num(noise_sigma));
  kv.set("sensor_height", num(sensor_height));
  kv.set("object_clearance", num(object_clearance));
  kv.set("object_min_range", num(object_min_range));
  kv.set("group_probability", num(group_probability));
  kv.set("group_gap", num(group_gap));
  kv.set("size_jitter", num(size_jitter));
  kv.set("intensity_sigma", num(intensity_sigma));
  kv.set("color_jitter", num(color_jitter));
  kv.set("texture_sigma", num(texture_sigma));
  kv.set("background_color", vec3_text(background_color));
  kv.set("num_cameras", std::to_string(num_cameras));
  kv.set("image_width", std::to_string(image_width));
  kv.set("image_height", std::to_string(image_height));
  return kv;
}

std::vector<CameraModel> make_camera_ring(const SceneConfig& cfg) {
  // Horizontal fields of view tile the full circle.
  const double hfov = 2 * kPi / cfg.num_cameras;
  const double focal = (cfg.image_width / 2.0) / std::tan(std::min(hfov, kPi * 0.9) / 2.0);
  const Eigen::Vector3d origin(0, 0, cfg.sensor_height);
  std::vector<CameraModel> cams;
  for (int k = 0; k < cfg.num_cameras; ++k) {
    cams.push_back(make_ring_camera(k * hfov, origin, focal, cfg.image_width, cfg.image_height));
  }
  return cams;
}

SceneGeometry build_geometry(const SceneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x6E0));
  SceneGeometry g;
  g.has_ground = cfg.ground_points > 0;
  g.ground_color = cfg.classes[0].color;
  g.sensor_origin = Eigen::Vector3d(0, 0, cfg.sensor_height);
  const double tilt = cfg.max_tilt_deg * kPi / 180.0 * rng.uniform();
  const double dir = rng.uniform(0, 2 * kPi);
  g.slope_x = std::tan(tilt) * std::cos(dir);
  g.slope_y = std::tan(tilt) * std::sin(dir);

  // Largest objects first so grouped placements attach to something sizeable.
  std::vector<int> order;
  for (int c = 1; c < cfg.num_classes(); ++c) {
    for (int k = 0; k < cfg.classes[c].objects; ++k) order.push_back(c);
  }
  for (int cls : order) {
    Primitive p = make_object(cfg, g, cls, rng);
    bool placed = false;
    if (!g.objects.empty() && rng.uniform() < cfg.group_probability) {
      for (int attempt = 0; attempt < 20 && !placed; ++attempt) placed = place_grouped(cfg, g, p, rng);
    }
    if (!placed) place_free(cfg, g, p, rng);
    g.objects.push_back(p);
  }

  // Re-place objects that are mostly hidden behind others.
  for (int round = 0; round < 20; ++round) {
    bool changed = false;
    for (std::size_t k = 0; k < g.objects.size(); ++k) {
      if (g.objects[k].shape == ShapeKind::kGround) continue;
      if (visible_fraction(g, static_cast<int>(k), rng, 64) >= 0.15) continue;
      Primitive p = g.objects[k];
      g.objects[k].center = Eigen::Vector3d(1e6, 1e6, 0);  // out of the way while re-placing
      place_free(cfg, g, p, rng);
      g.objects[k] = p;
      changed = true;
    }
    if (!changed) break;
  }
  return g;
}

Image render_image(const SceneGeometry& g, const CameraModel& cam, const SceneConfig& cfg, std::uint64_t texture_seed) {
  Image img(cam.width, cam.height);
  Rng rng(texture_seed);
  const Eigen::Matrix3d rt = cam.rotation.transpose();
  const Eigen::Vector3d origin = cam.to_lidar(Eigen::Vector3d::Zero());
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Eigen::Vector3d dc((u + 0.5 - cam.cx()) / cam.fx(), (v + 0.5 - cam.cy()) / cam.fy(), 1.0);
      const Eigen::Vector3d d = (rt * dc).normalized();
      Eigen::Vector3d color = cfg.background_color;
      if (auto hit = cast_ray(g, origin, d)) {
        color = hit->primitive < 0 ? g.ground_color : g.objects[hit->primitive].color;
      }
      for (int c = 0; c < 3; ++c) {
        const double x = std::clamp(color[c] + cfg.texture_sigma * rng.normal(), 0.0, 1.0);
        img.rgb(img.index(u, v), c) = std::round(x * 255.0) / 255.0;
      }
    }
  }
  return img;
}

int color_band_class(const SceneConfig& cfg, const Eigen::Vector3d& rgb) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < cfg.num_classes(); ++c) {
    const Eigen::Vector3d diff = (rgb - cfg.classes[c].color).cwiseAbs();
    if (diff.maxCoeff() > kColorBand) continue;
    const double d = diff.squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

SceneFrame generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
  const SceneGeometry g = build_geometry(cfg, seed);
  Rng rng(mix_seed(seed, 0x9015));
  SceneFrame frame;
  frame.seed = seed;
  frame.num_classes = cfg.num_classes();
  for (const auto& c : cfg.classes) frame.class_names.push_back(c.name);

  struct Sample {
    Eigen::Vector3d p;
    int cls;
  };
  std::vector<Sample> samples;
  samples.reserve(cfg.total_points());

  for (int i = 0; i < cfg.ground_points; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      const double r = rng.uniform(cfg.ground_min_range, cfg.ground_extent);
      const double a = rng.uniform(0, 2 * kPi);
      const Eigen::Vector3d p(r * std::cos(a), r * std::sin(a), g.ground_z(r * std::cos(a), r * std::sin(a)));
      if (visible_from(g, p, -1)) {
        samples.push_back({p, 0});
        ok = true;
      }
    }
    require(ok, ErrorCategory::kConfig, "ground is fully occluded");
  }
  for (std::size_t k = 0; k < g.objects.size(); ++k) {
    const Primitive& obj = g.objects[k];
    const int want = cfg.classes[obj.cls].points_per_object;
    int got = 0;
    for (long attempt = 0; got < want && attempt < 5000L * std::max(want, 1); ++attempt) {
      const Eigen::Vector3d p = sample_surface(obj, rng);
      if (visible_from(g, p, static_cast<int>(k))) {
        samples.push_back({p, obj.cls});
        ++got;
      }
    }
    require(got == want, ErrorCategory::kConfig, "object of class " + cfg.classes[obj.cls].name + " is not visible");
  }

  rng.shuffle(samples.begin(), samples.end());
  const auto n = static_cast<Eigen::Index>(samples.size());
  frame.points.resize(n, 3);
  frame.intensity.resize(n);
  frame.gt_class.resize(samples.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Vector3d p = samples[i].p;
    if (cfg.noise_sigma > 0) {
      for (int c = 0; c < 3; ++c) p[c] += cfg.noise_sigma * rng.normal();
    }
    frame.points.row(i) = p.transpose();
    frame.gt_class[i] = samples[i].cls;
    frame.intensity[i] =
        std::clamp(cfg.classes[samples[i].cls].intensity + cfg.intensity_sigma * rng.normal(), 0.0, 1.0);
  }

  frame.cameras = make_camera_ring(cfg);
  for (std::size_t c = 0; c < frame.cameras.size(); ++c) {
    frame.images.push_back(render_image(g, frame.cameras[c], cfg, mix_seed(seed, 0x1A6E + c)));
  }
  return frame;
}

}  // namespace weaklab
