#include "weaklab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "weaklab/error.hpp"
#include "weaklab/kvconfig.hpp"

namespace weaklab {
namespace {

std::string padded(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(seed));
  return buf;
}

std::vector<double> flatten(const Eigen::Matrix3d& m) {
  std::vector<double> out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::Matrix3d unflatten(const std::vector<double>& v) {
  require(v.size() == 9, ErrorCategory::kFormat, "3x3 section has wrong size");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = v[r * 3 + c];
  }
  return m;
}

std::string prefix(const std::string& a, std::size_t k, const std::string& b) {
  return a + "." + std::to_string(k) + "." + b;
}

}  // namespace

std::string scene_file_name(std::uint64_t seed) { return "scene_" + padded(seed) + ".wlb"; }
std::string labels_file_name(std::uint64_t seed) { return "labels_" + padded(seed) + ".wlb"; }
std::string superpixel_file_name(std::uint64_t seed) { return "spx_" + padded(seed) + ".wlb"; }

void put_scene(Container& c, const SceneFrame& f) {
  KeyValueConfig meta;
  meta.set("seed", std::to_string(f.seed));
  meta.set("num_classes", std::to_string(f.num_classes));
  meta.set("num_cameras", std::to_string(f.cameras.size()));
  std::string names;
  for (std::size_t i = 0; i < f.class_names.size(); ++i) names += (i ? "," : "") + f.class_names[i];
  meta.set("class_names", names);
  c.put_text("scene.meta", meta.to_string());
  const auto n = static_cast<std::uint64_t>(f.points.rows());
  c.put_f64("scene.points", {f.points.data(), static_cast<std::size_t>(f.points.size())}, {n, 3});
  c.put_f64("scene.intensity", {f.intensity.data(), static_cast<std::size_t>(f.intensity.size())}, {n});
  std::vector<std::int32_t> gt(f.gt_class.begin(), f.gt_class.end());
  c.put_i32("scene.gt_class", gt, {n});
  for (std::size_t k = 0; k < f.cameras.size(); ++k) {
    const auto& cam = f.cameras[k];
    c.put_f64(prefix("camera", k, "intrinsics"), flatten(cam.intrinsics), {3, 3});
    c.put_f64(prefix("camera", k, "rotation"), flatten(cam.rotation), {3, 3});
    c.put_f64(prefix("camera", k, "translation"), std::vector<double>{cam.translation.x(), cam.translation.y(), cam.translation.z()}, {3});
    c.put_i32(prefix("camera", k, "size"), std::vector<std::int32_t>{cam.width, cam.height}, {2});
    const auto& img = f.images[k];
    std::vector<std::uint8_t> px(static_cast<std::size_t>(img.rgb.size()));
    for (Eigen::Index i = 0; i < img.rgb.size(); ++i) {
      px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.rgb.data()[i], 0.0, 1.0) * 255.0));
    }
    c.put_u8("image." + std::to_string(k), px,
             {static_cast<std::uint64_t>(img.height), static_cast<std::uint64_t>(img.width), 3});
  }
}

SceneFrame get_scene(const Container& c) {
  const auto meta = KeyValueConfig::parse(c.get_text("scene.meta"));
  SceneFrame f;
  f.seed = static_cast<std::uint64_t>(meta.get_int("seed", 0));
  f.num_classes = static_cast<int>(meta.get_int("num_classes", 0));
  const auto names = meta.get_string("class_names", "");
  std::stringstream ss(names);
  for (std::string item; std::getline(ss, item, ',');) f.class_names.push_back(item);
  const auto pts = c.get_f64("scene.points");
  require(pts.size() % 3 == 0, ErrorCategory::kFormat, "points section is not N x 3");
  const auto n = static_cast<Eigen::Index>(pts.size() / 3);
  f.points = Eigen::Map<const PointMatrix>(pts.data(), n, 3);
  const auto inten = c.get_f64("scene.intensity");
  require(static_cast<Eigen::Index>(inten.size()) == n, ErrorCategory::kFormat, "intensity length mismatch");
  f.intensity = Eigen::Map<const Vector>(inten.data(), n);
  const auto gt = c.get_i32("scene.gt_class");
  require(static_cast<Eigen::Index>(gt.size()) == n, ErrorCategory::kFormat, "gt_class length mismatch");
  f.gt_class.assign(gt.begin(), gt.end());
  const auto cams = static_cast<std::size_t>(meta.get_int("num_cameras", 0));
  for (std::size_t k = 0; k < cams; ++k) {
    CameraModel cam;
    cam.intrinsics = unflatten(c.get_f64(prefix("camera", k, "intrinsics")));
    cam.rotation = unflatten(c.get_f64(prefix("camera", k, "rotation")));
    const auto t = c.get_f64(prefix("camera", k, "translation"));
    require(t.size() == 3, ErrorCategory::kFormat, "translation has wrong size");
    cam.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    const auto size = c.get_i32(prefix("camera", k, "size"));
    require(size.size() == 2, ErrorCategory::kFormat, "camera size has wrong length");
    cam.width = size[0];
    cam.height = size[1];
    f.cameras.push_back(cam);
    const auto px = c.get_u8("image." + std::to_string(k));
    Image img(cam.width, cam.height);
    require(static_cast<Eigen::Index>(px.size()) == img.rgb.size(), ErrorCategory::kFormat, "image size mismatch");
    for (std::size_t i = 0; i < px.size(); ++i) img.rgb.data()[i] = px[i] / 255.0;
    f.images.push_back(std::move(img));
  }
  return f;
}

void put_labels(Container& c, const LabelSet& l) {
  c.put_i32("labels.shape", std::vector<std::int32_t>{l.num_points, l.num_classes}, {2});
  auto pairs = [&](const std::string& name, const std::map<int, int>& m) {
    std::vector<std::int32_t> v;
    for (const auto& [p, y] : m) {
      v.push_back(p);
      v.push_back(y);
    }
    c.put_i32(name, v, {m.size(), 2});
  };
  pairs("labels.sparse", l.sparse);
  pairs("labels.propagated", l.propagated);
  std::vector<std::int32_t> neg_idx;
  std::vector<std::uint32_t> neg_mask;
  for (const auto& [p, m] : l.negative) {
    neg_idx.push_back(p);
    neg_mask.push_back(m);
  }
  c.put_i32("labels.negative.index", neg_idx);
  c.put_u32("labels.negative.mask", neg_mask);
  std::vector<std::int32_t> ps_idx;
  std::vector<double> ps_conf;
  for (const auto& [p, pl] : l.pseudo) {
    ps_idx.push_back(p);
    ps_idx.push_back(pl.cls);
    ps_idx.push_back(pl.iteration);
    ps_conf.push_back(pl.confidence);
  }
  c.put_i32("labels.pseudo", ps_idx, {l.pseudo.size(), 3});
  c.put_f64("labels.pseudo.confidence", ps_conf);
}

LabelSet get_labels(const Container& c) {
  LabelSet l;
  const auto shape = c.get_i32("labels.shape");
  require(shape.size() == 2, ErrorCategory::kFormat, "labels.shape has wrong length");
  l.num_points = shape[0];
  l.num_classes = shape[1];
  auto pairs = [&](const std::string& name, std::map<int, int>& m) {
    const auto v = c.get_i32(name);
    require(v.size() % 2 == 0, ErrorCategory::kFormat, name + " is not N x 2");
    for (std::size_t i = 0; i < v.size(); i += 2) m[v[i]] = v[i + 1];
  };
  pairs("labels.sparse", l.sparse);
  pairs("labels.propagated", l.propagated);
  const auto ni = c.get_i32("labels.negative.index");
  const auto nm = c.get_u32("labels.negative.mask");
  require(ni.size() == nm.size(), ErrorCategory::kFormat, "negative label sections differ in length");
  for (std::size_t i = 0; i < ni.size(); ++i) l.negative[ni[i]] = nm[i];
  const auto pi = c.get_i32("labels.pseudo");
  const auto pc = c.get_f64("labels.pseudo.confidence");
  require(pi.size() == pc.size() * 3, ErrorCategory::kFormat, "pseudo label sections differ in length");
  for (std::size_t i = 0; i < pc.size(); ++i) l.pseudo[pi[3 * i]] = {pi[3 * i + 1], pc[i], pi[3 * i + 2]};
  l.validate();
  return l;
}

void put_units(Container& c, const AnnotationUnits& u) {
  std::vector<std::int32_t> ids(u.clustering.cluster_id.begin(), u.clustering.cluster_id.end());
  c.put_i32("units.cluster_id", ids);
  std::vector<std::uint8_t> ground(u.ground_mask.size());
  for (std::size_t i = 0; i < ground.size(); ++i) ground[i] = u.ground_mask[i] ? 1 : 0;
  c.put_u8("units.ground_mask", ground);
  c.put_i32("units.meta", std::vector<std::int32_t>{u.clustering.num_clusters, u.ground_unit}, {2});
}

AnnotationUnits get_units(const Container& c) {
  AnnotationUnits u;
  const auto ids = c.get_i32("units.cluster_id");
  u.clustering.cluster_id.assign(ids.begin(), ids.end());
  const auto ground = c.get_u8("units.ground_mask");
  u.ground_mask.assign(ground.size(), false);
  for (std::size_t i = 0; i < ground.size(); ++i) u.ground_mask[i] = ground[i] != 0;
  const auto meta = c.get_i32("units.meta");
  require(meta.size() == 2, ErrorCategory::kFormat, "units.meta has wrong length");
  u.clustering.num_clusters = meta[0];
  u.ground_unit = meta[1];
  for (int id : u.clustering.cluster_id) {
    require(id >= -1 && id < u.clustering.num_clusters, ErrorCategory::kFormat, "cluster id out of range");
  }
  return u;
}

void put_superpixels(Container& c, const std::vector<SuperpixelMap>& maps) {
  c.put_i32("superpixels.count", std::vector<std::int32_t>{static_cast<std::int32_t>(maps.size())});
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& m = maps[k];
    std::vector<std::int32_t> a(m.assignment.begin(), m.assignment.end());
    c.put_i32(prefix("superpixels", k, "assignment"), a,
              {static_cast<std::uint64_t>(m.height), static_cast<std::uint64_t>(m.width)});
    c.put_f64(prefix("superpixels", k, "energy"), m.energy_history);
  }
}

std::vector<SuperpixelMap> get_superpixels(const Container& c) {
  const auto count = c.get_i32("superpixels.count");
  require(count.size() == 1 && count[0] >= 0, ErrorCategory::kFormat, "bad superpixels.count");
  std::vector<SuperpixelMap> maps(count[0]);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    auto& m = maps[k];
    const auto& sec = c.section(prefix("superpixels", k, "assignment"));
    require(sec.dims.size() == 2, ErrorCategory::kFormat, "superpixel assignment must be 2-D");
    m.height = static_cast<int>(sec.dims[0]);
    m.width = static_cast<int>(sec.dims[1]);
    const auto a = c.get_i32(prefix("superpixels", k, "assignment"));
    m.assignment.assign(a.begin(), a.end());
    m.energy_history = c.get_f64(prefix("superpixels", k, "energy"));
    int kmax = -1;
    for (int id : m.assignment) {
      require(id >= 0, ErrorCategory::kFormat, "negative superpixel id");
      kmax = std::max(kmax, id);
    }
    m.num_superpixels = kmax + 1;
    m.pixel_count.assign(m.num_superpixels, 0);
    m.centroid.assign(m.num_superpixels, Eigen::Vector2d::Zero());
    for (int v = 0; v < m.height; ++v) {
      for (int u = 0; u < m.width; ++u) {
        const int s = m.at(u, v);
        ++m.pixel_count[s];
        m.centroid[s] += Eigen::Vector2d(u + 0.5, v + 0.5);
      }
    }
    for (int s = 0; s < m.num_superpixels; ++s) {
      require(m.pixel_count[s] > 0, ErrorCategory::kFormat, "superpixel ids are not dense");
      m.centroid[s] /= m.pixel_count[s];
    }
    m.mean_color = Matrix::Zero(m.num_superpixels, 3);  // image data lives in the scene file
  }
  return maps;
}

void put_model(Container& c, const ClassifierState& s) {
  const auto& m = s.config;
  c.put_i32("model.config",
            std::vector<std::int32_t>{m.num_classes, m.point_dim, m.pixel_dim, m.hidden, m.gate_hidden,
                                      m.projection_dim},
            {6});
  c.put_u64("model.seed", std::vector<std::uint64_t>{m.seed});
  c.put_u64("model.steps", std::vector<std::uint64_t>{static_cast<std::uint64_t>(s.optimizer.steps())});
  for (int i = 0; i < s.params.size(); ++i) {
    const auto& v = s.params.value(i);
    const std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(v.rows()), static_cast<std::uint64_t>(v.cols())};
    c.put_f64("param." + s.params.name(i), {v.data(), static_cast<std::size_t>(v.size())}, dims);
    const auto& mom = s.optimizer.velocity()[i];
    c.put_f64("momentum." + s.params.name(i), {mom.data(), static_cast<std::size_t>(mom.size())}, dims);
  }
}

ClassifierState get_model(const Container& c) {
  const auto cfg = c.get_i32("model.config");
  require(cfg.size() == 6, ErrorCategory::kFormat, "model.config has wrong length");
  ModelConfig m;
  m.num_classes = cfg[0];
  m.point_dim = cfg[1];
  m.pixel_dim = cfg[2];
  m.hidden = cfg[3];
  m.gate_hidden = cfg[4];
  m.projection_dim = cfg[5];
  const auto seed = c.get_u64("model.seed");
  require(seed.size() == 1, ErrorCategory::kFormat, "model.seed has wrong length");
  m.seed = seed[0];
  ClassifierState s(m);
  std::vector<Matrix> velocity;
  for (int i = 0; i < s.params.size(); ++i) {
    auto& v = s.params.value(i);
    const auto data = c.get_f64("param." + s.params.name(i));
    require(static_cast<Eigen::Index>(data.size()) == v.size(), ErrorCategory::kFormat,
            "parameter " + s.params.name(i) + " has wrong size");
    v = Eigen::Map<const Matrix>(data.data(), v.rows(), v.cols());
    const auto mom = c.get_f64("momentum." + s.params.name(i));
    require(mom.size() == data.size(), ErrorCategory::kFormat, "momentum size mismatch");
    velocity.push_back(Eigen::Map<const Matrix>(mom.data(), v.rows(), v.cols()));
  }
  const auto steps = c.get_u64("model.steps");
  require(steps.size() == 1, ErrorCategory::kFormat, "model.steps has wrong length");
  s.optimizer.restore(std::move(velocity), static_cast<std::int64_t>(steps[0]));
  return s;
}

void write_scene(const std::filesystem::path& path, const SceneFrame& frame) {
  Container c;
  put_scene(c, frame);
  c.write(path);
}

SceneFrame read_scene(const std::filesystem::path& path) { return get_scene(Container::read(path)); }

std::vector<std::uint64_t> list_scene_seeds(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCategory::kIo, "not a directory: " + dir.string());
  std::vector<std::uint64_t> seeds;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("scene_", 0) != 0 || entry.path().extension() != ".wlb") continue;
    const auto digits = name.substr(6, name.size() - 6 - 4);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) continue;
    seeds.push_back(std::stoull(digits));
  }
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto parse = [&](const std::string& s) -> std::uint64_t {
    require(!s.empty() && std::all_of(s.begin(), s.end(), ::isdigit), ErrorCategory::kConfig,
            "bad seed '" + s + "' in '" + text + "'");
    return std::stoull(s);
  };
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto a = parse(text.substr(0, dots)), b = parse(text.substr(dots + 2));
    require(a <= b, ErrorCategory::kConfig, "empty seed range '" + text + "'");
    for (auto s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse(item));
  require(!out.empty(), ErrorCategory::kConfig, "empty seed list");
  return out;
}

}  // namespace weaklab
