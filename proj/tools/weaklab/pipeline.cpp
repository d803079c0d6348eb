#include "pipeline.hpp"

#include "weaklab/container.hpp"
#include "weaklab/error.hpp"
#include "weaklab/io.hpp"
#include "weaklab/trainer.hpp"

namespace weaklab::cli {
namespace {

std::string num(double v) { return format_number(v); }

}  // namespace

KeyValueConfig load_config(const std::optional<fs::path>& path) {
  if (!path) return {};
  require(fs::is_regular_file(*path), ErrorCategory::kConfig, "config file not found: " + path->string());
  return KeyValueConfig::load(*path);
}

ActiveLabelConfig active_label_config(const KeyValueConfig& kv) {
  ActiveLabelConfig c;
  c.pillars.radial_bins = static_cast<int>(kv.get_int("pillars.radial_bins", c.pillars.radial_bins));
  c.pillars.angular_bins = static_cast<int>(kv.get_int("pillars.angular_bins", c.pillars.angular_bins));
  c.pillars.max_range = kv.get_double("pillars.max_range", c.pillars.max_range);
  c.ransac.iterations = static_cast<int>(kv.get_int("ransac.iterations", c.ransac.iterations));
  c.ransac.inlier_threshold = kv.get_double("ransac.inlier_threshold", c.ransac.inlier_threshold);
  c.ransac.max_normal_angle_deg = kv.get_double("ransac.max_normal_angle_deg", c.ransac.max_normal_angle_deg);
  c.ransac.seed_band = kv.get_double("ransac.seed_band", c.ransac.seed_band);
  c.ransac.consensus_tolerance = kv.get_double("ransac.consensus_tolerance", c.ransac.consensus_tolerance);
  c.hdbscan.min_cluster_size = static_cast<int>(kv.get_int("hdbscan.min_cluster_size", c.hdbscan.min_cluster_size));
  c.hdbscan.min_samples = static_cast<int>(kv.get_int("hdbscan.min_samples", c.hdbscan.min_samples));
  c.ground_as_unit = kv.get_bool("ground_as_unit", c.ground_as_unit);
  require(c.ransac.iterations > 0, ErrorCategory::kConfig, "ransac.iterations must be positive");
  require(c.ransac.inlier_threshold > 0, ErrorCategory::kConfig, "ransac.inlier_threshold must be positive");
  require(c.hdbscan.min_cluster_size >= 2, ErrorCategory::kConfig, "hdbscan.min_cluster_size must be >= 2");
  require(c.hdbscan.min_samples >= 1, ErrorCategory::kConfig, "hdbscan.min_samples must be >= 1");
  return c;
}

KeyValueConfig to_kv(const ActiveLabelConfig& c) {
  KeyValueConfig kv;
  kv.set("pillars.radial_bins", std::to_string(c.pillars.radial_bins));
  kv.set("pillars.angular_bins", std::to_string(c.pillars.angular_bins));
  kv.set("pillars.max_range", num(c.pillars.max_range));
  kv.set("ransac.iterations", std::to_string(c.ransac.iterations));
  kv.set("ransac.inlier_threshold", num(c.ransac.inlier_threshold));
  kv.set("ransac.max_normal_angle_deg", num(c.ransac.max_normal_angle_deg));
  kv.set("ransac.seed_band", num(c.ransac.seed_band));
  kv.set("ransac.consensus_tolerance", num(c.ransac.consensus_tolerance));
  kv.set("hdbscan.min_cluster_size", std::to_string(c.hdbscan.min_cluster_size));
  kv.set("hdbscan.min_samples", std::to_string(c.hdbscan.min_samples));
  kv.set("ground_as_unit", c.ground_as_unit ? "true" : "false");
  return kv;
}

SeedsConfig seeds_config(const KeyValueConfig& kv) {
  SeedsConfig c;
  c.num_superpixels = static_cast<int>(kv.get_int("num_superpixels", c.num_superpixels));
  c.num_levels = static_cast<int>(kv.get_int("num_levels", c.num_levels));
  c.iterations = static_cast<int>(kv.get_int("iterations", c.iterations));
  c.histogram_bins = static_cast<int>(kv.get_int("histogram_bins", c.histogram_bins));
  require(c.num_superpixels >= 1, ErrorCategory::kConfig, "num_superpixels must be >= 1");
  require(c.num_levels >= 1, ErrorCategory::kConfig, "num_levels must be >= 1");
  require(c.iterations >= 0, ErrorCategory::kConfig, "iterations must be >= 0");
  require(c.histogram_bins >= 1, ErrorCategory::kConfig, "histogram_bins must be >= 1");
  return c;
}

KeyValueConfig to_kv(const SeedsConfig& c) {
  KeyValueConfig kv;
  kv.set("num_superpixels", std::to_string(c.num_superpixels));
  kv.set("num_levels", std::to_string(c.num_levels));
  kv.set("iterations", std::to_string(c.iterations));
  kv.set("histogram_bins", std::to_string(c.histogram_bins));
  return kv;
}

void write_label_artifact(const fs::path& path, const LabelSet& labels, const AnnotationUnits& units) {
  Container c;
  put_labels(c, labels);
  put_units(c, units);
  c.write(path);
}

LabelArtifact read_label_artifact(const fs::path& path) {
  const Container c = Container::read(path);
  LabelArtifact a{get_labels(c), get_units(c)};
  require(static_cast<int>(a.units.clustering.cluster_id.size()) == a.labels.num_points, ErrorCategory::kFormat,
          path.string() + ": units and labels disagree on the point count");
  return a;
}

void write_superpixels(const fs::path& path, const std::vector<SuperpixelMap>& maps) {
  Container c;
  put_superpixels(c, maps);
  c.write(path);
}

std::vector<SuperpixelMap> read_superpixels(const fs::path& path) { return get_superpixels(Container::read(path)); }

Dataset load_dataset(const DatasetPaths& paths, const PrepareConfig& config, bool with_train, bool with_val) {
  Dataset d;
  const auto seeds = list_scene_seeds(paths.scenes);
  require(!seeds.empty(), ErrorCategory::kData, "no scene_*.wlb files in " + paths.scenes.string());
  for (std::uint64_t seed : seeds) {
    const bool val = is_validation_seed(seed);
    if (val ? !with_val : !with_train) continue;
    const SceneFrame frame = read_scene(paths.scenes / scene_file_name(seed));
    if (d.num_classes == 0) {
      d.num_classes = frame.num_classes;
      d.class_names = frame.class_names;
    }
    require(frame.num_classes == d.num_classes, ErrorCategory::kData, "scenes disagree on the class count");
    std::optional<std::vector<SuperpixelMap>> spx;
    if (paths.superpixels) spx = read_superpixels(*paths.superpixels / superpixel_file_name(seed));
    PreparedScene scene = prepare_scene(frame, config, spx ? &*spx : nullptr);
    if (val) {
      d.val_seeds.push_back(seed);
      d.val.push_back(std::move(scene));
      continue;
    }
    if (paths.labels) {
      LabelArtifact a = read_label_artifact(*paths.labels / labels_file_name(seed));
      require(a.labels.num_points == frame.points.rows(), ErrorCategory::kData,
              "labels for scene " + std::to_string(seed) + " do not match its point count");
      d.labels.push_back(a.labels);
      d.artifacts.push_back(std::move(a));
    }
    d.train_seeds.push_back(seed);
    d.train.push_back(std::move(scene));
  }
  return d;
}

std::vector<LabelRequest> oracle_requests(const AnnotationUnits& units, const PointMatrix& points,
                                          const std::vector<int>& gt, int num_classes) {
  std::vector<IndexList> members(units.clustering.num_clusters);
  for (std::size_t i = 0; i < units.clustering.cluster_id.size(); ++i) {
    if (const int u = units.clustering.cluster_id[i]; u >= 0) members[u].push_back(static_cast<int>(i));
  }
  std::vector<LabelRequest> out;
  for (int u = 0; u < units.clustering.num_clusters; ++u) {
    const auto& m = members[u];
    if (m.empty()) continue;
    std::vector<IndexList> by_class(num_classes);
    for (int i : m) by_class[gt[i]].push_back(i);
    LabelRequest req;
    req.cluster_id = u;
    int present = 0;
    for (const auto& b : by_class) present += b.empty() ? 0 : 1;
    if (present == 1) {
      req.mode = AnnotationMode::kPure;
      req.assignments.push_back({gt[m.front()], medoid(points, m)});
    } else {
      req.mode = AnnotationMode::kMixed;
      for (int c = 0; c < num_classes; ++c) {
        if (!by_class[c].empty()) req.assignments.push_back({c, medoid(points, by_class[c])});
      }
    }
    out.push_back(std::move(req));
  }
  return out;
}

}  // namespace weaklab::cli
