#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "weaklab/activelabel.hpp"
#include "weaklab/annotate_service.hpp"
#include "weaklab/features.hpp"
#include "weaklab/kvconfig.hpp"
#include "weaklab/labels.hpp"
#include "weaklab/superpixel.hpp"
#include "weaklab/synth.hpp"

namespace weaklab::cli {

namespace fs = std::filesystem;

/// Loads `path` when given; an absent path yields an empty config.
KeyValueConfig load_config(const std::optional<fs::path>& path);

/// Keys are read without their section prefix ("label.", "superpixel.").
ActiveLabelConfig active_label_config(const KeyValueConfig& kv);
KeyValueConfig to_kv(const ActiveLabelConfig& config);
SeedsConfig seeds_config(const KeyValueConfig& kv);
KeyValueConfig to_kv(const SeedsConfig& config);

/// A labels_*.wlb file: the LabelSet plus the annotation units it was made from.
struct LabelArtifact {
  LabelSet labels;
  AnnotationUnits units;
};
void write_label_artifact(const fs::path& path, const LabelSet& labels, const AnnotationUnits& units);
LabelArtifact read_label_artifact(const fs::path& path);

void write_superpixels(const fs::path& path, const std::vector<SuperpixelMap>& maps);
std::vector<SuperpixelMap> read_superpixels(const fs::path& path);

struct Dataset {
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::uint64_t> train_seeds;
  std::vector<std::uint64_t> val_seeds;
  std::vector<PreparedScene> train;
  std::vector<PreparedScene> val;
  std::vector<LabelSet> labels;  // one per training scene; empty without a labels directory
  std::vector<LabelArtifact> artifacts;
};

struct DatasetPaths {
  fs::path scenes;
  std::optional<fs::path> labels;
  std::optional<fs::path> superpixels;
};

/// Splits the scenes in `paths.scenes` by is_validation_seed and prepares
/// features. Superpixels are read from disk when a directory is given.
Dataset load_dataset(const DatasetPaths& paths, const PrepareConfig& config, bool with_train = true,
                     bool with_val = true);

/// Requests that make an AnnotationSession reproduce simulate_annotation.
std::vector<LabelRequest> oracle_requests(const AnnotationUnits& units, const PointMatrix& points,
                                          const std::vector<int>& gt_class, int num_classes);

}  // namespace weaklab::cli
