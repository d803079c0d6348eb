#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "weaklab/activelabel.hpp"
#include "weaklab/container.hpp"
#include "weaklab/labels.hpp"
#include "weaklab/model.hpp"
#include "weaklab/superpixel.hpp"
#include "weaklab/synth.hpp"

namespace weaklab {

/// File names used inside artifact directories.
std::string scene_file_name(std::uint64_t seed);       // scene_000042.wlb
std::string labels_file_name(std::uint64_t seed);      // labels_000042.wlb
std::string superpixel_file_name(std::uint64_t seed);  // spx_000042.wlb

void put_scene(Container& c, const SceneFrame& frame);
SceneFrame get_scene(const Container& c);

void put_labels(Container& c, const LabelSet& labels);
LabelSet get_labels(const Container& c);

void put_units(Container& c, const AnnotationUnits& units);
AnnotationUnits get_units(const Container& c);

void put_superpixels(Container& c, const std::vector<SuperpixelMap>& maps);
std::vector<SuperpixelMap> get_superpixels(const Container& c);

void put_model(Container& c, const ClassifierState& state);
ClassifierState get_model(const Container& c);

void write_scene(const std::filesystem::path& path, const SceneFrame& frame);
SceneFrame read_scene(const std::filesystem::path& path);

/// Seeds of every scene_*.wlb in `dir`, ascending.
std::vector<std::uint64_t> list_scene_seeds(const std::filesystem::path& dir);

/// Parses "a..b" (inclusive), "a,b,c" or a single integer.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

}  // namespace weaklab
