#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace weaklab {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr const char* kManifestName = "manifest.txt";

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t value);

/// Provenance record written next to every artifact set. Contains no clocks
/// or host data so identical inputs give identical manifests.
struct RunManifest {
  std::string command;
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> parameters;
  std::map<std::string, std::string> artifacts;  // relative path -> content hash

  std::string to_text() const;
  static RunManifest parse(const std::string& text);
};

/// Hashes every regular file in `dir` except the manifest itself.
std::map<std::string, std::string> hash_artifacts(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, RunManifest manifest);
RunManifest read_manifest(const std::filesystem::path& dir);

}  // namespace weaklab
