#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace weaklab {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Later assignments to the same key override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::optional<std::string> find(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  /// Canonical text: sorted keys, one `key = value` per line.
  std::string to_string() const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Keys starting with `prefix`, with the prefix removed.
  KeyValueConfig subset(const std::string& prefix) const;
  /// Copies every key of `other` prefixed with `prefix`, overwriting.
  void merge(const KeyValueConfig& other, const std::string& prefix = "");

 private:
  std::map<std::string, std::string> values_;
};

/// Shortest text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace weaklab
