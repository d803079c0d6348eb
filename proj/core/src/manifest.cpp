#include "weaklab/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "weaklab/container.hpp"
#include "weaklab/error.hpp"

namespace weaklab {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) {
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "command " << command << "\n";
  os << "tool_version " << tool_version << "\n";
  os << "config_hash " << config_hash << "\n";
  os << "seeds";
  for (auto s : seeds) os << " " << s;
  os << "\n";
  for (const auto& [k, v] : parameters) os << "param " << k << " " << v << "\n";
  for (const auto& [k, v] : artifacts) os << "artifact " << k << " " << v << "\n";
  return os.str();
}

RunManifest RunManifest::parse(const std::string& text) {
  RunManifest m;
  m.tool_version.clear();
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    auto split_pair = [&](std::map<std::string, std::string>& target) {
      const auto sp2 = rest.find(' ');
      require(sp2 != std::string::npos, ErrorCategory::kFormat, "manifest line " + std::to_string(line_no));
      target[rest.substr(0, sp2)] = rest.substr(sp2 + 1);
    };
    if (key == "command") {
      m.command = rest;
    } else if (key == "tool_version") {
      m.tool_version = rest;
    } else if (key == "config_hash") {
      m.config_hash = rest;
    } else if (key == "seeds") {
      std::istringstream ss(rest);
      for (std::uint64_t s; ss >> s;) m.seeds.push_back(s);
    } else if (key == "param") {
      split_pair(m.parameters);
    } else if (key == "artifact") {
      split_pair(m.artifacts);
    } else {
      fail(ErrorCategory::kFormat, "unknown manifest key '" + key + "' on line " + std::to_string(line_no));
    }
  }
  return m;
}

std::map<std::string, std::string> hash_artifacts(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel == kManifestName || rel.ends_with(".lock") || rel.ends_with(".tmp")) continue;
    const auto bytes = read_file(entry.path());
    out[rel] = hex64(fnv1a64(bytes));
  }
  return out;
}

void write_manifest(const std::filesystem::path& dir, RunManifest manifest) {
  manifest.artifacts = hash_artifacts(dir);
  write_text_file(dir / kManifestName, manifest.to_text());
}

RunManifest read_manifest(const std::filesystem::path& dir) {
  return RunManifest::parse(read_text_file(dir / kManifestName));
}

}  // namespace weaklab
