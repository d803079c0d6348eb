#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace weaklab {

enum class DType : std::uint8_t { kU8 = 1, kI32 = 2, kF32 = 3, kF64 = 4, kText = 5, kU32 = 6, kU64 = 7 };

std::size_t dtype_size(DType type);

struct Section {
  DType dtype = DType::kU8;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> bytes;  // little-endian payload

  std::uint64_t element_count() const;
};

/// The "WLB1" binary container: magic, version, a section table, then
/// 8-byte-aligned little-endian payloads. See docs/formats.md.
class Container {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put_u8(const std::string& name, std::span<const std::uint8_t> data, std::vector<std::uint64_t> dims = {});
  void put_i32(const std::string& name, std::span<const std::int32_t> data, std::vector<std::uint64_t> dims = {});
  void put_u32(const std::string& name, std::span<const std::uint32_t> data, std::vector<std::uint64_t> dims = {});
  void put_u64(const std::string& name, std::span<const std::uint64_t> data, std::vector<std::uint64_t> dims = {});
  void put_f64(const std::string& name, std::span<const double> data, std::vector<std::uint64_t> dims = {});
  void put_text(const std::string& name, const std::string& text);

  bool contains(const std::string& name) const { return sections_.contains(name); }
  const Section& section(const std::string& name) const;

  std::vector<std::uint8_t> get_u8(const std::string& name) const;
  std::vector<std::int32_t> get_i32(const std::string& name) const;
  std::vector<std::uint32_t> get_u32(const std::string& name) const;
  std::vector<std::uint64_t> get_u64(const std::string& name) const;
  std::vector<double> get_f64(const std::string& name) const;
  std::string get_text(const std::string& name) const;

  const std::map<std::string, Section>& sections() const { return sections_; }

  std::vector<std::uint8_t> serialize() const;
  static Container deserialize(std::span<const std::uint8_t> bytes);

  void write(const std::filesystem::path& path) const;
  static Container read(const std::filesystem::path& path);

 private:
  void put(const std::string& name, DType type, const void* data, std::size_t count, std::vector<std::uint64_t> dims);
  const Section& typed(const std::string& name, DType type) const;

  std::map<std::string, Section> sections_;
};

/// Writes atomically: a temporary sibling file renamed into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace weaklab
