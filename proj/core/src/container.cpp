#include "weaklab/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "weaklab/error.hpp"

namespace weaklab {
namespace {

static_assert(std::endian::native == std::endian::little, "container encoding assumes a little-endian host");

constexpr char kMagic[4] = {'W', 'L', 'B', '1'};

template <typename T>
void append(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T take() {
    require(pos_ + sizeof(T) <= bytes_.size(), ErrorCategory::kFormat, "truncated WLB1 section table");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take_string(std::size_t n) {
    require(pos_ + n <= bytes_.size(), ErrorCategory::kFormat, "truncated WLB1 section name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t dtype_size(DType type) {
  switch (type) {
    case DType::kU8:
    case DType::kText: return 1;
    case DType::kI32:
    case DType::kU32:
    case DType::kF32: return 4;
    case DType::kF64:
    case DType::kU64: return 8;
  }
  return 1;
}

std::uint64_t Section::element_count() const { return bytes.size() / dtype_size(dtype); }

void Container::put(const std::string& name, DType type, const void* data, std::size_t count,
                    std::vector<std::uint64_t> dims) {
  require(!name.empty() && name.size() < 65536, ErrorCategory::kFormat, "invalid section name");
  if (dims.empty()) dims.push_back(count);
  std::uint64_t prod = 1;
  for (auto d : dims) prod *= d;
  require(prod == count, ErrorCategory::kFormat, "section '" + name + "': dims do not match element count");
  require(dims.size() <= 255, ErrorCategory::kFormat, "section rank too large");
  Section s;
  s.dtype = type;
  s.dims = std::move(dims);
  const auto* p = static_cast<const std::uint8_t*>(data);
  s.bytes.assign(p, p + count * dtype_size(type));
  sections_[name] = std::move(s);
}

void Container::put_u8(const std::string& n, std::span<const std::uint8_t> d, std::vector<std::uint64_t> dims) {
  put(n, DType::kU8, d.data(), d.size(), std::move(dims));
}
void Container::put_i32(const std::string& n, std::span<const std::int32_t> d, std::vector<std::uint64_t> dims) {
  put(n, DType::kI32, d.data(), d.size(), std::move(dims));
}
void Container::put_u32(const std::string& n, std::span<const std::uint32_t> d, std::vector<std::uint64_t> dims) {
  put(n, DType::kU32, d.data(), d.size(), std::move(dims));
}
void Container::put_u64(const std::string& n, std::span<const std::uint64_t> d, std::vector<std::uint64_t> dims) {
  put(n, DType::kU64, d.data(), d.size(), std::move(dims));
}
void Container::put_f64(const std::string& n, std::span<const double> d, std::vector<std::uint64_t> dims) {
  put(n, DType::kF64, d.data(), d.size(), std::move(dims));
}
void Container::put_text(const std::string& n, const std::string& text) {
  put(n, DType::kText, text.data(), text.size(), {});
}

const Section& Container::section(const std::string& name) const {
  auto it = sections_.find(name);
  require(it != sections_.end(), ErrorCategory::kFormat, "missing section '" + name + "'");
  return it->second;
}

const Section& Container::typed(const std::string& name, DType type) const {
  const Section& s = section(name);
  require(s.dtype == type, ErrorCategory::kFormat, "section '" + name + "' has unexpected type");
  return s;
}

template <typename T>
static std::vector<T> decode(const Section& s) {
  std::vector<T> out(s.bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), s.bytes.data(), out.size() * sizeof(T));
  return out;
}

std::vector<std::uint8_t> Container::get_u8(const std::string& n) const { return typed(n, DType::kU8).bytes; }
std::vector<std::int32_t> Container::get_i32(const std::string& n) const { return decode<std::int32_t>(typed(n, DType::kI32)); }
std::vector<std::uint32_t> Container::get_u32(const std::string& n) const { return decode<std::uint32_t>(typed(n, DType::kU32)); }
std::vector<std::uint64_t> Container::get_u64(const std::string& n) const { return decode<std::uint64_t>(typed(n, DType::kU64)); }
std::vector<double> Container::get_f64(const std::string& n) const { return decode<double>(typed(n, DType::kF64)); }
std::string Container::get_text(const std::string& n) const {
  const auto& b = typed(n, DType::kText).bytes;
  return std::string(b.begin(), b.end());
}

std::vector<std::uint8_t> Container::serialize() const {
  // Table size is needed to compute payload offsets.
  std::size_t table = 4 + 4 + 4;
  for (const auto& [name, s] : sections_) table += 2 + name.size() + 1 + 1 + 8 * s.dims.size() + 8 + 8;
  auto align8 = [](std::uint64_t x) { return (x + 7) & ~std::uint64_t{7}; };

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  append<std::uint32_t>(out, kVersion);
  append<std::uint32_t>(out, static_cast<std::uint32_t>(sections_.size()));
  std::uint64_t offset = align8(table);
  for (const auto& [name, s] : sections_) {
    append<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    append<std::uint8_t>(out, static_cast<std::uint8_t>(s.dtype));
    append<std::uint8_t>(out, static_cast<std::uint8_t>(s.dims.size()));
    for (auto d : s.dims) append<std::uint64_t>(out, d);
    append<std::uint64_t>(out, offset);
    append<std::uint64_t>(out, s.bytes.size());
    offset = align8(offset + s.bytes.size());
  }
  for (const auto& [name, s] : sections_) {
    out.resize(align8(out.size()), 0);
    out.insert(out.end(), s.bytes.begin(), s.bytes.end());
  }
  return out;
}

Container Container::deserialize(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCategory::kFormat,
          "not a WLB1 container");
  Reader r(bytes.subspan(4));
  const auto version = r.take<std::uint32_t>();
  require(version == kVersion, ErrorCategory::kFormat, "unsupported WLB1 version " + std::to_string(version));
  const auto count = r.take<std::uint32_t>();
  Container c;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.take<std::uint16_t>();
    const std::string name = r.take_string(name_len);
    Section s;
    const auto dtype = r.take<std::uint8_t>();
    require(dtype >= 1 && dtype <= 7, ErrorCategory::kFormat, "unknown dtype in section '" + name + "'");
    s.dtype = static_cast<DType>(dtype);
    const auto rank = r.take<std::uint8_t>();
    for (int d = 0; d < rank; ++d) s.dims.push_back(r.take<std::uint64_t>());
    const auto offset = r.take<std::uint64_t>();
    const auto size = r.take<std::uint64_t>();
    require(offset <= bytes.size() && size <= bytes.size() - offset, ErrorCategory::kFormat,
            "section '" + name + "' points past end of file");
    require(size % dtype_size(s.dtype) == 0, ErrorCategory::kFormat, "section '" + name + "' has ragged payload");
    s.bytes.assign(bytes.begin() + offset, bytes.begin() + offset + size);
    std::uint64_t prod = 1;
    for (auto d : s.dims) prod *= d;
    require(prod == s.element_count(), ErrorCategory::kFormat, "section '" + name + "' dims mismatch");
    c.sections_[name] = std::move(s);
  }
  return c;
}

void Container::write(const std::filesystem::path& path) const { write_file(path, serialize()); }

Container Container::read(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCategory::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCategory::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace weaklab
