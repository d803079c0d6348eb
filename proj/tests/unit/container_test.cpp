#include <gtest/gtest.h>

#include "test_support.hpp"
#include "weaklab/container.hpp"
#include "weaklab/error.hpp"
#include "weaklab/io.hpp"
#include "weaklab/manifest.hpp"

namespace weaklab {
namespace {

using testing::TempDir;

TEST(Container, RoundTripsEveryType) {
  Container c;
  const std::vector<std::uint8_t> u8{1, 2, 3};
  const std::vector<std::int32_t> i32{-1, 0, 7, 9, 11, 13};
  const std::vector<std::uint32_t> u32{4000000000u};
  const std::vector<std::uint64_t> u64{1ULL << 60, 5};
  const std::vector<double> f64{0.1, -2.5, 1e300};
  c.put_u8("a", u8);
  c.put_i32("b", i32, {2, 3});
  c.put_u32("c", u32);
  c.put_u64("d", u64);
  c.put_f64("e", f64);
  c.put_text("f", "hello\nworld");
  const auto bytes = c.serialize();
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "WLB1");
  const Container d = Container::deserialize(bytes);
  EXPECT_EQ(d.get_u8("a"), u8);
  EXPECT_EQ(d.get_i32("b"), i32);
  EXPECT_EQ(d.section("b").dims, (std::vector<std::uint64_t>{2, 3}));
  EXPECT_EQ(d.get_u32("c"), u32);
  EXPECT_EQ(d.get_u64("d"), u64);
  EXPECT_EQ(d.get_f64("e"), f64);
  EXPECT_EQ(d.get_text("f"), "hello\nworld");
  EXPECT_EQ(d.serialize(), bytes);
}

TEST(Container, RejectsCorruptInput) {
  Container c;
  c.put_f64("x", std::vector<double>{1, 2, 3});
  auto bytes = c.serialize();
  auto category = [](std::vector<std::uint8_t> b) {
    try {
      Container::deserialize(b);
    } catch (const Error& e) {
      return e.category();
    }
    return ErrorCategory::kIo;
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(category(bad_magic), ErrorCategory::kFormat);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  EXPECT_EQ(category(truncated), ErrorCategory::kFormat);
  EXPECT_EQ(category({}), ErrorCategory::kFormat);
}

TEST(Container, TypeMismatchAndMissingSection) {
  Container c;
  c.put_i32("x", std::vector<std::int32_t>{1});
  EXPECT_THROW(c.get_f64("x"), Error);
  EXPECT_THROW(c.get_i32("y"), Error);
  EXPECT_THROW(c.put_i32("z", std::vector<std::int32_t>{1, 2}, {3}), Error);
}

TEST(Container, FileRoundTripAndMissingFile) {
  TempDir dir("container");
  Container c;
  c.put_text("t", "abc");
  c.write(dir.path() / "a.wlb");
  EXPECT_EQ(Container::read(dir.path() / "a.wlb").get_text("t"), "abc");
  try {
    Container::read(dir.path() / "missing.wlb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kIo);
  }
}

TEST(SeedRange, ParsesFormsAndRejectsGarbage) {
  EXPECT_EQ(parse_seed_range("0..3"), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(parse_seed_range("5,2,9"), (std::vector<std::uint64_t>{5, 2, 9}));
  EXPECT_EQ(parse_seed_range("42"), (std::vector<std::uint64_t>{42}));
  EXPECT_THROW(parse_seed_range("3..1"), Error);
  EXPECT_THROW(parse_seed_range("a..b"), Error);
  EXPECT_THROW(parse_seed_range(""), Error);
}

TEST(FileNames, ZeroPadded) {
  EXPECT_EQ(scene_file_name(42), "scene_000042.wlb");
  EXPECT_EQ(labels_file_name(7), "labels_000007.wlb");
  EXPECT_EQ(superpixel_file_name(0), "spx_000000.wlb");
}

TEST(Manifest, TextRoundTripAndHashes) {
  TempDir dir("manifest");
  write_text_file(dir.path() / "a.txt", "alpha");
  std::filesystem::create_directories(dir.path() / "sub");
  write_text_file(dir.path() / "sub" / "b.txt", "beta");
  RunManifest m;
  m.command = "synth";
  m.config_hash = hex64(fnv1a64("cfg"));
  m.seeds = {0, 1, 2};
  m.parameters["out"] = "x";
  write_manifest(dir.path(), m);
  const RunManifest r = read_manifest(dir.path());
  EXPECT_EQ(r.command, "synth");
  EXPECT_EQ(r.seeds, m.seeds);
  EXPECT_EQ(r.parameters, m.parameters);
  ASSERT_EQ(r.artifacts.size(), 2u);
  EXPECT_EQ(r.artifacts.at("a.txt"), hex64(fnv1a64("alpha")));
  EXPECT_EQ(RunManifest::parse(r.to_text()).to_text(), r.to_text());
  EXPECT_EQ(hash_artifacts(dir.path()), r.artifacts);
}

TEST(Manifest, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

}  // namespace
}  // namespace weaklab
