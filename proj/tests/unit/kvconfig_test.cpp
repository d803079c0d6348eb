#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <limits>

#include "weaklab/error.hpp"
#include "weaklab/kvconfig.hpp"

namespace weaklab {
namespace {

TEST(KeyValueConfig, ParsesCommentsAndOverrides) {
  const auto kv = KeyValueConfig::parse("# comment\n a = 1 \nb=two words\n\na = 3\n");
  EXPECT_EQ(kv.get_int("a", 0), 3);
  EXPECT_EQ(kv.get_string("b", ""), "two words");
  EXPECT_FALSE(kv.contains("c"));
  EXPECT_EQ(kv.get_double("c", 2.5), 2.5);
}

TEST(KeyValueConfig, TypedGettersRejectBadValues) {
  const auto kv = KeyValueConfig::parse("x = 1.5abc\nn = 3.0\nb = maybe\nv = 1, 2,x\n");
  for (auto f : {+[](const KeyValueConfig& k) { k.get_double("x", 0); },
                 +[](const KeyValueConfig& k) { k.get_int("n", 0); },
                 +[](const KeyValueConfig& k) { k.get_bool("b", false); },
                 +[](const KeyValueConfig& k) { k.get_doubles("v", {}); }}) {
    try {
      f(kv);
      FAIL() << "expected a config error";
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::kConfig);
    }
  }
}

TEST(KeyValueConfig, MissingEqualsIsConfigError) {
  EXPECT_THROW(KeyValueConfig::parse("just words\n"), Error);
}

TEST(KeyValueConfig, DoublesAndBools) {
  const auto kv = KeyValueConfig::parse("v = 0.5, 1,2e-3\nt = yes\nf = off\n");
  EXPECT_EQ(kv.get_doubles("v", {}), (std::vector<double>{0.5, 1.0, 2e-3}));
  EXPECT_TRUE(kv.get_bool("t", false));
  EXPECT_FALSE(kv.get_bool("f", true));
}

TEST(KeyValueConfig, CanonicalTextRoundTrips) {
  const auto kv = KeyValueConfig::parse("b = 2\na = 1\n");
  EXPECT_EQ(kv.to_string(), "a = 1\nb = 2\n");
  EXPECT_EQ(KeyValueConfig::parse(kv.to_string()).values(), kv.values());
}

TEST(KeyValueConfig, SubsetAndMerge) {
  const auto kv = KeyValueConfig::parse("train.lr = 0.1\ntrain.epochs = 3\ntrainer = x\nem.delta = 0.2\n");
  const auto t = kv.subset("train.");
  EXPECT_EQ(t.values().size(), 2u);
  EXPECT_EQ(t.get_double("lr", 0), 0.1);
  KeyValueConfig out;
  out.merge(t, "m.");
  EXPECT_EQ(out.get_int("m.epochs", 0), 3);
}

TEST(FormatNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -0.0, 5e-324, std::numeric_limits<double>::max()}) {
    const std::string s = format_number(v);
    double back = 1.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(r.ec, std::errc()) << s;
    EXPECT_EQ(back, v) << s;
    EXPECT_EQ(std::signbit(back), std::signbit(v)) << s;
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(3.0), "3");
}

TEST(ErrorCategory, NamesAndExitCodes) {
  EXPECT_EQ(category_name(ErrorCategory::kConfig), "config");
  EXPECT_EQ(exit_code(ErrorCategory::kConfig), 2);
  EXPECT_EQ(category_name(ErrorCategory::kConflict), "conflict");
  EXPECT_EQ(exit_code(ErrorCategory::kConflict), 7);
  EXPECT_EQ(category_name(ErrorCategory::kNotFound), "not_found");
  EXPECT_EQ(exit_code(ErrorCategory::kDivergence), 6);
}

}  // namespace
}  // namespace weaklab
