#include <gtest/gtest.h>

#include <functional>

#include "weaklab/annotate_service.hpp"
#include "weaklab/error.hpp"

namespace weaklab {
namespace {

// Cluster 0: points 0..49 (pure), cluster 1: points 50..99, cluster 2: empty.
AnnotationSession make_session() {
  const int n = 100;
  PointMatrix p(n, 3);
  Clustering units{std::vector<int>(n), 3};
  for (int i = 0; i < n; ++i) {
    p.row(i) << (i % 50) * 0.1, i < 50 ? 0.0 : 5.0, 0.0;
    units.cluster_id[i] = i < 50 ? 0 : 1;
  }
  LabelSet labels;
  labels.num_points = n;
  labels.num_classes = 4;
  return AnnotationSession("scene_000000", p, units, labels, 1);
}

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCategory::kIo;
}

TEST(AnnotationSession, PureClusterPropagates) {
  AnnotationSession s = make_session();
  const ApplyResult r = s.apply({0, AnnotationMode::kPure, {{1, std::nullopt}}, std::nullopt});
  EXPECT_EQ(r.sparse, 1);
  EXPECT_EQ(r.propagated, 49);
  EXPECT_EQ(r.negative, 0);
  EXPECT_EQ(s.labels().sparse.size(), 1u);
  EXPECT_EQ(s.labels().propagated.size(), 49u);
  EXPECT_EQ(s.labels().sparse.begin()->first, 24);  // medoid of 50 evenly spaced points, lower index on ties
  EXPECT_TRUE(s.finalized(0));
  EXPECT_FALSE(s.finalized(1));
}

TEST(AnnotationSession, MixedClusterGivesSparsePerClassAndNegatives) {
  AnnotationSession s = make_session();
  const ApplyResult r = s.apply({1, AnnotationMode::kMixed, {{1, 60}, {0, 90}}, std::nullopt});
  EXPECT_EQ(r.sparse, 2);
  EXPECT_EQ(r.negative, 48);
  EXPECT_EQ(s.labels().sparse.at(60), 1);
  EXPECT_EQ(s.labels().sparse.at(90), 0);
  for (const auto& [p, m] : s.labels().negative) EXPECT_EQ(m, class_bit(0) | class_bit(1));
}

TEST(AnnotationSession, FinalizedClusterConflicts) {
  AnnotationSession s = make_session();
  s.apply({0, AnnotationMode::kPure, {{1, std::nullopt}}, std::nullopt});
  const LabelSet before = s.labels();
  EXPECT_EQ(category_of([&] { s.apply({0, AnnotationMode::kPure, {{2, std::nullopt}}, std::nullopt}); }),
            ErrorCategory::kConflict);
  EXPECT_EQ(s.labels(), before);
}

TEST(AnnotationSession, MalformedRequestsLeaveLabelsUntouched) {
  AnnotationSession s = make_session();
  const LabelSet before = s.labels();
  const std::vector<LabelRequest> bad = {
      {0, AnnotationMode::kPure, {{7, std::nullopt}}, std::nullopt},              // class out of range
      {0, AnnotationMode::kPure, {{1, 70}}, std::nullopt},                         // point outside cluster
      {0, AnnotationMode::kPure, {{1, 3}, {2, 4}}, std::nullopt},                  // two pure assignments
      {1, AnnotationMode::kMixed, {{1, 60}}, std::nullopt},                        // one class only
      {1, AnnotationMode::kMixed, {{1, 60}, {1, 61}}, std::nullopt},               // repeated class
      {1, AnnotationMode::kMixed, {{1, 60}, {2, std::nullopt}}, std::nullopt},     // missing pick
  };
  for (const auto& req : bad) {
    EXPECT_EQ(category_of([&] { s.apply(req); }), ErrorCategory::kData);
    EXPECT_EQ(s.labels(), before);
  }
  EXPECT_EQ(category_of([&] { s.apply({9, AnnotationMode::kPure, {{1, std::nullopt}}, std::nullopt}); }),
            ErrorCategory::kNotFound);
}

TEST(AnnotationSession, RequestIdReplays) {
  AnnotationSession s = make_session();
  const ApplyResult a = s.apply({0, AnnotationMode::kPure, {{1, std::nullopt}}, "r1"});
  const ApplyResult b = s.apply({0, AnnotationMode::kPure, {{1, std::nullopt}}, "r1"});
  EXPECT_FALSE(a.replayed);
  EXPECT_TRUE(b.replayed);
  EXPECT_EQ(b.propagated, a.propagated);
}

TEST(AnnotationSession, Summaries) {
  const AnnotationSession s = make_session();
  const auto all = s.summaries();
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].point_count, 50);
  EXPECT_DOUBLE_EQ(all[0].max_x, 4.9);
  EXPECT_DOUBLE_EQ(all[1].min_y, 5.0);
  EXPECT_TRUE(all[1].ground);
  EXPECT_EQ(all[2].point_count, 0);
  EXPECT_EQ(all[0].scatter.size(), 50u);
}

TEST(AnnotationSession, ScatterIsCapped) {
  const int n = 5001;
  PointMatrix p = PointMatrix::Zero(n, 3);
  for (int i = 0; i < n; ++i) p(i, 0) = i;
  LabelSet l;
  l.num_points = n;
  l.num_classes = 3;
  const AnnotationSession s("x", p, Clustering{std::vector<int>(n, 0), 1}, l);
  EXPECT_LE(s.summary(0).scatter.size(), static_cast<std::size_t>(kMaxScatter));
  EXPECT_GE(s.summary(0).scatter.size(), static_cast<std::size_t>(kMaxScatter) / 2);
}

}  // namespace
}  // namespace weaklab
