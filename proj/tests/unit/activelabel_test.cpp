#include <gtest/gtest.h>

#include <numbers>

#include "test_support.hpp"
#include "weaklab/activelabel.hpp"
#include "weaklab/error.hpp"
#include "weaklab/synth.hpp"

namespace weaklab {
namespace {

PointMatrix noisy_plane(Rng& rng, int n, double extent, double sigma) {
  PointMatrix p(n, 3);
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform(2, extent), a = rng.uniform(0, 2 * std::numbers::pi);
    p.row(i) << r * std::cos(a), r * std::sin(a), rng.normal(0, sigma);
  }
  return p;
}

IndexList all_indices(int n) {
  IndexList m(n);
  for (int i = 0; i < n; ++i) m[i] = i;
  return m;
}

TEST(Pillars, EveryPointInExactlyOneBin) {
  Rng rng(1);
  const PointMatrix p = noisy_plane(rng, 2000, 30, 0.5);
  const PillarPartition part = partition_pillars(p, {8, 24, 0.0});
  ASSERT_EQ(part.assignment.size(), 2000u);
  for (int i = 0; i < 2000; ++i) {
    const int a = part.assignment[i];
    ASSERT_GE(a, 0);
    ASSERT_LT(a, part.num_pillars());
    const double r = std::hypot(p(i, 0), p(i, 1));
    double ang = std::atan2(p(i, 1), p(i, 0));
    if (ang < 0) ang += 2 * std::numbers::pi;
    const int rb = std::min(static_cast<int>(r / part.max_range * 8), 7);
    const int ab = std::min(static_cast<int>(ang / (2 * std::numbers::pi) * 24), 23);
    EXPECT_EQ(a, rb * 24 + ab);
  }
}

TEST(Ransac, PerfectPlaneIsAllGround) {
  Rng rng(2);
  const PointMatrix p = noisy_plane(rng, 3000, 30, 0.0);
  RansacConfig cfg;
  cfg.inlier_threshold = 0.05;
  const auto ground = detect_ground(p, {}, cfg, 7);
  for (bool g : ground) EXPECT_TRUE(g);
  const auto plane = fit_ground_plane(p, all_indices(3000), cfg, 1);
  ASSERT_TRUE(plane);
  EXPECT_NEAR(plane->normal.z(), 1.0, 1e-12);
  EXPECT_NEAR(plane->offset, 0.0, 1e-12);
}

TEST(Ransac, NoisyPlaneWithBoxRecoversPlaneOnly) {
  Rng rng(3);
  const int n_plane = 4000, n_box = 800;
  PointMatrix p(n_plane + n_box, 3);
  p.topRows(n_plane) = noisy_plane(rng, n_plane, 30, 0.02);
  for (int i = 0; i < n_box; ++i) {
    p.row(n_plane + i) << rng.uniform(8, 10), rng.uniform(-1, 1), rng.uniform(0.5, 2.0);
  }
  const auto ground = detect_ground(p, {}, {}, 11);
  int recovered = 0, box_ground = 0;
  for (int i = 0; i < n_plane; ++i) recovered += ground[i] ? 1 : 0;
  for (int i = n_plane; i < n_plane + n_box; ++i) box_ground += ground[i] ? 1 : 0;
  EXPECT_GE(recovered, 0.99 * n_plane);
  EXPECT_EQ(box_ground, 0);
}

TEST(Ransac, VerticalWallIsNeverGround) {
  Rng rng(4);
  PointMatrix p(1000, 3);
  for (int i = 0; i < 1000; ++i) p.row(i) << 10 + rng.normal(0, 0.01), rng.uniform(-5, 5), rng.uniform(0, 4);
  const auto ground = detect_ground(p, {}, {}, 3);
  for (bool g : ground) EXPECT_FALSE(g);
  EXPECT_FALSE(fit_ground_plane(p, all_indices(1000), {}, 3).has_value() &&
               fit_ground_plane(p, all_indices(1000), {}, 3)->normal.z() > std::cos(15 * std::numbers::pi / 180));
}

TEST(Ransac, TooFewPointsGiveNoPlane) {
  PointMatrix p(2, 3);
  p << 0, 0, 0, 1, 0, 0;
  EXPECT_FALSE(fit_ground_plane(p, {0, 1}, {}, 0));
}

TEST(Ransac, DeterministicInSeed) {
  const SceneFrame f = generate_scene(SceneConfig::defaults(), 8);
  EXPECT_EQ(detect_ground(f.points, {}, {}, 5), detect_ground(f.points, {}, {}, 5));
}

TEST(Medoid, MinimizesSummedDistanceWithLowIndexTies) {
  PointMatrix p(4, 3);
  p << 0, 0, 0, 1, 0, 0, 2, 0, 0, 10, 0, 0;
  EXPECT_EQ(medoid(p, {0, 1, 2, 3}), 1);
  EXPECT_EQ(medoid(p, {0, 2}), 0);
  EXPECT_EQ(medoid(p, {3}), 3);
}

PointMatrix line_points(int n) {
  PointMatrix p(n, 3);
  for (int i = 0; i < n; ++i) p.row(i) << i * 0.1, 0, 0;
  return p;
}

TEST(SimulateAnnotation, PureClusterGivesOneClickAndPropagation) {
  const int n = 50;
  Clustering units{std::vector<int>(n, 0), 1};
  const LabelSet l = simulate_annotation(units, line_points(n), std::vector<int>(n, 1), 3);
  EXPECT_EQ(l.sparse.size(), 1u);
  EXPECT_EQ(l.propagated.size(), 49u);
  EXPECT_TRUE(l.negative.empty());
  for (const auto& [p, c] : l.propagated) EXPECT_EQ(c, 1);
  l.validate();
}

TEST(SimulateAnnotation, MixedClusterGivesClickPerClassAndNegatives) {
  const int n = 50;
  std::vector<int> gt(n, 1);
  for (int i = 30; i < n; ++i) gt[i] = 0;
  Clustering units{std::vector<int>(n, 0), 1};
  const LabelSet l = simulate_annotation(units, line_points(n), gt, 3);
  ASSERT_EQ(l.sparse.size(), 2u);
  EXPECT_EQ(l.negative.size(), 48u);
  EXPECT_TRUE(l.propagated.empty());
  for (const auto& [p, m] : l.negative) EXPECT_EQ(m, class_bit(0) | class_bit(1));
  std::vector<int> clicked;
  for (const auto& [p, c] : l.sparse) {
    EXPECT_EQ(gt[p], c);
    clicked.push_back(c);
  }
  EXPECT_EQ(clicked, (std::vector<int>{1, 0}));  // class medoids at indices 14/15 and 39/40
}

TEST(SimulateAnnotation, NoisePointsStayUnlabelled) {
  Clustering units{{0, 0, -1, 0}, 1};
  const LabelSet l = simulate_annotation(units, line_points(4), {2, 2, 1, 2}, 3);
  EXPECT_TRUE(l.is_unlabeled(2));
}

TEST(LabelStatistics, RatesAndExtremes) {
  const int n = 40;
  Clustering pure{std::vector<int>(n), 4};
  for (int i = 0; i < n; ++i) pure.cluster_id[i] = i / 10;
  std::vector<int> gt(n);
  for (int i = 0; i < n; ++i) gt[i] = i / 10 % 3;
  const auto s0 = label_statistics({simulate_annotation(pure, line_points(n), gt, 3)});
  EXPECT_EQ(s0.negative_rate(), 0.0);
  EXPECT_EQ(s0.sparse, 4);

  Clustering whole{std::vector<int>(n, 0), 1};
  std::vector<int> two(n, 0);
  two[5] = 1;
  two[6] = 1;
  const auto s1 = label_statistics({simulate_annotation(whole, line_points(n), two, 3)});
  EXPECT_DOUBLE_EQ(s1.sparse_rate(), 2.0 / n);
  EXPECT_DOUBLE_EQ(s1.negative_rate(), (n - 2.0) / n);
  EXPECT_DOUBLE_EQ(s1.coverage(), 1.0);
}

TEST(LabelStatistics, MatchesDirectCountingOnSyntheticScenes) {
  SceneConfig cfg = SceneConfig::defaults();
  cfg.ground_points = 2000;
  cfg.num_cameras = 1;
  cfg.image_width = 8;
  cfg.image_height = 8;
  std::vector<LabelSet> sets;
  long long sparse = 0, prop = 0, neg = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SceneFrame f = generate_scene(cfg, seed);
    const AnnotationUnits units = build_annotation_units(f.points, {}, seed);
    const LabelSet l = simulate_annotation(units.clustering, f.points, f.gt_class, f.num_classes);
    l.validate();
    for (int i = 0; i < f.num_points(); ++i) {
      const LabelKind k = l.kind(i);
      sparse += k == LabelKind::kSparse;
      prop += k == LabelKind::kPropagated;
      neg += k == LabelKind::kNegative;
      if (l.definite(i) >= 0) EXPECT_EQ(l.definite(i), f.gt_class[i]);
    }
    total += f.num_points();
    sets.push_back(l);
  }
  const auto s = label_statistics(sets);
  EXPECT_EQ(s.total_points, total);
  EXPECT_EQ(s.sparse, sparse);
  EXPECT_EQ(s.propagated, prop);
  EXPECT_EQ(s.negative, neg);
}

TEST(AnnotationUnits, GroundFormsOneUnit) {
  const SceneFrame f = generate_scene(SceneConfig::defaults(), 6);
  const AnnotationUnits u = build_annotation_units(f.points, {}, 6);
  ASSERT_GE(u.ground_unit, 0);
  for (int i = 0; i < f.num_points(); ++i) {
    if (u.ground_mask[i]) EXPECT_EQ(u.clustering.cluster_id[i], u.ground_unit);
    else EXPECT_NE(u.clustering.cluster_id[i], u.ground_unit);
  }
  ActiveLabelConfig no_unit;
  no_unit.ground_as_unit = false;
  const AnnotationUnits v = build_annotation_units(f.points, no_unit, 6);
  EXPECT_EQ(v.ground_unit, -1);
}

}  // namespace
}  // namespace weaklab
