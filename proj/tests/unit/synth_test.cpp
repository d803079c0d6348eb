#include <gtest/gtest.h>

#include <cstring>

#include "weaklab/container.hpp"
#include "weaklab/error.hpp"
#include "weaklab/io.hpp"
#include "weaklab/synth.hpp"

namespace weaklab {
namespace {

SceneConfig small_config() {
  SceneConfig cfg = SceneConfig::defaults();
  cfg.ground_points = 1500;
  cfg.image_width = 96;
  cfg.image_height = 48;
  return cfg;
}

TEST(Synth, RegenerationIsBitIdentical) {
  const SceneConfig cfg = small_config();
  Container a, b;
  put_scene(a, generate_scene(cfg, 17));
  put_scene(b, generate_scene(cfg, 17));
  EXPECT_EQ(a.serialize(), b.serialize());
  Container c;
  put_scene(c, generate_scene(cfg, 18));
  EXPECT_NE(a.serialize(), c.serialize());
}

TEST(Synth, NoiselessFlatGroundIsExactlyZero) {
  SceneConfig cfg = small_config();
  cfg.noise_sigma = 0;
  cfg.max_tilt_deg = 0;
  const SceneFrame f = generate_scene(cfg, 4);
  int ground = 0;
  for (int i = 0; i < f.num_points(); ++i) {
    if (f.gt_class[i] != 0) continue;
    ++ground;
    EXPECT_EQ(f.points(i, 2), 0.0);
  }
  EXPECT_EQ(ground, cfg.ground_points);
}

TEST(Synth, ClassCountsFollowConfig) {
  SceneConfig cfg = small_config();
  cfg.classes[1].objects = 2;
  cfg.classes[1].points_per_object = 100;
  const SceneFrame f = generate_scene(cfg, 9);
  std::vector<int> counts(cfg.num_classes());
  for (int c : f.gt_class) ++counts[c];
  EXPECT_EQ(counts[1], 200);
  for (int c = 0; c < cfg.num_classes(); ++c) EXPECT_EQ(counts[c], cfg.class_count(c));
  EXPECT_EQ(f.num_points(), cfg.total_points());
  EXPECT_EQ(f.images.size(), static_cast<std::size_t>(cfg.num_cameras));
  for (const auto& img : f.images) EXPECT_TRUE(img.rgb.allFinite());
}

TEST(Synth, ConfigKvRoundTripAndValidation) {
  const SceneConfig cfg = small_config();
  const SceneConfig back = SceneConfig::from_kv(cfg.to_kv());
  EXPECT_EQ(back.to_kv().to_string(), cfg.to_kv().to_string());
  SceneConfig bad = cfg;
  bad.noise_sigma = -1;
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.classes.resize(2);
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Render, EmptySceneIsBackground) {
  SceneConfig cfg = small_config();
  cfg.texture_sigma = 0;
  SceneGeometry g;
  g.has_ground = false;
  const CameraModel cam = make_ring_camera(0, {0, 0, 1.8}, 40, 64, 32);
  const Image img = render_image(g, cam, cfg, 1);
  for (int i = 0; i < 64 * 32; ++i) {
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(img.rgb(i, c), cfg.background_color[c], 0.5 / 255.0 + 1e-12);
  }
}

TEST(Render, BoxFillingFrustumIsInItsColourBand) {
  const SceneConfig cfg = small_config();
  SceneGeometry g;
  g.has_ground = false;
  Primitive box;
  box.cls = 1;
  box.center = Eigen::Vector3d(3, 0, 1.8);
  box.half_extent = Eigen::Vector3d(0.5, 20, 20);
  box.color = cfg.classes[1].color;
  g.objects.push_back(box);
  const CameraModel cam = make_ring_camera(0, {0, 0, 1.8}, 40, 64, 32);
  const Image img = render_image(g, cam, cfg, 2);
  int in_band = 0;
  for (int i = 0; i < 64 * 32; ++i) in_band += color_band_class(cfg, img.rgb.row(i).transpose()) == 1 ? 1 : 0;
  EXPECT_GE(in_band, 0.9 * 64 * 32);
}

TEST(Render, CameraLookingAwayIsBackground) {
  SceneConfig cfg = small_config();
  cfg.texture_sigma = 0;
  SceneGeometry g;
  g.has_ground = false;
  Primitive box;
  box.center = Eigen::Vector3d(5, 0, 1.8);
  box.color = Eigen::Vector3d(1, 0, 0);
  g.objects.push_back(box);
  const CameraModel cam = make_ring_camera(3.14159, {0, 0, 1.8}, 40, 64, 32);
  const Image img = render_image(g, cam, cfg, 3);
  for (int i = 0; i < 64 * 32; ++i) EXPECT_NEAR(img.rgb(i, 0), cfg.background_color[0], 0.5 / 255.0 + 1e-12);
}

TEST(Synth, CastRayHitsGroundAnalytically) {
  SceneGeometry g;
  g.slope_x = 0.1;
  const Eigen::Vector3d o(0, 0, 2), d = Eigen::Vector3d(1, 0, -1).normalized();
  const auto hit = cast_ray(g, o, d);
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->primitive, -1);
  const Eigen::Vector3d p = o + hit->t * d;
  EXPECT_NEAR(p.z(), g.ground_z(p.x(), p.y()), 1e-9);
}

TEST(Synth, SceneFileRoundTrip) {
  const SceneFrame f = generate_scene(small_config(), 2);
  Container c;
  put_scene(c, f);
  const SceneFrame g = get_scene(Container::deserialize(c.serialize()));
  EXPECT_EQ(g.seed, f.seed);
  EXPECT_EQ(g.points, f.points);
  EXPECT_EQ(g.gt_class, f.gt_class);
  EXPECT_EQ(g.class_names, f.class_names);
  ASSERT_EQ(g.images.size(), f.images.size());
  EXPECT_EQ(g.images[0].rgb, f.images[0].rgb);
  EXPECT_EQ(g.cameras[1].rotation, f.cameras[1].rotation);
}

}  // namespace
}  // namespace weaklab
