#include <gtest/gtest.h>

#include "cli_support.hpp"
#include "pipeline.hpp"
#include "weaklab/activelabel.hpp"
#include "weaklab/annotate_service.hpp"
#include "weaklab/error.hpp"
#include "weaklab/io.hpp"
#include "weaklab/manifest.hpp"
#include "weaklab/trainer.hpp"

namespace weaklab {
namespace {

namespace fs = std::filesystem;
using testing::cli;
using testing::read_file;

// One synthetic dataset (seeds 0..4: four training scenes, one validation
// scene) shared by the tests that only read it.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    config_ = testing::write_config(dir_->path(), testing::small_pipeline_config());
    ASSERT_EQ(cli({"synth", "--config", cfg(), "--seeds", "0..4", "--out", path("scenes")}).code, 0);
    ASSERT_EQ(cli({"label", "--config", cfg(), "--scenes", path("scenes"), "--out", path("labels")}).code, 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& name) { return (dir_->path() / name).string(); }
  static std::string cfg() { return config_.string(); }

  static testing::TempDir* dir_;
  static fs::path config_;
};

testing::TempDir* Pipeline::dir_ = nullptr;
fs::path Pipeline::config_;

TEST(Cli, MissingConfigFileIsConfigError) {
  testing::TempDir tmp("cli_missing");
  const auto r = cli({"synth", "--config", (tmp.path() / "absent.cfg").string(), "--out", tmp.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error: config"), std::string::npos) << r.err;
}

TEST(Cli, UnknownOptionAndMissingSubcommandAreConfigErrors) {
  EXPECT_EQ(cli({"synth", "--bogus"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
}

TEST(Cli, BadSeedRangeIsConfigError) {
  testing::TempDir tmp("cli_seeds");
  const auto config = testing::write_config(tmp.path(), testing::small_pipeline_config());
  const auto r = cli({"synth", "--config", config.string(), "--seeds", "9..2", "--out", tmp.path().string()});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST(Cli, MissingSceneDirectoryReportsData) {
  testing::TempDir tmp("cli_empty");
  const auto config = testing::write_config(tmp.path(), testing::small_pipeline_config());
  const auto r = cli({"label", "--config", config.string(), "--scenes", tmp.path().string(), "--out",
                      (tmp.path() / "labels").string()});
  EXPECT_EQ(r.code, 5) << r.err;
}

TEST(Cli, CorruptSceneIsFormatError) {
  testing::TempDir tmp("cli_corrupt");
  const auto config = testing::write_config(tmp.path(), testing::small_pipeline_config());
  fs::create_directories(tmp.path() / "scenes");
  std::ofstream(tmp.path() / "scenes" / scene_file_name(0)) << "not a container";
  const auto r = cli({"label", "--config", config.string(), "--scenes", (tmp.path() / "scenes").string(), "--out",
                      (tmp.path() / "labels").string()});
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST_F(Pipeline, SynthWritesScenesAndManifest) {
  EXPECT_EQ(list_scene_seeds(path("scenes")), (std::vector<std::uint64_t>{0, 1, 2, 3, 4}));
  const RunManifest m = read_manifest(path("scenes"));
  EXPECT_EQ(m.command, "synth");
  EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(m.artifacts, hash_artifacts(path("scenes")));
}

TEST_F(Pipeline, SynthIsByteIdentical) {
  testing::TempDir tmp("cli_synth_again");
  ASSERT_EQ(cli({"synth", "--config", cfg(), "--seeds", "0..4", "--out", tmp.path().string()}).code, 0);
  for (const auto& e : fs::directory_iterator(path("scenes"))) {
    EXPECT_EQ(read_file(e.path()), read_file(tmp.path() / e.path().filename())) << e.path().filename();
  }
}

TEST_F(Pipeline, OracleLabelsMatchSimulation) {
  const ActiveLabelConfig alc = cli::active_label_config(testing::small_pipeline_config().subset("label."));
  for (std::uint64_t seed : list_scene_seeds(path("scenes"))) {
    const SceneFrame f = read_scene(fs::path(path("scenes")) / scene_file_name(seed));
    const auto a = cli::read_label_artifact(fs::path(path("labels")) / labels_file_name(seed));
    const AnnotationUnits units = build_annotation_units(f.points, alc, seed);
    EXPECT_EQ(a.units.clustering.cluster_id, units.clustering.cluster_id);
    EXPECT_EQ(a.labels, simulate_annotation(units.clustering, f.points, f.gt_class, f.num_classes));
  }
  EXPECT_NE(read_file(fs::path(path("labels")) / "statistics.txt").find("definite_accuracy 1.000000"),
            std::string::npos);
}

TEST_F(Pipeline, OracleRequestsThroughSessionReproduceSimulation) {
  testing::TempDir tmp("cli_none");
  ASSERT_EQ(cli({"label", "--config", cfg(), "--scenes", path("scenes"), "--out", tmp.path().string(),
                 "--annotator", "none"})
                .code,
            0);
  for (std::uint64_t seed : list_scene_seeds(path("scenes"))) {
    const SceneFrame f = read_scene(fs::path(path("scenes")) / scene_file_name(seed));
    auto a = cli::read_label_artifact(tmp.path() / labels_file_name(seed));
    EXPECT_TRUE(a.labels.sparse.empty() && a.labels.propagated.empty() && a.labels.negative.empty());
    AnnotationSession session(std::to_string(seed), f.points, a.units.clustering, a.labels, a.units.ground_unit);
    for (const auto& req : cli::oracle_requests(a.units, f.points, f.gt_class, f.num_classes)) session.apply(req);
    EXPECT_EQ(session.labels(), simulate_annotation(a.units.clustering, f.points, f.gt_class, f.num_classes));
  }
}

TEST_F(Pipeline, TrainRectifyEvalProduceConsistentArtifacts) {
  testing::TempDir tmp("cli_train");
  const std::string train = (tmp.path() / "train").string();
  auto r = cli({"train", "--config", cfg(), "--scenes", path("scenes"), "--labels", path("labels"), "--out", train});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"model.wlb", "metrics.jsonl", "eval.txt", "train_config.txt", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(fs::path(train) / name)) << name;
  }
  EXPECT_EQ(read_manifest(train).artifacts, hash_artifacts(train));

  const std::string rect = (tmp.path() / "rectify").string();
  r = cli({"rectify", "--config", cfg(), "--scenes", path("scenes"), "--labels", path("labels"), "--model",
           train + "/model.wlb", "--out", rect, "--iteration", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("method act-fsf"), std::string::npos);
  // Iteration 0 only relabels negative points, so every pseudo label is one of its permitted classes.
  for (std::uint64_t seed : {0, 1, 2, 3}) {
    const auto before = cli::read_label_artifact(fs::path(path("labels")) / labels_file_name(seed)).labels;
    const auto after = cli::read_label_artifact(fs::path(rect) / labels_file_name(seed)).labels;
    EXPECT_EQ(after.sparse, before.sparse);
    EXPECT_EQ(after.propagated, before.propagated);
    for (const auto& [p, pl] : after.pseudo) {
      ASSERT_TRUE(before.negative.contains(p));
      EXPECT_TRUE(mask_has(before.negative.at(p), pl.cls));
    }
  }

  r = cli({"rectify", "--config", cfg(), "--scenes", path("scenes"), "--labels", path("labels"), "--model",
           train + "/model.wlb", "--out", (tmp.path() / "fix").string(), "--method", "fix:0.9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("method fix:0.9"), std::string::npos);

  const std::string eval = (tmp.path() / "eval").string();
  r = cli({"eval", "--config", cfg(), "--scenes", path("scenes"), "--model", train + "/model.wlb", "--out", eval});
  ASSERT_EQ(r.code, 0) << r.err;
  // The validation report of `train` and `eval --split val` agree.
  const std::string train_eval = read_file(fs::path(train) / "eval.txt");
  EXPECT_NE(read_file(fs::path(eval) / "eval.txt").find(train_eval), std::string::npos);
}

TEST_F(Pipeline, EmWritesHistoryAndLabels) {
  testing::TempDir tmp("cli_em");
  const std::string out = (tmp.path() / "em").string();
  const auto r = cli({"em", "--config", cfg(), "--scenes", path("scenes"), "--labels", path("labels"), "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string history = read_file(fs::path(out) / "history.txt");
  EXPECT_EQ(history.rfind("0 ", 0), 0u) << history;
  for (std::uint64_t seed : {0, 1, 2, 3}) EXPECT_TRUE(fs::exists(fs::path(out) / labels_file_name(seed)));
  EXPECT_FALSE(fs::exists(fs::path(out) / labels_file_name(4)));
  const RunManifest m = read_manifest(out);
  EXPECT_EQ(m.command, "em");
  EXPECT_EQ(m.parameters.at("model.projection_dim"), "8");
}

TEST_F(Pipeline, DivergenceExitsWithSixAndKeepsModel) {
  testing::TempDir tmp("cli_div");
  const auto r = cli({"train", "--config", cfg(), "--scenes", path("scenes"), "--labels", path("labels"), "--out",
                      tmp.path().string(), "--lr", "1e200"});
  EXPECT_EQ(r.code, 6) << r.err;
  EXPECT_NE(r.err.find("error: divergence"), std::string::npos);
  EXPECT_TRUE(fs::exists(tmp.path() / "model.diverged.wlb"));
}

TEST_F(Pipeline, EvalRejectsUnknownSplit) {
  testing::TempDir tmp("cli_split");
  const auto r = cli({"eval", "--config", cfg(), "--scenes", path("scenes"), "--model",
                      (tmp.path() / "none.wlb").string(), "--split", "test"});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST_F(Pipeline, SuperpixelCommandMatchesOnTheFlyFeatures) {
  testing::TempDir tmp("cli_spx");
  const std::string spx = (tmp.path() / "spx").string();
  ASSERT_EQ(cli({"superpixel", "--config", cfg(), "--scenes", path("scenes"), "--out", spx}).code, 0);
  const std::string a = (tmp.path() / "a").string(), b = (tmp.path() / "b").string();
  ASSERT_EQ(cli({"train", "--config", cfg(), "--scenes", path("scenes"), "--labels", path("labels"), "--out", a}).code,
            0);
  ASSERT_EQ(cli({"train", "--config", cfg(), "--scenes", path("scenes"), "--labels", path("labels"),
                 "--superpixels", spx, "--out", b})
                .code,
            0);
  EXPECT_EQ(read_file(fs::path(a) / "model.wlb"), read_file(fs::path(b) / "model.wlb"));
}

}  // namespace
}  // namespace weaklab
