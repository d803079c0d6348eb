// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "corrupted_suite.hpp"
#include "gradient_suite.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"
#include "weaklab/activelabel.hpp"
#include "weaklab/assoc.hpp"
#include "weaklab/features.hpp"
#include "weaklab/hdbscan.hpp"
#include "weaklab/io.hpp"
#include "weaklab/kvconfig.hpp"
#include "weaklab/metrics.hpp"
#include "weaklab/rectify.hpp"
#include "weaklab/superpixel.hpp"
#include "weaklab/synth.hpp"
#include "weaklab/trainer.hpp"

namespace weaklab {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s %2d %-14s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
}

const KeyValueConfig& bench_config() {
  static const KeyValueConfig kv = KeyValueConfig::load(WEAKLAB_BENCH_CONFIG);
  return kv;
}

// --- 1: analytic gradients vs central differences ---------------------------

void gradients() {
  const auto start = Clock::now();
  const std::pair<const char*, std::function<double(Rng&)>> checks[] = {
      {"walker", testing::check_walker},   {"visit", testing::check_visit},
      {"assoc", testing::check_assoc},     {"gate", testing::check_gate},
      {"ce", testing::check_cross_entropy}, {"lovasz", testing::check_lovasz},
      {"negative", testing::check_negative},
  };
  Rng rng(101);
  double worst = 0;
  std::string worst_name;
  int instances = 0;
  for (const auto& [name, check] : checks) {
    for (int k = 0; k < 20; ++k, ++instances) {
      const double e = check(rng);
      if (!(e <= worst)) {
        worst = e;
        worst_name = name;
      }
    }
  }
  const double t = seconds_since(start);
  report(1, "gradients", worst < 1e-4 && t < 10,
         fmt("max rel err %.2e (%s) over %d instances, %.2f s [< 1e-4, < 10 s]", worst, worst_name.c_str(),
             instances, t));
}

// --- 2: stochastic transitions and walker loss sign --------------------------

void stochasticity() {
  Rng rng(102);
  double worst_row = 0, min_loss = 1e300, max_single = 0;
  for (int b = 0; b < 1000; ++b) {
    const int nl = 1 + static_cast<int>(rng.index(8)), ns = 1 + static_cast<int>(rng.index(8));
    const int d = 1 + static_cast<int>(rng.index(8));
    const Matrix f3 = testing::random_matrix(rng, nl, d, 2.0), f2 = testing::random_matrix(rng, ns, d, 2.0);
    const auto t = transition_matrices(f3, f2);
    const Matrix sim = t.a_lc * t.a_cl;
    for (const Matrix* m : {&t.a_lc, &t.a_cl, &sim}) {
      worst_row = std::max(worst_row, (m->rowwise().sum().array() - 1.0).abs().maxCoeff());
    }
    const auto y = testing::random_labels(rng, nl, 3);
    const double loss = walker_loss(f3, f2, y).loss;
    min_loss = std::min(min_loss, loss);
    if (nl == 1) max_single = std::max(max_single, std::abs(loss));
  }
  report(2, "stochasticity", worst_row <= 1e-9 && min_loss >= 0 && max_single <= 1e-12,
         fmt("max |row sum - 1| %.1e, min walker %.2e, max |walker| at N_l=1 %.1e [1e-9, >= 0, 0]", worst_row,
             min_loss, max_single));
}

// --- 3: class thresholds ----------------------------------------------------

void thresholds() {
  Rng rng(103);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(200)), c = 2 + static_cast<int>(rng.index(8));
    const Matrix p = testing::random_probs(rng, n, c);
    const double delta = rng.uniform(0, 0.3), alpha = rng.uniform(0.2, 0.8);
    exact += adaptive_thresholds(p, {delta, alpha}) == testing::brute_thresholds(p, delta, alpha);
  }
  Matrix example(2, 2);
  example << 0.95, 0.05, 0.45, 0.55;
  const double s0 = adaptive_thresholds(example, {0.1, 0.5})[0];
  report(3, "thresholds", exact == 100 && std::abs(s0 - 0.85) < 1e-12,
         fmt("%d/100 identical to brute force, example gives %.15g [100, 0.85]", exact, s0));
}

// --- 4: ground detection on tilted scenes ------------------------------------

void ground() {
  const auto start = Clock::now();
  KeyValueConfig scene_kv = bench_config().subset("scene.");
  scene_kv.set("max_tilt_deg", "6");
  scene_kv.set("noise_sigma", "0.02");
  const SceneConfig cfg = SceneConfig::from_kv(scene_kv);
  const ActiveLabelConfig ac = cli::active_label_config(bench_config().subset("label."));
  long long ground_total = 0, ground_hit = 0, object_total = 0, object_hit = 0, oracle_vs_gt = 0;
  for (std::uint64_t seed = 1000; seed < 1020; ++seed) {
    const SceneGeometry geo = build_geometry(cfg, seed);
    const SceneFrame f = generate_scene(cfg, seed);
    const auto mask = detect_ground(f.points, ac.pillars, ac.ransac, seed);
    const double norm = std::sqrt(1 + geo.slope_x * geo.slope_x + geo.slope_y * geo.slope_y);
    for (int i = 0; i < f.num_points(); ++i) {
      const double dist = std::abs(f.points(i, 2) - geo.ground_z(f.points(i, 0), f.points(i, 1))) / norm;
      const bool truth = dist <= 5 * cfg.noise_sigma;
      oracle_vs_gt += truth != (f.gt_class[i] == 0);
      if (truth) {
        ++ground_total;
        ground_hit += mask[i];
      } else {
        ++object_total;
        object_hit += mask[i];
      }
    }
  }
  const double recall = static_cast<double>(ground_hit) / ground_total;
  const double fp = static_cast<double>(object_hit) / object_total;
  const double t = seconds_since(start);
  report(4, "ground", recall >= 0.99 && fp <= 0.01 && t < 30,
         fmt("recall %.4f, object false-ground %.4f over 20 scenes, %.1f s, %lld oracle/gt mismatches "
             "[>= 0.99, <= 0.01, < 30 s]",
             recall, fp, t, oracle_vs_gt));
}

// --- 5: HDBSCAN --------------------------------------------------------------

void hdbscan_check() {
  Rng rng(105);
  double worst_ari = 1;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::Vector2d> centres;
    const int k = 2 + static_cast<int>(rng.index(4));
    for (int c = 0; c < k; ++c) centres.emplace_back(12.0 * c, rng.uniform(-3, 3));
    std::vector<int> truth;
    const Matrix x = testing::blobs(rng, centres, 80, 1.0, truth);
    worst_ari = std::min(worst_ari, adjusted_rand_index(hdbscan(x, {10, 5}).cluster_id, truth));
  }
  const auto cases = testing::load_hdbscan_fixture(std::string(WEAKLAB_FIXTURE_DIR) + "/hdbscan_small.txt");
  int exact = 0;
  for (const auto& c : cases) {
    exact += testing::same_partition(hdbscan(c.points, {c.min_cluster_size, c.min_samples}).cluster_id, c.labels);
  }
  report(5, "hdbscan", worst_ari >= 0.99 && exact == static_cast<int>(cases.size()) && !cases.empty(),
         fmt("min blob ARI %.4f over 10 sets, %d/%zu fixture cases exact [>= 0.99, all]", worst_ari, exact,
             cases.size()));
}

// --- 6-8: benchmark scenes, label statistics and the training ladder ----------

struct Benchmark {
  int num_classes = 0;
  std::vector<PreparedScene> train, val;
  std::vector<LabelSet> labels;
  long long definite = 0, definite_wrong = 0;
  double prep_seconds = 0;
};

Benchmark build_benchmark() {
  const auto start = Clock::now();
  const KeyValueConfig& kv = bench_config();
  const SceneConfig scene = SceneConfig::from_kv(kv.subset("scene."));
  const ActiveLabelConfig ac = cli::active_label_config(kv.subset("label."));
  PrepareConfig pc;
  pc.seeds = cli::seeds_config(kv.subset("superpixel."));
  Benchmark b;
  b.num_classes = scene.num_classes();
  for (std::uint64_t seed : parse_seed_range(kv.get_string("bench.seeds", "0..61"))) {
    const SceneFrame f = generate_scene(scene, seed);
    PreparedScene ps = prepare_scene(f, pc);
    if (is_validation_seed(seed)) {
      b.val.push_back(std::move(ps));
      continue;
    }
    const AnnotationUnits units = build_annotation_units(f.points, ac, seed);
    LabelSet ls = simulate_annotation(units.clustering, f.points, f.gt_class, f.num_classes);
    for (int i = 0; i < ls.num_points; ++i) {
      const auto kind = ls.kind(i);
      if (kind != LabelKind::kSparse && kind != LabelKind::kPropagated) continue;
      ++b.definite;
      const int cls = kind == LabelKind::kSparse ? ls.sparse.at(i) : ls.propagated.at(i);
      b.definite_wrong += cls != f.gt_class[i];
    }
    b.train.push_back(std::move(ps));
    b.labels.push_back(std::move(ls));
  }
  b.prep_seconds = seconds_since(start);
  return b;
}

void label_statistics_check(const Benchmark& b) {
  const LabelStatistics st = label_statistics(b.labels);
  const double correct = b.definite ? 1.0 - static_cast<double>(b.definite_wrong) / b.definite : 0.0;
  report(6, "label-stats",
         st.sparse_rate() < 0.01 && st.coverage() > 0.60 && b.definite_wrong == 0 && b.definite > 0,
         fmt("sparse %.3f%%, coverage %.1f%%, sparse+propagated correct %.4f%% of %lld over %zu scenes "
             "[< 1%%, > 60%%, 100%%]",
             100 * st.sparse_rate(), 100 * st.coverage(), 100 * correct, b.definite, b.labels.size()));
}

std::function<void()> ladder(const Benchmark& b) {
  const auto start = Clock::now();
  const KeyValueConfig& kv = bench_config();
  const ModelConfig mc = model_config_from_kv(kv, b.num_classes);
  TrainConfig base = TrainConfig::from_kv(kv);
  const TrainConfig full = base;
  base.asso_weight = 0;
  auto supervised = [&](const TrainConfig& cfg) {
    ClassifierState state(mc);
    m_step(state, b.train, b.labels, cfg, cfg.warmup_epochs, -1);
    return 100 * miou(evaluate(state, b.val)).miou;
  };
  TrainConfig sparse_cfg = base, neg_cfg = base, upper_cfg = base;
  sparse_cfg.use_negative = false;
  sparse_cfg.use_propagated = false;
  neg_cfg.use_propagated = false;
  upper_cfg.full_supervision = true;
  const double sparse = supervised(sparse_cfg);
  const double neg = supervised(neg_cfg);
  const double prop = supervised(base);
  const double upper = supervised(upper_cfg);
  ClassifierState state(mc);
  const EmState em = em_loop(state, b.train, b.labels, b.val, full);
  const double em_miou = em.history.back();
  const double t = seconds_since(start) + b.prep_seconds;
  std::string history;
  for (double h : em.history) history += fmt(" %.2f", h);
  report(7, "ladder",
         sparse < neg && neg < prop && em_miou >= prop + 2.0 && upper - em_miou <= 5.0 && t < 900,
         fmt("sparse %.2f < +neg %.2f < +prop %.2f, EM %.2f (+%.2f), upper %.2f (gap %.2f), %.0f s "
             "[ordered, >= +2.0, <= 5.0, < 900 s]",
             sparse, neg, prop, em_miou, em_miou - prop, upper, upper - em_miou, t));

  return [em, history] {
  bool monotone = em.history.size() >= 3;
  for (std::size_t i = 1; i < std::min<std::size_t>(em.history.size(), 3); ++i) {
    monotone = monotone && em.history[i] >= em.history[i - 1] - 0.3;
  }
  std::string accepted;
  for (const auto& r : em.e_steps) accepted += fmt(" %d/%d", r.correct, r.accepted);
  report(8, "em-history", monotone,
         fmt("validation mIoU%s; correct/accepted per E-step%s [first two iterations non-decreasing within 0.3]",
             history.c_str(), accepted.c_str()));
  };
}

// --- 8: ACT+FSF vs confidence-only filtering ----------------------------------

void estep() {
  long long act_n = 0, act_err = 0, tau_n = 0, tau_err = 0, half_n = 0, half_err = 0;
  int wins = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto s = testing::make_corrupted_suite(200 + seed);
    const auto act = estimate_pseudo_labels(s.probs, s.features, s.bank, s.labels, s.points, RectifyConfig{}, 1, 0.1);
    const auto q_act = pseudo_label_quality(act.accepted_labels(), s.truth);
    const auto pred = argmax_rows(s.probs);
    const double tau = testing::fix_threshold_for_count(s.probs, static_cast<int>(q_act.accepted));
    const auto q_tau = pseudo_label_quality(testing::masked_labels(fix_filter(s.probs, tau), pred), s.truth);
    const auto q_half = pseudo_label_quality(testing::masked_labels(fix_filter(s.probs, 0.5), pred), s.truth);
    wins += q_act.accepted >= q_tau.accepted && q_act.accepted > 0 &&
            *q_act.error_rate() < q_tau.error_rate().value_or(1.0);
    act_n += q_act.accepted;
    act_err += q_act.accepted - q_act.correct;
    tau_n += q_tau.accepted;
    tau_err += q_tau.accepted - q_tau.correct;
    half_n += q_half.accepted;
    half_err += q_half.accepted - q_half.correct;
  }
  auto rate = [](long long e, long long n) { return n ? 100.0 * e / n : 0.0; };
  report(8, "estep-filter", wins == seeds,
         fmt("ACT+FSF error %.2f%% on %lld vs fix(tau*) %.2f%% on %lld; fix(0.5) %.2f%% on %lld; "
             "ACT+FSF better on %d/%d suites with 20%% noise [all]",
             rate(act_err, act_n), act_n, rate(tau_err, tau_n), tau_n, rate(half_err, half_n), half_n, wins, seeds));
}

// --- 9: SEEDS ----------------------------------------------------------------

void seeds() {
  Rng rng(109);
  int valid = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 24 + static_cast<int>(rng.index(60)), h = 16 + static_cast<int>(rng.index(40));
    const Image img = testing::random_image(rng, w, h);
    SeedsConfig cfg;
    cfg.num_superpixels = 4 + static_cast<int>(rng.index(40));
    cfg.num_levels = 1 + static_cast<int>(rng.index(3));
    cfg.iterations = 1 + static_cast<int>(rng.index(5));
    const SuperpixelMap m = seeds_segment(img, cfg);
    bool ok = m.assignment.size() == static_cast<std::size_t>(w) * h && superpixels_connected(m);
    std::vector<int> count(m.num_superpixels, 0);
    for (int a : m.assignment) {
      ok = ok && a >= 0 && a < m.num_superpixels;
      if (ok) ++count[a];
    }
    ok = ok && count == m.pixel_count && std::find(count.begin(), count.end(), 0) == count.end();
    for (std::size_t i = 1; i < m.energy_history.size(); ++i) ok = ok && m.energy_history[i] >= m.energy_history[i - 1];
    ok = ok && std::abs(m.energy_history.back() -
                        seeds_energy(img, m.assignment, m.num_superpixels, cfg.histogram_bins)) < 1e-9;
    valid += ok;
  }
  double worst_recall = 1;
  for (const auto& region : testing::two_region_fixtures()) {
    const Image img = testing::two_region_image(rng, 64, 48, region);
    SeedsConfig cfg;
    cfg.num_superpixels = 2;
    cfg.iterations = 10;
    worst_recall = std::min(worst_recall, testing::boundary_recall(seeds_segment(img, cfg), region, 2));
  }
  report(9, "seeds", valid == 50 && worst_recall >= 0.95,
         fmt("%d/50 images keep partition, connectivity and monotone energy; min boundary recall %.3f "
             "[50, >= 0.95]",
             valid, worst_recall));
}

// --- 10: determinism of the command-line pipeline -----------------------------

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool run_pipeline(const fs::path& root, const fs::path& config, std::string& log) {
  const std::string r = root.string(), c = config.string();
  const std::vector<std::vector<std::string>> steps = {
      {"weaklab", "synth", "--config", c, "--seeds", "0..4", "--out", r + "/scenes"},
      {"weaklab", "label", "--config", c, "--scenes", r + "/scenes", "--out", r + "/labels"},
      {"weaklab", "em", "--config", c, "--scenes", r + "/scenes", "--labels", r + "/labels", "--out", r + "/em"},
      {"weaklab", "eval", "--config", c, "--scenes", r + "/scenes", "--model", r + "/em/model.wlb", "--out",
       r + "/eval"},
  };
  for (const auto& args : steps) {
    std::ostringstream out, err;
    if (cli::run_cli(args, out, err) != 0) {
      log = args[1] + ": " + err.str();
      return false;
    }
  }
  return true;
}

void determinism() {
  testing::TempDir tmp("acceptance_det");
  const fs::path config = tmp.path() / "pipeline.cfg";
  KeyValueConfig kv = bench_config();
  kv.set("train.warmup_epochs", "2");
  kv.set("train.epochs", "1");
  kv.set("em.max_iterations", "2");
  std::ofstream(config) << kv.to_string();
  std::string log;
  bool ok = run_pipeline(tmp.path() / "a", config, log) && run_pipeline(tmp.path() / "b", config, log);
  int files = 0, differ = 0;
  if (ok) {
    for (const auto& e : fs::recursive_directory_iterator(tmp.path() / "a")) {
      if (!e.is_regular_file()) continue;
      ++files;
      const fs::path other = tmp.path() / "b" / fs::relative(e.path(), tmp.path() / "a");
      differ += !fs::exists(other) || read_all(e.path()) != read_all(other);
    }
    for (const auto& e : fs::recursive_directory_iterator(tmp.path() / "b")) {
      if (e.is_regular_file() && !fs::exists(tmp.path() / "a" / fs::relative(e.path(), tmp.path() / "b"))) ++differ;
    }
  }
  report(10, "determinism", ok && files > 0 && differ == 0,
         ok ? fmt("synth -> label -> em -> eval twice: %d files, %d differ [0]", files, differ)
            : "pipeline failed: " + log);
}

}  // namespace
}  // namespace weaklab

int main() {
  using namespace weaklab;
  const auto start = Clock::now();
  gradients();
  stochasticity();
  thresholds();
  ground();
  hdbscan_check();
  const Benchmark b = build_benchmark();
  label_statistics_check(b);
  const auto em_history = ladder(b);
  estep();
  em_history();
  seeds();
  determinism();
  std::printf("%s: %d failing, %.0f s\n", failures ? "FAIL" : "PASS", failures, seconds_since(start));
  return failures ? 1 : 0;
}
