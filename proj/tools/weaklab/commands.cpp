#include <csignal>
#include <cstdio>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "annotate_http.hpp"
#include "app.hpp"
#include "pipeline.hpp"
#include "weaklab/container.hpp"
#include "weaklab/error.hpp"
#include "weaklab/io.hpp"
#include "weaklab/manifest.hpp"
#include "weaklab/metrics.hpp"
#include "weaklab/superpixel.hpp"
#include "weaklab/trainer.hpp"

namespace weaklab::cli {
namespace {

using json = nlohmann::json;

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string config_hash(const KeyValueConfig& kv) { return hex64(fnv1a64(kv.to_string())); }

void prepare_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCategory::kIo, "cannot create directory " + dir.string());
}

RunManifest manifest_for(const std::string& command, const KeyValueConfig& effective,
                         const std::vector<std::uint64_t>& seeds) {
  RunManifest m;
  m.command = command;
  m.config_hash = config_hash(effective);
  m.seeds = seeds;
  m.parameters = effective.values();
  return m;
}

// Options shared by the training commands, each mapped to a TrainConfig key.
struct TrainFlags {
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
  bool hard_pseudo = false, no_propagated = false, no_negative = false, no_lovasz = false, full_supervision = false,
       no_augment = false;

  void add(CLI::App* cmd) {
    const std::pair<const char*, const char*> options[] = {
        {"--lr", "train.lr"},
        {"--momentum", "train.momentum"},
        {"--weight-decay", "train.weight_decay"},
        {"--batch-scenes", "train.batch_scenes"},
        {"--warmup-epochs", "train.warmup_epochs"},
        {"--epochs", "train.epochs"},
        {"--seg-weight", "train.seg_weight"},
        {"--asso-weight", "train.asso_weight"},
        {"--beta-w", "assoc.beta_w"},
        {"--beta-v", "assoc.beta_v"},
        {"--delta", "rectify.delta"},
        {"--alpha", "rectify.alpha"},
        {"--prototype-temperature", "rectify.prototype_temperature"},
        {"--em-max-iterations", "em.max_iterations"},
        {"--tolerance", "em.tolerance"},
        {"--seed", "train.seed"},
    };
    for (const auto& [flag, key] : options) cmd->add_option(flag, values[key], std::string("sets ") + key);
    cmd->add_option("--set", sets, "extra key=value overrides");
    cmd->add_flag("--hard-pseudo", hard_pseudo, "pseudo labels enter with weight 1");
    cmd->add_flag("--no-propagated", no_propagated, "ignore propagated labels");
    cmd->add_flag("--no-negative", no_negative, "ignore negative labels");
    cmd->add_flag("--no-lovasz", no_lovasz, "cross-entropy only");
    cmd->add_flag("--full-supervision", full_supervision, "train on ground truth (upper bound)");
    cmd->add_flag("--no-augment", no_augment, "disable random feature scaling");
  }

  void apply(KeyValueConfig& kv) const {
    for (const auto& [key, value] : values) {
      if (!value.empty()) kv.set(key, value);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      require(eq != std::string::npos && eq > 0, ErrorCategory::kConfig, "--set expects key=value, got '" + s + "'");
      kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (hard_pseudo) kv.set("em.hard_pseudo", "true");
    if (no_propagated) kv.set("ablation.propagated", "false");
    if (no_negative) kv.set("ablation.negative", "false");
    if (no_lovasz) kv.set("ablation.lovasz", "false");
    if (full_supervision) kv.set("ablation.full_supervision", "true");
    if (no_augment) kv.set("train.augment", "false");
  }
};

PrepareConfig prepare_config(const KeyValueConfig& kv) {
  PrepareConfig pc;
  pc.seeds = seeds_config(kv.subset("superpixel."));
  return pc;
}

json step_json(const StepRecord& r) {
  return {{"type", "step"}, {"iteration", r.iteration}, {"step", r.step},         {"lr", r.lr},
          {"ce", r.ce},     {"lovasz", r.lovasz},       {"negative", r.negative}, {"assoc", r.assoc},
          {"total", r.total}};
}

json estep_json(const EStepReport& r) {
  return {{"type", "estep"},         {"iteration", r.iteration}, {"candidates", r.candidates},
          {"accepted", r.accepted},  {"added", r.added},         {"correct", r.correct},
          {"thresholds", r.thresholds}, {"prototype_thresholds", r.prototype_thresholds}};
}

std::string eval_text(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  const IoUReport rep = miou(cm);
  std::ostringstream out;
  out << "points " << cm.total() << "\n";
  for (int c = 0; c < static_cast<int>(rep.per_class.size()); ++c) {
    const std::string name = c < static_cast<int>(names.size()) ? names[c] : "class" + std::to_string(c);
    out << "class " << c << " " << name << " iou "
        << (std::isnan(rep.per_class[c]) ? std::string("absent") : fixed(100 * rep.per_class[c])) << "\n";
  }
  out << "miou " << fixed(100 * rep.miou) << "\n";
  return out.str();
}

std::string eval_jsonl(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  const IoUReport rep = miou(cm);
  std::string out;
  for (int c = 0; c < static_cast<int>(rep.per_class.size()); ++c) {
    json j = {{"class", c},
              {"name", c < static_cast<int>(names.size()) ? names[c] : "class" + std::to_string(c)},
              {"truth", cm.truth_count(c)},
              {"predicted", cm.prediction_count(c)},
              {"iou", std::isnan(rep.per_class[c]) ? json(nullptr) : json(rep.per_class[c])}};
    out += j.dump() + "\n";
  }
  out += json{{"miou", rep.miou}, {"points", cm.total()}}.dump() + "\n";
  return out;
}

void save_model(const fs::path& path, const ClassifierState& state) {
  Container c;
  put_model(c, state);
  c.write(path);
}

ClassifierState load_model(const fs::path& path, int num_classes) {
  require(fs::is_regular_file(path), ErrorCategory::kIo, "model file not found: " + path.string());
  ClassifierState s = get_model(Container::read(path));
  require(s.config.num_classes == num_classes, ErrorCategory::kData, "model class count does not match the scenes");
  return s;
}

std::string stats_text(const LabelStatistics& s) {
  std::ostringstream out;
  out << "total_points " << s.total_points << "\n"
      << "sparse " << s.sparse << "\n"
      << "propagated " << s.propagated << "\n"
      << "negative " << s.negative << "\n"
      << "pseudo " << s.pseudo << "\n"
      << "sparse_rate " << fixed(s.sparse_rate(), 6) << "\n"
      << "propagated_rate " << fixed(s.propagated_rate(), 6) << "\n"
      << "negative_rate " << fixed(s.negative_rate(), 6) << "\n"
      << "coverage " << fixed(s.coverage(), 6) << "\n";
  return out.str();
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  fs::path config, out;
  std::string seeds;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  const KeyValueConfig kv = load_config(a.config);
  const SceneConfig scene = SceneConfig::from_kv(kv.subset("scene."));
  const std::string range = !a.seeds.empty() ? a.seeds : kv.get_string("bench.seeds", "");
  require(!range.empty(), ErrorCategory::kConfig, "no seeds: pass --seeds or set bench.seeds");
  const auto seeds = parse_seed_range(range);
  prepare_out(a.out);
  for (std::uint64_t seed : seeds) write_scene(a.out / scene_file_name(seed), generate_scene(scene, seed));
  KeyValueConfig effective;
  effective.merge(scene.to_kv(), "scene.");
  write_text_file(a.out / "scene_config.txt", scene.to_kv().to_string());
  write_manifest(a.out, manifest_for("synth", effective, seeds));
  out << "synth: " << seeds.size() << " scenes -> " << a.out.string() << "\n";
}

// --- label -----------------------------------------------------------------

struct LabelArgs {
  fs::path config, scenes, out;
  std::string annotator = "oracle";
  bool text = false;
};

void cmd_label(const LabelArgs& a, std::ostream& out) {
  const KeyValueConfig kv = load_config(a.config);
  const ActiveLabelConfig alc = active_label_config(kv.subset("label."));
  require(a.annotator == "oracle" || a.annotator == "none", ErrorCategory::kConfig,
          "--annotator must be 'oracle' or 'none'");
  const auto seeds = list_scene_seeds(a.scenes);
  require(!seeds.empty(), ErrorCategory::kData, "no scene_*.wlb files in " + a.scenes.string());
  prepare_out(a.out);
  std::vector<LabelSet> all;
  long long definite = 0, definite_correct = 0;
  for (std::uint64_t seed : seeds) {
    const SceneFrame frame = read_scene(a.scenes / scene_file_name(seed));
    const AnnotationUnits units = build_annotation_units(frame.points, alc, seed);
    LabelSet labels;
    if (a.annotator == "oracle") {
      labels = simulate_annotation(units.clustering, frame.points, frame.gt_class, frame.num_classes);
    } else {
      labels.num_points = frame.num_points();
      labels.num_classes = frame.num_classes;
    }
    for (const auto* m : {&labels.sparse, &labels.propagated}) {
      for (const auto& [p, c] : *m) {
        ++definite;
        definite_correct += frame.gt_class[p] == c ? 1 : 0;
      }
    }
    write_label_artifact(a.out / labels_file_name(seed), labels, units);
    if (a.text) {
      auto name = labels_file_name(seed);
      name.replace(name.size() - 4, 4, ".txt");
      write_text_file(a.out / name, to_text(labels));
    }
    all.push_back(std::move(labels));
  }
  const LabelStatistics st = label_statistics(all);
  std::string stats = "scenes " + std::to_string(seeds.size()) + "\n" + stats_text(st);
  stats += "definite_accuracy " + (definite ? fixed(static_cast<double>(definite_correct) / definite, 6) : "absent") +
           "\n";
  write_text_file(a.out / "statistics.txt", stats);
  KeyValueConfig effective;
  effective.merge(to_kv(alc), "label.");
  effective.set("label.annotator", a.annotator);
  write_manifest(a.out, manifest_for("label", effective, seeds));
  out << stats;
}

// --- superpixel ------------------------------------------------------------

struct SuperpixelArgs {
  fs::path config, scenes, out;
  std::optional<int> n, levels, iterations, bins;
};

void cmd_superpixel(const SuperpixelArgs& a, std::ostream& out) {
  KeyValueConfig kv = load_config(a.config).subset("superpixel.");
  if (a.n) kv.set("num_superpixels", std::to_string(*a.n));
  if (a.levels) kv.set("num_levels", std::to_string(*a.levels));
  if (a.iterations) kv.set("iterations", std::to_string(*a.iterations));
  if (a.bins) kv.set("histogram_bins", std::to_string(*a.bins));
  const SeedsConfig sc = seeds_config(kv);
  const auto seeds = list_scene_seeds(a.scenes);
  require(!seeds.empty(), ErrorCategory::kData, "no scene_*.wlb files in " + a.scenes.string());
  prepare_out(a.out);
  long long total = 0;
  for (std::uint64_t seed : seeds) {
    const SceneFrame frame = read_scene(a.scenes / scene_file_name(seed));
    std::vector<SuperpixelMap> maps;
    for (const auto& img : frame.images) {
      maps.push_back(seeds_segment(img, sc));
      total += maps.back().num_superpixels;
    }
    write_superpixels(a.out / superpixel_file_name(seed), maps);
  }
  KeyValueConfig effective;
  effective.merge(to_kv(sc), "superpixel.");
  write_manifest(a.out, manifest_for("superpixel", effective, seeds));
  out << "superpixel: " << seeds.size() << " scenes, " << total << " superpixels\n";
}

// --- train / em / rectify / eval ---------------------------------------------

struct ModelArgs {
  fs::path config, scenes, labels, out;
  std::optional<fs::path> superpixels, init, model;
  TrainFlags flags;
  std::string method = "act-fsf";
  int iteration = 0;
  std::string split = "val";
};

struct TrainSetup {
  KeyValueConfig kv;
  TrainConfig train;
  Dataset data;
};

TrainSetup setup_training(const ModelArgs& a, bool need_val) {
  TrainSetup s;
  s.kv = load_config(a.config);
  a.flags.apply(s.kv);
  s.train = TrainConfig::from_kv(s.kv);
  s.data = load_dataset({a.scenes, a.labels, a.superpixels}, prepare_config(s.kv), true, need_val);
  require(!s.data.train.empty(), ErrorCategory::kData, "no training scenes (seed % 5 != 4)");
  return s;
}

KeyValueConfig effective_config(const TrainSetup& s) {
  KeyValueConfig effective = s.train.to_kv();
  const ModelConfig mc = model_config_from_kv(s.kv, s.data.num_classes);
  effective.set("model.hidden", std::to_string(mc.hidden));
  effective.set("model.gate_hidden", std::to_string(mc.gate_hidden));
  effective.set("model.projection_dim", std::to_string(mc.projection_dim));
  effective.set("model.seed", std::to_string(mc.seed));
  effective.merge(to_kv(prepare_config(s.kv).seeds), "superpixel.");
  return effective;
}

std::vector<std::uint64_t> all_seeds(const Dataset& d) {
  auto seeds = d.train_seeds;
  seeds.insert(seeds.end(), d.val_seeds.begin(), d.val_seeds.end());
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

template <class F>
void guard_divergence(const fs::path& out, const ClassifierState& state, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kDivergence) save_model(out / "model.diverged.wlb", state);
    throw;
  }
}

void cmd_train(const ModelArgs& a, std::ostream& out) {
  TrainSetup s = setup_training(a, true);
  prepare_out(a.out);
  ClassifierState state(model_config_from_kv(s.kv, s.data.num_classes));
  std::string metrics;
  guard_divergence(a.out, state, [&] {
    m_step(state, s.data.train, s.data.labels, s.train, s.train.warmup_epochs, -1,
           [&](const StepRecord& r) { metrics += step_json(r).dump() + "\n"; });
  });
  std::string report = "no validation scenes\n";
  if (!s.data.val.empty()) {
    const ConfusionMatrix cm = evaluate(state, s.data.val);
    metrics += json{{"type", "eval"}, {"iteration", -1}, {"miou", 100 * miou(cm).miou}}.dump() + "\n";
    report = eval_text(cm, s.data.class_names);
  }
  save_model(a.out / "model.wlb", state);
  write_text_file(a.out / "metrics.jsonl", metrics);
  write_text_file(a.out / "eval.txt", report);
  const KeyValueConfig effective = effective_config(s);
  write_text_file(a.out / "train_config.txt", effective.to_string());
  write_manifest(a.out, manifest_for("train", effective, all_seeds(s.data)));
  out << report;
}

void cmd_em(const ModelArgs& a, std::ostream& out) {
  TrainSetup s = setup_training(a, true);
  require(!s.data.val.empty(), ErrorCategory::kData, "em needs validation scenes (seed % 5 == 4)");
  prepare_out(a.out);
  ClassifierState state = a.init ? load_model(*a.init, s.data.num_classes)
                                 : ClassifierState(model_config_from_kv(s.kv, s.data.num_classes));
  std::string metrics;
  EmCallbacks cb;
  cb.on_step = [&](const StepRecord& r) { metrics += step_json(r).dump() + "\n"; };
  cb.on_eval = [&](int it, double m) { metrics += json{{"type", "eval"}, {"iteration", it}, {"miou", m}}.dump() + "\n"; };
  cb.on_estep = [&](const EStepReport& r) { metrics += estep_json(r).dump() + "\n"; };
  EmState em;
  guard_divergence(a.out, state, [&] {
    em = em_loop(state, s.data.train, s.data.labels, s.data.val, s.train, a.init.has_value(), cb);
  });
  for (std::size_t i = 0; i < s.data.train.size(); ++i) {
    write_label_artifact(a.out / labels_file_name(s.data.train_seeds[i]), em.labels[i], s.data.artifacts[i].units);
  }
  std::string history;
  for (std::size_t i = 0; i < em.history.size(); ++i) {
    history += std::to_string(static_cast<int>(i)) + " " + fixed(em.history[i], 4) + "\n";
  }
  const ConfusionMatrix cm = evaluate(state, s.data.val);
  const std::string report = eval_text(cm, s.data.class_names);
  save_model(a.out / "model.wlb", state);
  write_text_file(a.out / "metrics.jsonl", metrics);
  write_text_file(a.out / "history.txt", history);
  write_text_file(a.out / "eval.txt", report);
  write_text_file(a.out / "statistics.txt", stats_text(label_statistics(em.labels)));
  const KeyValueConfig effective = effective_config(s);
  write_text_file(a.out / "train_config.txt", effective.to_string());
  write_manifest(a.out, manifest_for("em", effective, all_seeds(s.data)));
  out << "history:";
  for (double h : em.history) out << " " << fixed(h);
  out << "\n" << report;
}

void cmd_rectify(const ModelArgs& a, std::ostream& out) {
  TrainSetup s = setup_training(a, false);
  require(a.model.has_value(), ErrorCategory::kConfig, "--model is required");
  require(a.iteration >= 0, ErrorCategory::kConfig, "--iteration must be >= 0");
  prepare_out(a.out);
  const ClassifierState state = load_model(*a.model, s.data.num_classes);
  std::vector<LabelSet> labels = s.data.labels;
  EStepReport rep;
  if (a.method == "act-fsf") {
    rep = e_step(state, s.data.train, labels, s.train, a.iteration);
  } else {
    rep = e_step_baseline(state, s.data.train, labels, s.train, a.iteration, parse_filter(a.method));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    write_label_artifact(a.out / labels_file_name(s.data.train_seeds[i]), labels[i], s.data.artifacts[i].units);
  }
  std::ostringstream r;
  r << "method " << a.method << "\n"
    << "iteration " << rep.iteration << "\n"
    << "candidates " << rep.candidates << "\n"
    << "accepted " << rep.accepted << "\n"
    << "added " << rep.added << "\n"
    << "correct " << rep.correct << "\n"
    << "error_rate " << (rep.accepted ? fixed(1.0 - static_cast<double>(rep.correct) / rep.accepted, 6) : "absent")
    << "\n";
  for (std::size_t c = 0; c < rep.thresholds.size(); ++c) r << "threshold " << c << " " << fixed(rep.thresholds[c], 6) << "\n";
  write_text_file(a.out / "rectify_report.txt", r.str());
  KeyValueConfig effective = effective_config(s);
  effective.set("rectify.method", a.method);
  effective.set("rectify.iteration", std::to_string(a.iteration));
  write_manifest(a.out, manifest_for("rectify", effective, s.data.train_seeds));
  out << r.str();
}

void cmd_eval(const ModelArgs& a, std::ostream& out) {
  require(a.model.has_value(), ErrorCategory::kConfig, "--model is required");
  require(a.split == "val" || a.split == "train" || a.split == "all", ErrorCategory::kConfig,
          "--split must be val, train or all");
  const KeyValueConfig kv = load_config(a.config);
  Dataset d = load_dataset({a.scenes, std::nullopt, a.superpixels}, prepare_config(kv), a.split != "val",
                           a.split != "train");
  std::vector<PreparedScene> scenes = std::move(d.val);
  for (auto& t : d.train) scenes.push_back(std::move(t));
  require(!scenes.empty(), ErrorCategory::kData, "no scenes in split '" + a.split + "'");
  const ClassifierState state = load_model(*a.model, d.num_classes);
  const ConfusionMatrix cm = evaluate(state, scenes);
  const std::string report = "split " + a.split + "\nscenes " + std::to_string(scenes.size()) + "\n" +
                             eval_text(cm, d.class_names);
  if (!a.out.empty()) {
    prepare_out(a.out);
    write_text_file(a.out / "eval.txt", report);
    write_text_file(a.out / "eval.jsonl", eval_jsonl(cm, d.class_names));
    KeyValueConfig effective;
    effective.merge(to_kv(prepare_config(kv).seeds), "superpixel.");
    effective.set("eval.split", a.split);
    effective.set("eval.model_hash", hex64(fnv1a64(read_file(*a.model))));
    write_manifest(a.out, manifest_for("eval", effective, all_seeds(d)));
  }
  out << report;
}

// --- serve-annotate --------------------------------------------------------

struct ServeArgs {
  fs::path scenes, labels;
  std::optional<fs::path> static_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool readonly = false;
};

AnnotateServer* g_server = nullptr;

void cmd_serve(const ServeArgs& a, std::ostream& out) {
  AnnotateServer server({a.scenes, a.labels, a.readonly, a.static_dir});
  const int port = server.bind(a.host, a.port);
  out << "serving http://" << a.host << ":" << port << (a.readonly ? " (read-only)" : "") << std::endl;
  g_server = &server;
  auto on_signal = [](int) {
    if (g_server) g_server->stop();
  };
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"weaklab: weakly supervised point cloud segmentation pipeline", "weaklab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate synthetic scenes");
  c_synth->add_option("--config", synth.config, "config file (scene.* keys)")->required();
  c_synth->add_option("--seeds", synth.seeds, "seed range: a..b, a,b,c or n (default bench.seeds)");
  c_synth->add_option("--out", synth.out, "output directory")->required();

  LabelArgs label;
  auto* c_label = app.add_subcommand("label", "build annotation units and simulate the annotator");
  c_label->add_option("--config", label.config, "config file (label.* keys)")->required();
  c_label->add_option("--scenes", label.scenes, "scene directory")->required();
  c_label->add_option("--out", label.out, "output directory")->required();
  c_label->add_option("--annotator", label.annotator, "oracle: ground-truth annotator; none: units only");
  c_label->add_flag("--text", label.text, "also write line-oriented label exports");

  SuperpixelArgs spx;
  auto* c_spx = app.add_subcommand("superpixel", "SEEDS superpixels for every camera image");
  c_spx->add_option("--config", spx.config, "config file (superpixel.* keys)")->required();
  c_spx->add_option("--scenes", spx.scenes, "scene directory")->required();
  c_spx->add_option("--out", spx.out, "output directory")->required();
  c_spx->add_option("--n", spx.n, "superpixels per image");
  c_spx->add_option("--levels", spx.levels, "block levels");
  c_spx->add_option("--iterations", spx.iterations, "pixel-level iterations");
  c_spx->add_option("--bins", spx.bins, "histogram bins per channel");

  ModelArgs train, em, rectify, eval;
  auto model_common = [](CLI::App* c, ModelArgs& m, bool labels) {
    c->add_option("--config", m.config, "config file")->required();
    c->add_option("--scenes", m.scenes, "scene directory")->required();
    if (labels) c->add_option("--labels", m.labels, "labels directory")->required();
    c->add_option("--superpixels", m.superpixels, "superpixel directory (computed on the fly when absent)");
  };
  auto* c_train = app.add_subcommand("train", "supervised warm-up training");
  model_common(c_train, train, true);
  c_train->add_option("--out", train.out, "output directory")->required();
  train.flags.add(c_train);

  auto* c_em = app.add_subcommand("em", "EM training with pseudo labels");
  model_common(c_em, em, true);
  c_em->add_option("--out", em.out, "output directory")->required();
  c_em->add_option("--init", em.init, "warm-up model; skips the initial M-step");
  em.flags.add(c_em);

  auto* c_rect = app.add_subcommand("rectify", "one E-step: pseudo labels from a trained model");
  model_common(c_rect, rectify, true);
  c_rect->add_option("--model", rectify.model, "model file")->required();
  c_rect->add_option("--out", rectify.out, "output directory")->required();
  c_rect->add_option("--method", rectify.method, "act-fsf | fix | fix:<tau> | esl | dars");
  c_rect->add_option("--iteration", rectify.iteration, "EM iteration (0 restricts to negative points)");
  rectify.flags.add(c_rect);

  auto* c_eval = app.add_subcommand("eval", "per-class IoU and mIoU");
  model_common(c_eval, eval, false);
  c_eval->add_option("--model", eval.model, "model file")->required();
  c_eval->add_option("--split", eval.split, "val | train | all");
  c_eval->add_option("--out", eval.out, "write eval.txt and eval.jsonl here");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve-annotate", "HTTP annotation service");
  c_serve->add_option("--scenes", serve.scenes, "scene directory")->required();
  c_serve->add_option("--labels", serve.labels, "labels directory (from `label`)")->required();
  c_serve->add_option("--host", serve.host, "bind address");
  c_serve->add_option("--port", serve.port, "port (0 picks a free one)");
  c_serve->add_flag("--readonly", serve.readonly, "reject POST requests");
  c_serve->add_option("--static", serve.static_dir, "static asset directory served at /");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << category_name(ErrorCategory::kConfig) << ": " << e.what() << "\n";
    return exit_code(ErrorCategory::kConfig);
  }

  try {
    if (*c_synth) cmd_synth(synth, out);
    if (*c_label) cmd_label(label, out);
    if (*c_spx) cmd_superpixel(spx, out);
    if (*c_train) cmd_train(train, out);
    if (*c_em) cmd_em(em, out);
    if (*c_rect) cmd_rectify(rectify, out);
    if (*c_eval) cmd_eval(eval, out);
    if (*c_serve) cmd_serve(serve, out);
  } catch (const Error& e) {
    err << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace weaklab::cli
