#include "weaklab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "weaklab/error.hpp"
#include "weaklab/losses.hpp"
#include "weaklab/rng.hpp"
#include "weaklab/superpixel.hpp"

namespace weaklab {
namespace {

// Point feature columns measured in metres (scaled by augmentation).
constexpr int kMetricColumns[] = {0, 1, 2, 9};

std::string num(double v) { return format_number(v); }

struct BatchRows {
  Matrix point_x, pixel_x;
  std::vector<char> has_pixel;
  std::vector<int> target;  // -1 when no definite/pseudo target
  std::vector<double> weight;
  std::vector<ClassMask> negative;  // 0 when none
  // Association inputs.
  std::vector<int> sparse_rows;
  std::vector<int> sparse_class;
  Matrix superpixel_x;
};

BatchRows gather(const std::vector<const PreparedScene*>& scenes, const std::vector<const LabelSet*>& labels,
                 const TrainConfig& cfg, double feature_scale) {
  struct Entry {
    int target = -1;
    double weight = 1.0;
    ClassMask negative = 0;
    bool sparse = false;
  };
  BatchRows b;
  std::vector<std::pair<const PreparedScene*, int>> picked;
  std::vector<Entry> entries;
  std::vector<RowVector> spx_rows;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto& scene = *scenes[s];
    const auto& ls = *labels[s];
    std::map<int, Entry> rows;
    if (cfg.full_supervision) {
      for (int r = 0; r < scene.num_rows(); ++r) rows[r].target = scene.gt[r];
    } else {
      auto row = [&](int point) { return point >= 0 && point < scene.num_points ? scene.row_of_point[point] : -1; };
      for (const auto& [p, c] : ls.sparse) {
        if (const int r = row(p); r >= 0) {
          rows[r].target = c;
          rows[r].sparse = true;
        }
      }
      if (cfg.use_propagated) {
        for (const auto& [p, c] : ls.propagated) {
          if (const int r = row(p); r >= 0) rows[r].target = c;
        }
      }
      if (cfg.use_negative) {
        for (const auto& [p, m] : ls.negative) {
          if (const int r = row(p); r >= 0) rows[r].negative = m;
        }
      }
      for (const auto& [p, pl] : ls.pseudo) {
        const int r = row(p);
        if (r < 0 || rows[r].target >= 0) continue;
        rows[r].target = pl.cls;
        rows[r].weight = cfg.hard_pseudo ? 1.0 : pl.confidence;
      }
    }
    std::map<int, int> sparse_in_scene;
    for (const auto& [r, e] : rows) {
      if (e.target < 0 && e.negative == 0) continue;
      if (e.sparse) {
        b.sparse_rows.push_back(static_cast<int>(entries.size()));
        b.sparse_class.push_back(e.target);
        sparse_in_scene[scene.rows[r]] = e.target;
      }
      picked.push_back({&scene, r});
      entries.push_back(e);
    }
    if (cfg.asso_weight > 0 && !sparse_in_scene.empty()) {
      for (const auto& view : scene.views) {
        std::vector<int> ids;
        for (const auto& m : match_superpixels(view.superpixels, view.hits, sparse_in_scene)) ids.push_back(m.superpixel);
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (int id : ids) spx_rows.push_back(view.pooled.row(id));
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(picked.size());
  const auto dp = n ? picked[0].first->point_x.cols() : kPointFeatureDim;
  const auto di = n ? picked[0].first->pixel_x.cols() : kPixelFeatureDim;
  b.point_x.resize(n, dp);
  b.pixel_x.resize(n, di);
  b.has_pixel.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [scene, r] = picked[i];
    b.point_x.row(i) = scene->point_x.row(r);
    b.pixel_x.row(i) = scene->pixel_x.row(r);
    b.has_pixel[i] = scene->has_pixel[r];
    b.target.push_back(entries[i].target);
    b.weight.push_back(entries[i].weight);
    b.negative.push_back(entries[i].negative);
  }
  if (feature_scale != 1.0) {
    for (int c : kMetricColumns) {
      if (c < dp) b.point_x.col(c) *= feature_scale;
    }
  }
  b.superpixel_x.resize(static_cast<Eigen::Index>(spx_rows.size()), di);
  for (std::size_t i = 0; i < spx_rows.size(); ++i) b.superpixel_x.row(static_cast<Eigen::Index>(i)) = spx_rows[i];
  return b;
}

Matrix select_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  require(lr > 0, ErrorCategory::kConfig, "lr must be > 0");
  require(momentum >= 0 && momentum < 1, ErrorCategory::kConfig, "momentum must be in [0, 1)");
  require(batch_scenes >= 1, ErrorCategory::kConfig, "batch_scenes must be >= 1");
  require(warmup_epochs >= 0 && epochs >= 0, ErrorCategory::kConfig, "epochs must be >= 0");
  require(seg_weight >= 0 && asso_weight >= 0 && assoc.beta_w >= 0 && assoc.beta_v >= 0, ErrorCategory::kConfig,
          "loss weights must be >= 0");
  require(rectify.delta >= 0 && rectify.delta <= 1 && rectify.alpha >= 0 && rectify.alpha <= 1,
          ErrorCategory::kConfig, "delta and alpha must lie in [0, 1]");
  require(prototype_temperature > 0, ErrorCategory::kConfig, "prototype_temperature must be > 0");
  require(em_max_iterations >= 0 && tolerance >= 0, ErrorCategory::kConfig, "invalid EM stopping settings");
}

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv) {
  TrainConfig c;
  c.lr = kv.get_double("train.lr", c.lr);
  c.momentum = kv.get_double("train.momentum", c.momentum);
  c.weight_decay = kv.get_double("train.weight_decay", c.weight_decay);
  c.batch_scenes = static_cast<int>(kv.get_int("train.batch_scenes", c.batch_scenes));
  c.warmup_epochs = static_cast<int>(kv.get_int("train.warmup_epochs", c.warmup_epochs));
  c.epochs = static_cast<int>(kv.get_int("train.epochs", c.epochs));
  c.seg_weight = kv.get_double("train.seg_weight", c.seg_weight);
  c.asso_weight = kv.get_double("train.asso_weight", c.asso_weight);
  c.assoc.beta_w = kv.get_double("assoc.beta_w", c.assoc.beta_w);
  c.assoc.beta_v = kv.get_double("assoc.beta_v", c.assoc.beta_v);
  c.assoc.normalize = kv.get_bool("assoc.normalize", c.assoc.normalize);
  c.assoc.projection_dim = static_cast<int>(kv.get_int("model.projection_dim", c.assoc.projection_dim));
  c.rectify.delta = kv.get_double("rectify.delta", c.rectify.delta);
  c.rectify.alpha = kv.get_double("rectify.alpha", c.rectify.alpha);
  c.prototype_temperature = kv.get_double("rectify.prototype_temperature", c.prototype_temperature);
  c.em_max_iterations = static_cast<int>(kv.get_int("em.max_iterations", c.em_max_iterations));
  const auto tol = kv.get_string("em.tolerance", "");
  if (tol == "inf") {
    c.tolerance = std::numeric_limits<double>::infinity();
  } else {
    c.tolerance = kv.get_double("em.tolerance", c.tolerance);
  }
  c.hard_pseudo = kv.get_bool("em.hard_pseudo", c.hard_pseudo);
  c.augment = kv.get_bool("train.augment", c.augment);
  c.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", static_cast<long long>(c.seed)));
  c.use_propagated = kv.get_bool("ablation.propagated", c.use_propagated);
  c.use_negative = kv.get_bool("ablation.negative", c.use_negative);
  c.use_lovasz = kv.get_bool("ablation.lovasz", c.use_lovasz);
  c.full_supervision = kv.get_bool("ablation.full_supervision", c.full_supervision);
  c.validate();
  return c;
}

KeyValueConfig TrainConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("train.lr", num(lr));
  kv.set("train.momentum", num(momentum));
  kv.set("train.weight_decay", num(weight_decay));
  kv.set("train.batch_scenes", std::to_string(batch_scenes));
  kv.set("train.warmup_epochs", std::to_string(warmup_epochs));
  kv.set("train.epochs", std::to_string(epochs));
  kv.set("train.seg_weight", num(seg_weight));
  kv.set("train.asso_weight", num(asso_weight));
  kv.set("train.augment", augment ? "true" : "false");
  kv.set("train.seed", std::to_string(seed));
  kv.set("assoc.beta_w", num(assoc.beta_w));
  kv.set("assoc.beta_v", num(assoc.beta_v));
  kv.set("assoc.normalize", assoc.normalize ? "true" : "false");
  kv.set("model.projection_dim", std::to_string(assoc.projection_dim));
  kv.set("rectify.delta", num(rectify.delta));
  kv.set("rectify.alpha", num(rectify.alpha));
  kv.set("rectify.prototype_temperature", num(prototype_temperature));
  kv.set("em.max_iterations", std::to_string(em_max_iterations));
  kv.set("em.tolerance", std::isinf(tolerance) ? std::string("inf") : num(tolerance));
  kv.set("em.hard_pseudo", hard_pseudo ? "true" : "false");
  kv.set("ablation.propagated", use_propagated ? "true" : "false");
  kv.set("ablation.negative", use_negative ? "true" : "false");
  kv.set("ablation.lovasz", use_lovasz ? "true" : "false");
  kv.set("ablation.full_supervision", full_supervision ? "true" : "false");
  return kv;
}

ModelConfig model_config_from_kv(const KeyValueConfig& kv, int num_classes) {
  ModelConfig m;
  m.num_classes = num_classes;
  m.hidden = static_cast<int>(kv.get_int("model.hidden", m.hidden));
  m.gate_hidden = static_cast<int>(kv.get_int("model.gate_hidden", m.gate_hidden));
  m.projection_dim = static_cast<int>(kv.get_int("model.projection_dim", m.projection_dim));
  m.seed = static_cast<std::uint64_t>(kv.get_int("model.seed", static_cast<long long>(m.seed)));
  return m;
}

StepRecord batch_loss(const ClassifierState& state, const std::vector<const PreparedScene*>& scenes,
                      const std::vector<const LabelSet*>& labels, const TrainConfig& cfg, Gradients& grads,
                      double feature_scale) {
  require(scenes.size() == labels.size(), ErrorCategory::kData, "scene and label counts differ");
  StepRecord rec;
  const BatchRows b = gather(scenes, labels, cfg, feature_scale);
  if (b.target.empty()) return rec;

  const auto fw = state.forward(b.point_x, b.pixel_x, b.has_pixel);
  if (!fw.logits.allFinite() || !fw.fused.allFinite()) fail(ErrorCategory::kDivergence, "non-finite activations");
  const Matrix probs = softmax_rows(fw.logits);
  const auto n = fw.logits.rows();
  Matrix d_logits = Matrix::Zero(n, fw.logits.cols());
  Matrix d_probs = Matrix::Zero(n, fw.logits.cols());

  std::vector<int> sup_rows, sup_labels, neg_rows;
  std::vector<double> sup_weights;
  std::vector<ClassMask> neg_masks;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (b.target[i] >= 0) {
      sup_rows.push_back(static_cast<int>(i));
      sup_labels.push_back(b.target[i]);
      sup_weights.push_back(b.weight[i]);
    }
    if (b.negative[i] != 0) {
      neg_rows.push_back(static_cast<int>(i));
      neg_masks.push_back(b.negative[i]);
    }
  }
  if (!sup_rows.empty()) {
    const auto ce = cross_entropy(select_rows(fw.logits, sup_rows), sup_labels, sup_weights);
    rec.ce = ce.loss;
    for (std::size_t k = 0; k < sup_rows.size(); ++k) d_logits.row(sup_rows[k]) += cfg.seg_weight * ce.grad.row(k);
    if (cfg.use_lovasz) {
      const auto lv = lovasz_softmax(select_rows(probs, sup_rows), sup_labels);
      rec.lovasz = lv.loss;
      for (std::size_t k = 0; k < sup_rows.size(); ++k) d_probs.row(sup_rows[k]) += cfg.seg_weight * lv.grad.row(k);
    }
  }
  if (!neg_rows.empty()) {
    const auto ng = negative_loss(select_rows(probs, neg_rows), neg_masks);
    rec.negative = ng.loss;
    for (std::size_t k = 0; k < neg_rows.size(); ++k) d_probs.row(neg_rows[k]) += cfg.seg_weight * ng.grad.row(k);
  }
  d_logits += softmax_rows_backward(probs, d_probs);

  Matrix d_f3 = Matrix::Zero(fw.f3.rows(), fw.f3.cols());
  bool has_assoc = false;
  if (cfg.asso_weight > 0 && !b.sparse_rows.empty() && b.superpixel_x.rows() > 0) {
    const Matrix f3 = select_rows(fw.f3, b.sparse_rows);
    const auto img = state.image_head(b.superpixel_x);
    const Matrix p3 = state.project3(f3), p2 = state.project2(img.f2);
    if (!p3.allFinite() || !p2.allFinite()) fail(ErrorCategory::kDivergence, "non-finite association features");
    const auto al = assoc_loss(p3, p2, b.sparse_class, cfg.assoc);
    rec.assoc = al.total;
    const Matrix d_f3_sparse = state.project3_backward(f3, cfg.asso_weight * al.d_f3d, grads);
    for (std::size_t k = 0; k < b.sparse_rows.size(); ++k) d_f3.row(b.sparse_rows[k]) += d_f3_sparse.row(k);
    const Matrix d_f2_spx = state.project2_backward(img.f2, cfg.asso_weight * al.d_f2d, grads);
    state.image_head_backward(img, d_f2_spx, grads);
    has_assoc = true;
  }
  state.backward(fw, d_logits, has_assoc ? &d_f3 : nullptr, nullptr, grads);
  rec.total = cfg.seg_weight * (rec.ce + rec.lovasz + rec.negative) + cfg.asso_weight * rec.assoc;
  return rec;
}

void m_step(ClassifierState& state, const std::vector<PreparedScene>& scenes, const std::vector<LabelSet>& labels,
            const TrainConfig& cfg, int epochs, int iteration, const StepCallback& on_step) {
  require(scenes.size() == labels.size(), ErrorCategory::kData, "scene and label counts differ");
  if (scenes.empty() || epochs <= 0) return;
  const std::int64_t prior_steps = state.optimizer.steps();
  state.optimizer = NesterovSgd(state.params, {cfg.momentum, cfg.weight_decay});
  state.optimizer.restore(state.params.zeros_like(), prior_steps);

  const int per_epoch = static_cast<int>((scenes.size() + cfg.batch_scenes - 1) / cfg.batch_scenes);
  const std::int64_t total = static_cast<std::int64_t>(per_epoch) * epochs;
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration + 1) * 7919));
  std::vector<int> order(scenes.size());
  std::int64_t step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    for (int start = 0; start < static_cast<int>(order.size()); start += cfg.batch_scenes) {
      std::vector<const PreparedScene*> bs;
      std::vector<const LabelSet*> bl;
      for (int k = start; k < std::min<int>(start + cfg.batch_scenes, static_cast<int>(order.size())); ++k) {
        bs.push_back(&scenes[order[k]]);
        bl.push_back(&labels[order[k]]);
      }
      const double scale = cfg.augment ? rng.uniform(0.95, 1.05) : 1.0;
      Gradients grads = state.params.zeros_like();
      StepRecord rec = batch_loss(state, bs, bl, cfg, grads, scale);
      rec.iteration = iteration;
      rec.step = static_cast<int>(step);
      rec.lr = cosine_lr(cfg.lr, step, total);
      if (!std::isfinite(rec.total)) {
        fail(ErrorCategory::kDivergence, "non-finite loss at step " + std::to_string(step));
      }
      state.optimizer.step(state.params, grads, rec.lr);
      if (!state.params.all_finite()) {
        fail(ErrorCategory::kDivergence, "non-finite parameters at step " + std::to_string(step));
      }
      if (on_step) on_step(rec);
      ++step;
    }
  }
}

Prediction predict(const ClassifierState& state, const PreparedScene& scene, const std::vector<int>& rows) {
  const Matrix px = select_rows(scene.point_x, rows);
  const Matrix ix = select_rows(scene.pixel_x, rows);
  std::vector<char> has(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) has[i] = scene.has_pixel[rows[i]];
  const auto fw = state.forward(px, ix, has);
  return {softmax_rows(fw.logits), normalize_rows(fw.fused)};
}

ConfusionMatrix evaluate(const ClassifierState& state, const std::vector<PreparedScene>& scenes) {
  ConfusionMatrix cm(state.config.num_classes);
  for (const auto& scene : scenes) {
    if (scene.num_rows() == 0) continue;
    const auto fw = state.forward(scene.point_x, scene.pixel_x, scene.has_pixel);
    for (Eigen::Index r = 0; r < fw.logits.rows(); ++r) {
      Eigen::Index best;
      fw.logits.row(r).maxCoeff(&best);
      cm.add(scene.gt[r], static_cast<int>(best));
    }
  }
  return cm;
}

EStepReport e_step(const ClassifierState& state, const std::vector<PreparedScene>& scenes,
                   std::vector<LabelSet>& labels, const TrainConfig& cfg, int iteration) {
  require(scenes.size() == labels.size(), ErrorCategory::kData, "scene and label counts differ");
  const int c = state.config.num_classes;
  std::vector<std::vector<int>> cand_points(scenes.size()), cand_rows(scenes.size());
  std::vector<Prediction> cand_pred(scenes.size());
  std::vector<Matrix> def_features;
  std::vector<int> def_labels;
  Eigen::Index total = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto& scene = scenes[s];
    for (int p : pseudo_candidates(labels[s], iteration)) {
      if (p < scene.num_points && scene.row_of_point[p] >= 0) {
        cand_points[s].push_back(p);
        cand_rows[s].push_back(scene.row_of_point[p]);
      }
    }
    cand_pred[s] = predict(state, scene, cand_rows[s]);
    total += static_cast<Eigen::Index>(cand_rows[s].size());

    std::vector<int> rows, ys;
    auto add_definite = [&](const std::map<int, int>& m) {
      for (const auto& [p, y] : m) {
        if (p < scene.num_points && scene.row_of_point[p] >= 0) {
          rows.push_back(scene.row_of_point[p]);
          ys.push_back(y);
        }
      }
    };
    add_definite(labels[s].sparse);
    if (cfg.use_propagated) add_definite(labels[s].propagated);
    if (!rows.empty()) {
      def_features.push_back(predict(state, scene, rows).features);
      def_labels.insert(def_labels.end(), ys.begin(), ys.end());
    }
  }

  EStepReport rep;
  rep.iteration = iteration;
  rep.candidates = static_cast<int>(total);
  if (def_labels.empty() || total == 0) return rep;

  Eigen::Index width = def_features.front().cols();
  Matrix all_def(static_cast<Eigen::Index>(def_labels.size()), width);
  Eigen::Index at = 0;
  for (const auto& f : def_features) {
    all_def.middleRows(at, f.rows()) = f;
    at += f.rows();
  }
  const PrototypeBank bank = build_prototypes(all_def, def_labels, c);

  Matrix all_probs(total, c), all_proto(total, c);
  std::vector<PrototypeLabels> protos(scenes.size());
  at = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto rows = static_cast<Eigen::Index>(cand_rows[s].size());
    if (rows == 0) continue;
    protos[s] = prototype_labels(cand_pred[s].features, bank, cfg.prototype_temperature);
    all_probs.middleRows(at, rows) = cand_pred[s].probs;
    all_proto.middleRows(at, rows) = protos[s].confidence;
    at += rows;
  }
  rep.thresholds = adaptive_thresholds(all_probs, cfg.rectify);
  rep.prototype_thresholds = adaptive_thresholds(all_proto, cfg.rectify);

  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (cand_rows[s].empty()) continue;
    const auto batch = estimate_pseudo_labels(cand_pred[s].probs, protos[s], labels[s], cand_points[s],
                                              rep.thresholds, rep.prototype_thresholds, iteration);
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
      if (!batch.items[i].accepted) continue;
      ++rep.accepted;
      if (batch.items[i].classifier_class == scenes[s].gt[cand_rows[s][i]]) ++rep.correct;
    }
    rep.added += merge_pseudo_labels(labels[s], batch);
  }
  return rep;
}

EStepReport e_step_baseline(const ClassifierState& state, const std::vector<PreparedScene>& scenes,
                            std::vector<LabelSet>& labels, const TrainConfig& cfg, int iteration, FilterSpec filter) {
  require(scenes.size() == labels.size(), ErrorCategory::kData, "scene and label counts differ");
  const int c = state.config.num_classes;
  if (filter.method == FilterMethod::kDars && filter.target_proportion.empty()) {
    std::vector<double> hist(c, 0.0);
    double total = 0;
    for (const auto& ls : labels) {
      for (const auto& [p, y] : ls.sparse) hist[y] += 1, total += 1;
      if (cfg.use_propagated) {
        for (const auto& [p, y] : ls.propagated) hist[y] += 1, total += 1;
      }
    }
    require(total > 0, ErrorCategory::kData, "DARS needs definite labels");
    for (auto& h : hist) h /= total;
    filter.target_proportion = hist;
  }

  std::vector<std::vector<int>> cand_points(scenes.size()), cand_rows(scenes.size());
  std::vector<Matrix> probs(scenes.size());
  Eigen::Index total = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (int p : pseudo_candidates(labels[s], iteration)) {
      if (p < scenes[s].num_points && scenes[s].row_of_point[p] >= 0) {
        cand_points[s].push_back(p);
        cand_rows[s].push_back(scenes[s].row_of_point[p]);
      }
    }
    probs[s] = predict(state, scenes[s], cand_rows[s]).probs;
    total += probs[s].rows();
  }
  EStepReport rep;
  rep.iteration = iteration;
  rep.candidates = static_cast<int>(total);
  if (total == 0) return rep;
  Matrix all(total, c);
  Eigen::Index at = 0;
  for (const auto& p : probs) {
    all.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  const auto accept = baseline_filter(all, filter);
  const auto raw = argmax_rows(all);
  at = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    PseudoLabelBatch batch;
    batch.iteration = iteration;
    for (std::size_t i = 0; i < cand_points[s].size(); ++i, ++at) {
      PseudoCandidate item;
      item.point = cand_points[s][i];
      item.classifier_class = item.prototype_class = raw[at];
      item.confidence = item.prototype_confidence = all(at, raw[at]);
      item.accepted = accept[at];
      item.reason = item.accepted ? Rejection::kNone : Rejection::kBelowThreshold;
      if (item.accepted) {
        ++rep.accepted;
        if (item.classifier_class == scenes[s].gt[cand_rows[s][i]]) ++rep.correct;
      }
      batch.items.push_back(item);
    }
    rep.added += merge_pseudo_labels(labels[s], batch);
  }
  return rep;
}

EmState em_loop(ClassifierState& state, const std::vector<PreparedScene>& train, std::vector<LabelSet> labels,
                const std::vector<PreparedScene>& validation, const TrainConfig& cfg, bool skip_warmup,
                const EmCallbacks& cb) {
  cfg.validate();
  EmState em;
  em.labels = std::move(labels);
  if (!skip_warmup) m_step(state, train, em.labels, cfg, cfg.warmup_epochs, -1, cb.on_step);
  auto score = [&] { return 100.0 * miou(evaluate(state, validation)).miou; };
  em.history.push_back(score());
  if (cb.on_eval) cb.on_eval(0, em.history.back());
  double best = em.history.back();
  for (int it = 0; it < cfg.em_max_iterations; ++it) {
    em.e_steps.push_back(e_step(state, train, em.labels, cfg, it));
    if (cb.on_estep) cb.on_estep(em.e_steps.back());
    m_step(state, train, em.labels, cfg, cfg.epochs, it, cb.on_step);
    em.history.push_back(score());
    em.iteration = it + 1;
    if (cb.on_eval) cb.on_eval(em.iteration, em.history.back());
    if (!(em.history.back() - best > cfg.tolerance)) break;
    best = em.history.back();
  }
  return em;
}

}  // namespace weaklab
