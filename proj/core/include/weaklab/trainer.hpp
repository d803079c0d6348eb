#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "weaklab/assoc.hpp"
#include "weaklab/features.hpp"
#include "weaklab/kvconfig.hpp"
#include "weaklab/labels.hpp"
#include "weaklab/metrics.hpp"
#include "weaklab/model.hpp"
#include "weaklab/rectify.hpp"

namespace weaklab {

struct TrainConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_scenes = 2;
  int warmup_epochs = 12;   // initial supervised M-step
  int epochs = 6;           // each later M-step
  double seg_weight = 1.0;
  double asso_weight = 0.5;
  AssocConfig assoc;
  RectifyConfig rectify;
  double prototype_temperature = 0.05;
  int em_max_iterations = 3;
  double tolerance = 0.1;   // mIoU points
  bool hard_pseudo = false; // pseudo labels enter with weight 1 instead of their confidence
  bool augment = true;      // random scaling of the metric point features
  std::uint64_t seed = 0;

  // Ablation switches.
  bool use_propagated = true;
  bool use_negative = true;
  bool use_lovasz = true;
  bool full_supervision = false;  // every row supervised with its ground truth

  void validate() const;
  static TrainConfig from_kv(const KeyValueConfig& kv);
  KeyValueConfig to_kv() const;
};

ModelConfig model_config_from_kv(const KeyValueConfig& kv, int num_classes);

struct StepRecord {
  int iteration = 0;  // -1 for warm-up
  int step = 0;
  double lr = 0.0;
  double ce = 0.0;
  double lovasz = 0.0;
  double negative = 0.0;
  double assoc = 0.0;
  double total = 0.0;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Segmentation and association losses of one minibatch, with gradients
/// accumulated into `grads` (exposed for gradient checks).
StepRecord batch_loss(const ClassifierState& state, const std::vector<const PreparedScene*>& scenes,
                      const std::vector<const LabelSet*>& labels, const TrainConfig& config, Gradients& grads,
                      double feature_scale = 1.0);

/// Minibatch Nesterov SGD over `epochs` epochs with a fresh cosine schedule.
/// Throws ErrorCategory::kDivergence on a non-finite loss.
void m_step(ClassifierState& state, const std::vector<PreparedScene>& scenes, const std::vector<LabelSet>& labels,
            const TrainConfig& config, int epochs, int iteration, const StepCallback& on_step = {});

ConfusionMatrix evaluate(const ClassifierState& state, const std::vector<PreparedScene>& scenes);

/// Class probabilities and L2-normalized fused features for the given rows.
struct Prediction {
  Matrix probs;
  Matrix features;
};
Prediction predict(const ClassifierState& state, const PreparedScene& scene, const std::vector<int>& rows);

struct EStepReport {
  int iteration = 0;
  int candidates = 0;
  int accepted = 0;
  int added = 0;
  int correct = 0;  // accepted labels matching ground truth
  std::vector<double> thresholds;
  std::vector<double> prototype_thresholds;
};

/// ACT + FSF over all training scenes; merges accepted labels into `labels`.
EStepReport e_step(const ClassifierState& state, const std::vector<PreparedScene>& scenes,
                   std::vector<LabelSet>& labels, const TrainConfig& config, int iteration);

/// Same candidate sets as e_step, filtered by a baseline method instead of
/// ACT + FSF. DARS targets the class distribution of the definite labels.
EStepReport e_step_baseline(const ClassifierState& state, const std::vector<PreparedScene>& scenes,
                            std::vector<LabelSet>& labels, const TrainConfig& config, int iteration,
                            FilterSpec filter);

struct EmState {
  int iteration = 0;               // completed EM iterations
  std::vector<LabelSet> labels;    // including pseudo labels
  std::vector<double> history;     // validation mIoU (points) after warm-up and each iteration
  std::vector<EStepReport> e_steps;
};

struct EmCallbacks {
  StepCallback on_step;
  std::function<void(int iteration, double miou)> on_eval;
  std::function<void(const EStepReport&)> on_estep;
};

/// Warm-up M-step, then E-step / M-step rounds until validation mIoU stops
/// improving by more than the tolerance or the iteration cap is reached.
/// Set `skip_warmup` when `state` already holds a warm-up model.
EmState em_loop(ClassifierState& state, const std::vector<PreparedScene>& train, std::vector<LabelSet> labels,
                const std::vector<PreparedScene>& validation, const TrainConfig& config, bool skip_warmup = false,
                const EmCallbacks& callbacks = {});

/// Validation membership: seed % 5 == 4.
inline bool is_validation_seed(std::uint64_t seed) { return seed % 5 == 4; }

}  // namespace weaklab
