#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "weaklab/labels.hpp"
#include "weaklab/types.hpp"

namespace weaklab {

struct RectifyConfig {
  double delta = 0.1;
  double alpha = 0.5;
};

/// sigma_c = max(max_{i: argmax p_i = c} p_ic - delta, alpha); +inf for classes
/// that are never the argmax.
std::vector<double> adaptive_thresholds(const Matrix& probs, const RectifyConfig& config);

/// Row-wise argmax, ties to the lowest class.
std::vector<int> argmax_rows(const Matrix& probs);

struct PrototypeBank {
  Matrix prototypes;         // C x D, zero rows for classes without support
  std::vector<int> support;  // labelled points per class

  int num_classes() const { return static_cast<int>(support.size()); }
  bool has(int cls) const { return support[cls] > 0; }
  bool empty() const;
};

/// Per-class mean of `features` rows; rows with label -1 are ignored.
PrototypeBank build_prototypes(const Matrix& features, const std::vector<int>& labels, int num_classes);

struct PrototypeLabels {
  std::vector<int> cls;
  Matrix confidence;  // N x C softmax over classes with a prototype; 0 elsewhere
};

/// argmax_c softmax_c(<f_i, P_c> / temperature) over the classes in the bank.
PrototypeLabels prototype_labels(const Matrix& features, const PrototypeBank& bank, double temperature = 1.0);

enum class Rejection { kNone, kBelowThreshold, kPrototypeConflict, kNegativeViolation };

std::string_view rejection_name(Rejection reason);

struct PseudoCandidate {
  int point = 0;
  int classifier_class = 0;
  int prototype_class = 0;
  double confidence = 0.0;
  double prototype_confidence = 0.0;
  bool accepted = false;
  Rejection reason = Rejection::kNone;
};

struct PseudoLabelBatch {
  int iteration = 0;
  std::vector<PseudoCandidate> items;

  int accepted_count() const;
  /// Accepted class per item, -1 for rejected ones.
  std::vector<int> accepted_labels() const;
};

/// Points eligible for pseudo labels: negative-labelled points at iteration 0,
/// negative and unlabelled points afterwards. Sparse, propagated and already
/// pseudo-labelled points are never candidates.
std::vector<int> pseudo_candidates(const LabelSet& labels, int iteration);

/// ACT + FSF. Row i of `probs`/`features` belongs to `points[i]`. Thresholds
/// are computed over the rows passed in, for both the classifier and the
/// prototype confidences.
PseudoLabelBatch estimate_pseudo_labels(const Matrix& probs, const Matrix& features, const PrototypeBank& bank,
                                        const LabelSet& labels, const std::vector<int>& points,
                                        const RectifyConfig& config, int iteration, double temperature = 1.0);

/// Core of the filter with thresholds supplied by the caller (for example
/// computed over a whole dataset rather than the rows passed in).
PseudoLabelBatch estimate_pseudo_labels(const Matrix& probs, const PrototypeLabels& prototypes, const LabelSet& labels,
                                        const std::vector<int>& points, const std::vector<double>& thresholds,
                                        const std::vector<double>& prototype_thresholds, int iteration);

/// Like estimate_pseudo_labels but with an explicit prototype confidence
/// matrix; used when prototypes come from a different feature space.
PseudoLabelBatch estimate_pseudo_labels(const Matrix& probs, const PrototypeLabels& prototypes, const LabelSet& labels,
                                        const std::vector<int>& points, const RectifyConfig& config, int iteration);

enum class FilterMethod { kFix, kEsl, kDars };

struct FilterSpec {
  FilterMethod method = FilterMethod::kFix;
  double threshold = 0.5;                 // fix
  std::vector<double> target_proportion;  // dars: labelled-set class distribution
};

/// Parses "fix", "fix:<tau>", "esl", "dars".
FilterSpec parse_filter(const std::string& text);

std::vector<bool> baseline_filter(const Matrix& probs, const FilterSpec& spec);
std::vector<bool> fix_filter(const Matrix& probs, double threshold);
/// Accepts rows whose entropy is at most the median entropy of rows predicted as the same class.
std::vector<bool> esl_filter(const Matrix& probs);
/// Largest K with round(K pi_c) <= n_c for every class, then the round(K pi_c)
/// most confident rows per predicted class.
std::vector<bool> dars_filter(const Matrix& probs, const std::vector<double>& target_proportion);

/// Adds accepted labels for points without a pseudo label; earlier labels win.
/// Returns the number of labels added.
int merge_pseudo_labels(LabelSet& labels, const PseudoLabelBatch& batch);

}  // namespace weaklab
