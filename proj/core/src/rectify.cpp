#include "weaklab/rectify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "weaklab/error.hpp"

namespace weaklab {

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < probs.cols(); ++j) {
      if (probs(i, j) > probs(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<double> adaptive_thresholds(const Matrix& probs, const RectifyConfig& cfg) {
  const auto c = probs.cols();
  std::vector<double> peak(c, -1.0);
  const auto raw = argmax_rows(probs);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) peak[raw[i]] = std::max(peak[raw[i]], probs(i, raw[i]));
  std::vector<double> sigma(c, std::numeric_limits<double>::infinity());
  for (Eigen::Index k = 0; k < c; ++k) {
    if (peak[k] >= 0) sigma[k] = std::max(peak[k] - cfg.delta, cfg.alpha);
  }
  return sigma;
}

bool PrototypeBank::empty() const {
  return std::none_of(support.begin(), support.end(), [](int s) { return s > 0; });
}

PrototypeBank build_prototypes(const Matrix& features, const std::vector<int>& labels, int num_classes) {
  require(static_cast<Eigen::Index>(labels.size()) == features.rows(), ErrorCategory::kData,
          "label count differs from feature rows");
  PrototypeBank bank;
  bank.prototypes = Matrix::Zero(num_classes, features.cols());
  bank.support.assign(num_classes, 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const int y = labels[i];
    if (y < 0) continue;
    require(y < num_classes, ErrorCategory::kData, "label outside the class range");
    bank.prototypes.row(y) += features.row(i);
    ++bank.support[y];
  }
  for (int k = 0; k < num_classes; ++k) {
    if (bank.support[k] > 0) bank.prototypes.row(k) /= bank.support[k];
  }
  return bank;
}

PrototypeLabels prototype_labels(const Matrix& features, const PrototypeBank& bank, double temperature) {
  require(!bank.empty(), ErrorCategory::kData, "empty prototype bank");
  require(features.cols() == bank.prototypes.cols(), ErrorCategory::kData, "feature and prototype widths differ");
  const int c = bank.num_classes();
  Matrix scores = features * bank.prototypes.transpose() / temperature;
  const double lowest = std::numeric_limits<double>::lowest();
  PrototypeLabels out;
  out.confidence = Matrix::Zero(features.rows(), c);
  out.cls.resize(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double m = lowest;
    int best = -1;
    for (int k = 0; k < c; ++k) {
      if (bank.has(k) && scores(i, k) > m) {
        m = scores(i, k);
        best = k;
      }
    }
    double sum = 0;
    for (int k = 0; k < c; ++k) {
      if (!bank.has(k)) continue;
      out.confidence(i, k) = std::exp(scores(i, k) - m);
      sum += out.confidence(i, k);
    }
    out.confidence.row(i) /= sum;
    out.cls[i] = best;
  }
  return out;
}

std::string_view rejection_name(Rejection reason) {
  switch (reason) {
    case Rejection::kNone: return "accepted";
    case Rejection::kBelowThreshold: return "below_threshold";
    case Rejection::kPrototypeConflict: return "prototype_conflict";
    case Rejection::kNegativeViolation: return "negative_violation";
  }
  return "unknown";
}

int PseudoLabelBatch::accepted_count() const {
  return static_cast<int>(std::count_if(items.begin(), items.end(), [](const auto& c) { return c.accepted; }));
}

std::vector<int> PseudoLabelBatch::accepted_labels() const {
  std::vector<int> out(items.size(), -1);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].accepted) out[i] = items[i].classifier_class;
  }
  return out;
}

std::vector<int> pseudo_candidates(const LabelSet& labels, int iteration) {
  std::vector<int> out;
  for (int p = 0; p < labels.num_points; ++p) {
    if (labels.pseudo.contains(p) || labels.sparse.contains(p) || labels.propagated.contains(p)) continue;
    if (iteration == 0 && !labels.negative.contains(p)) continue;
    out.push_back(p);
  }
  return out;
}

PseudoLabelBatch estimate_pseudo_labels(const Matrix& probs, const PrototypeLabels& proto, const LabelSet& labels,
                                        const std::vector<int>& points, const RectifyConfig& cfg, int iteration) {
  return estimate_pseudo_labels(probs, proto, labels, points, adaptive_thresholds(probs, cfg),
                                adaptive_thresholds(proto.confidence, cfg), iteration);
}

PseudoLabelBatch estimate_pseudo_labels(const Matrix& probs, const PrototypeLabels& proto, const LabelSet& labels,
                                        const std::vector<int>& points, const std::vector<double>& sigma,
                                        const std::vector<double>& sigma_proto, int iteration) {
  require(probs.rows() == static_cast<Eigen::Index>(points.size()), ErrorCategory::kData,
          "probability rows differ from candidate points");
  require(proto.confidence.rows() == probs.rows(), ErrorCategory::kData, "prototype rows differ from candidates");
  require(static_cast<Eigen::Index>(sigma.size()) == probs.cols() &&
              static_cast<Eigen::Index>(sigma_proto.size()) == proto.confidence.cols(),
          ErrorCategory::kData, "threshold count differs from class count");
  const auto raw = argmax_rows(probs);
  PseudoLabelBatch batch;
  batch.iteration = iteration;
  batch.items.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& item = batch.items[i];
    item.point = points[i];
    item.classifier_class = raw[i];
    item.prototype_class = proto.cls[i];
    item.confidence = probs(i, raw[i]);
    item.prototype_confidence = proto.confidence(i, proto.cls[i]);
    if (item.confidence < sigma[raw[i]] || item.prototype_confidence < sigma_proto[item.prototype_class]) {
      item.reason = Rejection::kBelowThreshold;
    } else if (item.classifier_class != item.prototype_class) {
      item.reason = Rejection::kPrototypeConflict;
    } else if (iteration == 0) {
      auto it = labels.negative.find(item.point);
      if (it == labels.negative.end() || !mask_has(it->second, item.classifier_class)) {
        item.reason = Rejection::kNegativeViolation;
      }
    }
    item.accepted = item.reason == Rejection::kNone;
  }
  return batch;
}

PseudoLabelBatch estimate_pseudo_labels(const Matrix& probs, const Matrix& features, const PrototypeBank& bank,
                                        const LabelSet& labels, const std::vector<int>& points,
                                        const RectifyConfig& cfg, int iteration, double temperature) {
  require(features.rows() == probs.rows(), ErrorCategory::kData, "feature rows differ from probability rows");
  return estimate_pseudo_labels(probs, prototype_labels(features, bank, temperature), labels, points, cfg, iteration);
}

FilterSpec parse_filter(const std::string& text) {
  FilterSpec spec;
  if (text == "esl") {
    spec.method = FilterMethod::kEsl;
  } else if (text == "dars") {
    spec.method = FilterMethod::kDars;
  } else if (text == "fix") {
    spec.method = FilterMethod::kFix;
  } else if (text.rfind("fix:", 0) == 0) {
    spec.method = FilterMethod::kFix;
    try {
      spec.threshold = std::stod(text.substr(4));
    } catch (const std::exception&) {
      fail(ErrorCategory::kConfig, "bad fix threshold in '" + text + "'");
    }
  } else {
    fail(ErrorCategory::kConfig, "unknown filter method '" + text + "'");
  }
  return spec;
}

std::vector<bool> fix_filter(const Matrix& probs, double threshold) {
  std::vector<bool> out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[i] = probs.row(i).maxCoeff() >= threshold;
  return out;
}

std::vector<bool> esl_filter(const Matrix& probs) {
  const auto raw = argmax_rows(probs);
  std::vector<double> entropy(probs.rows(), 0.0);
  std::vector<std::vector<double>> per_class(probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(i, j);
      if (p > 0) entropy[i] -= p * std::log(p);
    }
    per_class[raw[i]].push_back(entropy[i]);
  }
  std::vector<double> median(probs.cols(), 0.0);
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    auto& v = per_class[k];
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    median[k] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  std::vector<bool> out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[i] = entropy[i] <= median[raw[i]];
  return out;
}

std::vector<bool> dars_filter(const Matrix& probs, const std::vector<double>& target) {
  const auto c = probs.cols();
  require(static_cast<Eigen::Index>(target.size()) == c, ErrorCategory::kData,
          "target proportion length differs from class count");
  const auto raw = argmax_rows(probs);
  std::vector<std::vector<Eigen::Index>> rows(c);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) rows[raw[i]].push_back(i);
  auto quota = [&](long long k, Eigen::Index cls) { return std::llround(static_cast<double>(k) * target[cls]); };
  auto feasible = [&](long long k) {
    for (Eigen::Index cls = 0; cls < c; ++cls) {
      if (quota(k, cls) > static_cast<long long>(rows[cls].size())) return false;
    }
    return true;
  };
  // round(k pi_c) is non-decreasing in k, so feasibility is monotone.
  long long best = 0, hi = static_cast<long long>(probs.rows()) * 4 + 4;
  while (best < hi) {
    const long long mid = best + (hi - best + 1) / 2;
    if (feasible(mid)) best = mid; else hi = mid - 1;
  }
  std::vector<bool> out(probs.rows(), false);
  for (Eigen::Index cls = 0; cls < c; ++cls) {
    auto& r = rows[cls];
    std::stable_sort(r.begin(), r.end(), [&](Eigen::Index a, Eigen::Index b) { return probs(a, cls) > probs(b, cls); });
    const long long take = quota(best, cls);
    for (long long t = 0; t < take; ++t) out[r[t]] = true;
  }
  return out;
}

std::vector<bool> baseline_filter(const Matrix& probs, const FilterSpec& spec) {
  switch (spec.method) {
    case FilterMethod::kFix: return fix_filter(probs, spec.threshold);
    case FilterMethod::kEsl: return esl_filter(probs);
    case FilterMethod::kDars: return dars_filter(probs, spec.target_proportion);
  }
  fail(ErrorCategory::kConfig, "unknown filter method");
}

int merge_pseudo_labels(LabelSet& labels, const PseudoLabelBatch& batch) {
  int added = 0;
  for (const auto& item : batch.items) {
    if (!item.accepted || labels.pseudo.contains(item.point)) continue;
    labels.pseudo[item.point] = {item.classifier_class, item.confidence, batch.iteration};
    ++added;
  }
  return added;
}

}  // namespace weaklab
