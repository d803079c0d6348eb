#include "weaklab/labels.hpp"

#include <bit>
#include <sstream>

#include "weaklab/error.hpp"

namespace weaklab {

int mask_count(ClassMask m) { return std::popcount(m); }

std::vector<int> mask_classes(ClassMask m) {
  std::vector<int> out;
  for (int c = 0; c < 32; ++c) {
    if (mask_has(m, c)) out.push_back(c);
  }
  return out;
}

std::string_view kind_name(LabelKind kind) {
  switch (kind) {
    case LabelKind::kNone: return "none";
    case LabelKind::kSparse: return "sparse";
    case LabelKind::kPropagated: return "propagated";
    case LabelKind::kNegative: return "negative";
    case LabelKind::kPseudo: return "pseudo";
  }
  return "none";
}

int LabelSet::definite(int point) const {
  if (auto it = sparse.find(point); it != sparse.end()) return it->second;
  if (auto it = propagated.find(point); it != propagated.end()) return it->second;
  return -1;
}

LabelKind LabelSet::kind(int point) const {
  if (sparse.contains(point)) return LabelKind::kSparse;
  if (propagated.contains(point)) return LabelKind::kPropagated;
  if (negative.contains(point)) return LabelKind::kNegative;
  if (pseudo.contains(point)) return LabelKind::kPseudo;
  return LabelKind::kNone;
}

void LabelSet::validate() const {
  auto in_range = [&](int p) { return p >= 0 && p < num_points; };
  auto class_ok = [&](int c) { return c >= 0 && c < num_classes; };
  for (const auto& [p, c] : sparse) {
    require(in_range(p) && class_ok(c), ErrorCategory::kData, "sparse label out of range");
  }
  for (const auto& [p, c] : propagated) {
    require(in_range(p) && class_ok(c), ErrorCategory::kData, "propagated label out of range");
    require(!sparse.contains(p), ErrorCategory::kData, "point has both sparse and propagated labels");
  }
  for (const auto& [p, m] : negative) {
    require(in_range(p), ErrorCategory::kData, "negative label out of range");
    require(mask_count(m) >= 2, ErrorCategory::kData, "negative set must hold at least two classes");
    require(num_classes >= 32 || (m >> num_classes) == 0, ErrorCategory::kData, "negative set names unknown class");
    require(!sparse.contains(p) && !propagated.contains(p), ErrorCategory::kData,
            "negative label overlaps a definite label");
  }
  for (const auto& [p, l] : pseudo) {
    require(in_range(p) && class_ok(l.cls), ErrorCategory::kData, "pseudo label out of range");
    require(!sparse.contains(p) && !propagated.contains(p), ErrorCategory::kData,
            "pseudo label overlaps a definite label");
    require(l.confidence >= 0.0 && l.confidence <= 1.0, ErrorCategory::kData, "pseudo confidence outside [0, 1]");
  }
}

std::string to_text(const LabelSet& labels) {
  std::ostringstream out;
  out.precision(17);
  out << "# num_points " << labels.num_points << " num_classes " << labels.num_classes << "\n";
  std::map<int, std::vector<std::string>> rows;
  for (const auto& [p, c] : labels.sparse) rows[p].push_back("sparse " + std::to_string(c));
  for (const auto& [p, c] : labels.propagated) rows[p].push_back("propagated " + std::to_string(c));
  for (const auto& [p, m] : labels.negative) {
    std::string s = "negative ";
    bool first = true;
    for (int c : mask_classes(m)) {
      s += (first ? "" : ",") + std::to_string(c);
      first = false;
    }
    rows[p].push_back(s);
  }
  for (const auto& [p, l] : labels.pseudo) {
    std::ostringstream s;
    s.precision(17);
    s << "pseudo " << l.cls << " " << l.confidence << " " << l.iteration;
    rows[p].push_back(s.str());
  }
  for (const auto& [p, entries] : rows) {
    for (const auto& e : entries) out << p << " " << e << "\n";
  }
  return out.str();
}

}  // namespace weaklab
