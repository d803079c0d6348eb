#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <string>
#include <vector>

namespace weaklab {

/// Set of classes as a bitmask; supports up to 32 classes.
using ClassMask = std::uint32_t;

inline ClassMask class_bit(int cls) { return ClassMask{1} << cls; }
inline bool mask_has(ClassMask m, int cls) { return (m >> cls) & 1U; }
int mask_count(ClassMask m);
std::vector<int> mask_classes(ClassMask m);

enum class LabelKind : std::uint8_t { kNone = 0, kSparse = 1, kPropagated = 2, kNegative = 3, kPseudo = 4 };

std::string_view kind_name(LabelKind kind);

struct PseudoLabel {
  int cls = 0;
  double confidence = 0.0;  // E-step posterior at generation time
  int iteration = 0;

  bool operator==(const PseudoLabel&) const = default;
};

/// Labels over point indices of one scene. Sparse, propagated and negative
/// maps are disjoint; pseudo labels may additionally cover negative points.
struct LabelSet {
  int num_points = 0;
  int num_classes = 0;
  std::map<int, int> sparse;
  std::map<int, int> propagated;
  std::map<int, ClassMask> negative;  // permitted classes, >= 2 of them
  std::map<int, PseudoLabel> pseudo;

  /// Definite label (sparse or propagated), or -1.
  int definite(int point) const;
  /// Highest-precedence kind: sparse, propagated, negative, pseudo.
  LabelKind kind(int point) const;
  bool is_unlabeled(int point) const { return kind(point) == LabelKind::kNone; }

  /// Throws ErrorCategory::kData when the disjointness or negative-set rules are broken.
  void validate() const;

  bool operator==(const LabelSet&) const = default;
};

/// Line-oriented export: "point_index kind class[,class...]" (pseudo adds
/// confidence and iteration). Sorted by point index then kind.
std::string to_text(const LabelSet& labels);

}  // namespace weaklab
