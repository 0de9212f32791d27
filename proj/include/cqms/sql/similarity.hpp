#pragma once

#include <set>

#include "cqms/sql/features.hpp"

namespace cqms::sql {

/// Per-component weights of the feature similarity. Components: data
/// sources, attribute uses, predicate templates (constants ignored) and
/// join pairs.
struct SimilarityWeights {
  double sources = 1.0;
  double attributes = 1.0;
  double predicates = 1.0;
  double joins = 1.0;

  /// Throws InvalidWeights if any weight is negative or all are zero.
  void validate() const;
};

/// |a ∩ b| / |a ∪ b|, with jaccard(∅, ∅) = 1.
template <typename T>
double jaccard(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

/// Weighted mean of the per-component Jaccard similarities, in [0, 1].
double similarity(const FeatureSet& a, const FeatureSet& b,
                  const SimilarityWeights& weights = {});

/// Predicates with their constants stripped ("temp@watertemp <").
std::set<std::string> predicate_templates(const FeatureSet& fs);

}  // namespace cqms::sql
