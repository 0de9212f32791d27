#include "cqms/sql/similarity.hpp"

#include "cqms/error.hpp"

namespace cqms::sql {

void SimilarityWeights::validate() const {
  if (sources < 0 || attributes < 0 || predicates < 0 || joins < 0)
    throw Error(ErrorCode::kInvalidWeights, "similarity weights must be non-negative");
  if (sources + attributes + predicates + joins <= 0)
    throw Error(ErrorCode::kInvalidWeights, "similarity weights must not all be zero");
}

std::set<std::string> predicate_templates(const FeatureSet& fs) {
  std::set<std::string> out;
  for (const auto& p : fs.predicates) out.insert(p.template_key());
  return out;
}

double similarity(const FeatureSet& a, const FeatureSet& b, const SimilarityWeights& w) {
  w.validate();
  double total = 0;
  if (w.sources > 0) total += w.sources * jaccard(a.data_sources, b.data_sources);
  if (w.attributes > 0) total += w.attributes * jaccard(a.attributes, b.attributes);
  if (w.predicates > 0)
    total += w.predicates * jaccard(predicate_templates(a), predicate_templates(b));
  if (w.joins > 0) total += w.joins * jaccard(a.join_pairs, b.join_pairs);
  return total / (w.sources + w.attributes + w.predicates + w.joins);
}

}  // namespace cqms::sql
