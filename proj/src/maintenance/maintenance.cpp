#include "cqms/maintenance/maintenance.hpp"

#include <algorithm>
#include <unordered_map>

#include "cqms/error.hpp"
#include "cqms/meta/meta_query.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/parser.hpp"

namespace cqms::maintenance {

std::vector<std::string> schema_problems(const sql::FeatureSet& fs, const sql::SchemaSnapshot& schema) {
  std::set<std::string> reasons;
  bool all_sources_known = true;
  for (const auto& r : fs.data_sources) {
    if (!schema.has_relation(r)) {
      reasons.insert("missing-relation(" + r + ")");
      all_sources_known = false;
    }
  }
  const std::vector<std::string> scope(fs.data_sources.begin(), fs.data_sources.end());
  const auto check = [&](const std::string& attr, const std::string& rel) {
    if (attr == "*" || attr.empty()) return;
    if (rel == sql::kUnresolved) {
      // Unqualified and not tied to one relation: missing only if no relation
      // in scope defines it and every relation in scope is known.
      if (all_sources_known && !scope.empty() && schema.owners(attr, scope).empty())
        reasons.insert("missing-attribute(" + attr + "@" + rel + ")");
    } else if (schema.has_relation(rel) && !schema.has_attribute(rel, attr)) {
      reasons.insert("missing-attribute(" + attr + "@" + rel + ")");
    }
  };
  for (const auto& a : fs.attributes) check(a.attribute, a.relation);
  for (const auto& p : fs.predicates) check(p.attribute, p.relation);
  for (const auto& a : fs.aggregates) check(a.attribute, a.relation);
  return {reasons.begin(), reasons.end()};
}

std::vector<std::string> check_against_schema(const store::StoredQuery& q,
                                              const sql::SchemaSnapshot& schema) {
  if (!q.parsed()) return {};
  return schema_problems(sql::extract_features(sql::parse(q.canonical_text), &schema), schema);
}

codec::Json to_json(const MaintenanceReport& r) {
  codec::Json flagged = codec::Json::array();
  for (const auto& f : r.newly_flagged)
    flagged.push_back({{"qid", codec::id_string(f.qid)}, {"reasons", f.reasons}});
  const auto ids = [](const std::vector<Qid>& v) {
    codec::Json a = codec::Json::array();
    for (Qid q : v) a.push_back(codec::id_string(q));
    return a;
  };
  return {{"run_at", r.run_at},
          {"newly_flagged", std::move(flagged)},
          {"stale_stats", ids(r.stale_stats)},
          {"unflagged", ids(r.unflagged)},
          {"checked", r.checked}};
}

void QualityWeights::validate() const {
  if (efficiency < 0 || simplicity < 0 || annotations < 0)
    throw Error(ErrorCode::kInvalidWeights, "quality weights must be non-negative");
  if (efficiency + simplicity + annotations <= 0)
    throw Error(ErrorCode::kInvalidWeights, "quality weights must not all be zero");
}

codec::Json to_json(const QualityScore& s) {
  return {{"score", s.score},
          {"efficiency", s.efficiency},
          {"simplicity", s.simplicity},
          {"annotations", s.annotations}};
}

namespace {

double raw_efficiency(const store::StoredQuery& q) {
  return 1.0 / (1.0 + static_cast<double>(q.stats.execution_ms) / 1000.0);
}

double raw_simplicity(const store::StoredQuery& q) {
  const auto& f = q.features;
  return 1.0 / (1.0 + static_cast<double>(f.predicates.size() + f.data_sources.size()) +
                (f.has_subquery ? 2.0 : 0.0));
}

}  // namespace

Maintenance::Maintenance(store::Store& store, MaintenanceOptions options)
    : store_(store), options_(options) {}

MaintenanceReport Maintenance::flag_invalid() {
  store::Store::Batch batch(store_);
  const auto snap = store_.snapshot();
  const sql::SchemaSnapshot& schema = snap->current_schema();
  MaintenanceReport report;
  report.run_at = store_.now();
  snap->for_each([&](const store::StoredQuery& q) {
    if (options_.timestamp_shortcut && q.submitted_at >= schema.effective_at) return;
    ++report.checked;
    auto reasons = check_against_schema(q, schema);
    if (!reasons.empty()) {
      if (q.validity == store::Validity::kFlaggedSchema && q.flag_reasons == reasons) return;
      store_.append(store::FlagChanged{q.qid, store::Validity::kFlaggedSchema, reasons});
      report.newly_flagged.push_back({q.qid, std::move(reasons)});
    } else if (q.validity == store::Validity::kFlaggedSchema) {
      store_.append(store::FlagChanged{q.qid, store::Validity::kValid, {}});
      report.unflagged.push_back(q.qid);
    }
  });
  return report;
}

std::vector<Qid> Maintenance::mark_stale_stats(
    EpochMs data_changed_at, const std::optional<std::set<std::string>>& relations) const {
  const auto snap = store_.snapshot();
  std::unordered_map<std::string, std::uint32_t> popularity;
  snap->for_each([&](const store::StoredQuery& q) { ++popularity[meta::CorpusStats::template_key(q)]; });
  std::vector<std::pair<std::uint32_t, Qid>> stale;
  snap->for_each([&](const store::StoredQuery& q) {
    if (q.stats.stats_as_of >= data_changed_at) return;
    if (relations && std::none_of(q.features.data_sources.begin(), q.features.data_sources.end(),
                                  [&](const std::string& r) { return relations->count(r) > 0; }))
      return;
    stale.emplace_back(popularity[meta::CorpusStats::template_key(q)], q.qid);
  });
  std::sort(stale.begin(), stale.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<Qid> out;
  for (const auto& [_, qid] : stale) out.push_back(qid);
  return out;
}

QualityScore Maintenance::quality_score(Qid qid, const store::Principal& principal,
                                        const QualityWeights& w) const {
  w.validate();
  const auto snap = store_.snapshot();
  const store::StoredQuery& q = snap->get(qid, principal);
  double max_eff = 0.0, max_simple = 0.0;
  snap->for_each([&](const store::StoredQuery& other) {
    max_eff = std::max(max_eff, raw_efficiency(other));
    max_simple = std::max(max_simple, raw_simplicity(other));
  });
  QualityScore s;
  s.efficiency = raw_efficiency(q) / max_eff;
  s.simplicity = raw_simplicity(q) / max_simple;
  s.annotations = std::min(1.0, static_cast<double>(q.annotations.size()) / 3.0);
  s.score = (w.efficiency * s.efficiency + w.simplicity * s.simplicity + w.annotations * s.annotations) /
            (w.efficiency + w.simplicity + w.annotations);
  return s;
}

MaintenanceReport Maintenance::run(std::optional<EpochMs> data_changed_at,
                                   const std::optional<std::set<std::string>>& relations) {
  MaintenanceReport report;
  if (store_.snapshot()->has_schema()) report = flag_invalid();
  else report.run_at = store_.now();
  if (data_changed_at) report.stale_stats = mark_stale_stats(*data_changed_at, relations);
  return report;
}

}  // namespace cqms::maintenance
