#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cqms/codec.hpp"
#include "cqms/store/store.hpp"

namespace cqms::maintenance {

/// Names a query uses that the schema lacks, as "missing-relation(r)" and
/// "missing-attribute(a@r)" reasons. Empty when everything resolves.
std::vector<std::string> schema_problems(const sql::FeatureSet& features,
                                         const sql::SchemaSnapshot& schema);

/// Re-resolves a stored query against `schema` and reports its problems.
/// Queries that never parsed have nothing to resolve.
std::vector<std::string> check_against_schema(const store::StoredQuery& q,
                                              const sql::SchemaSnapshot& schema);

struct FlaggedQuery {
  Qid qid = 0;
  std::vector<std::string> reasons;
};

struct MaintenanceReport {
  EpochMs run_at = 0;
  std::vector<FlaggedQuery> newly_flagged;
  std::vector<Qid> stale_stats;
  std::vector<Qid> unflagged;
  /// Queries re-resolved; the rest were skipped by the timestamp shortcut.
  std::size_t checked = 0;
};

codec::Json to_json(const MaintenanceReport& r);

struct QualityWeights {
  double efficiency = 1.0;
  double simplicity = 1.0;
  double annotations = 1.0;

  /// Throws InvalidWeights.
  void validate() const;
};

struct QualityScore {
  double score = 0.0;
  double efficiency = 0.0;
  double simplicity = 0.0;
  double annotations = 0.0;
};

codec::Json to_json(const QualityScore& s);

struct MaintenanceOptions {
  /// Skip queries submitted after the current schema took effect; they were
  /// checked against it when they were logged.
  bool timestamp_shortcut = true;
};

class Maintenance {
 public:
  explicit Maintenance(store::Store& store, MaintenanceOptions options = {});

  /// Flags queries the current schema no longer supports and clears flags
  /// that no longer apply. Throws NoSchema.
  MaintenanceReport flag_invalid();

  /// Queries whose statistics predate `data_changed_at` and that read one of
  /// `relations` (any relation when unset), most popular template first.
  std::vector<Qid> mark_stale_stats(EpochMs data_changed_at,
                                    const std::optional<std::set<std::string>>& relations = {}) const;

  /// Throws NotFound when the query is not visible to the principal.
  QualityScore quality_score(Qid qid, const store::Principal& principal,
                             const QualityWeights& weights = {}) const;

  /// flag_invalid (when a schema exists) plus mark_stale_stats (when a data
  /// change time is given), in one report.
  MaintenanceReport run(std::optional<EpochMs> data_changed_at = std::nullopt,
                        const std::optional<std::set<std::string>>& relations = {});

 private:
  store::Store& store_;
  MaintenanceOptions options_;
};

}  // namespace cqms::maintenance
