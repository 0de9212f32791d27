#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cqms/sql/diff.hpp"
#include "cqms/sql/features.hpp"
#include "cqms/sql/schema.hpp"

namespace cqms {

using Qid = std::uint64_t;
using Seq = std::uint64_t;

namespace store {

enum class Validity { kValid, kFlaggedSchema, kDeleted };
enum class Visibility { kPrivate, kGroup, kPublic };
enum class EdgeType { kTemporal, kModification, kInvestigation };
enum class SummaryMode { kFull, kSample };

std::string_view validity_name(Validity v);
std::string_view visibility_name(Visibility v);
std::string_view edge_type_name(EdgeType t);
std::string_view summary_mode_name(SummaryMode m);
Validity parse_validity(std::string_view name);
Visibility parse_visibility(std::string_view name);
EdgeType parse_edge_type(std::string_view name);
SummaryMode parse_summary_mode(std::string_view name);

/// A single typed output value.
struct Value {
  std::variant<std::monostate, bool, std::int64_t, double, std::string> v;

  bool is_null() const { return v.index() == 0; }
  /// Numbers compare by value across int/double; other kinds must match.
  bool operator==(const Value& o) const;
  /// Total order used to sort rows into multisets.
  bool operator<(const Value& o) const;
  std::string to_string() const;
};

using Row = std::vector<Value>;

struct RuntimeStats {
  std::int64_t execution_ms = 0;
  std::optional<std::int64_t> result_cardinality;
  EpochMs last_executed_at = 0;
  EpochMs stats_as_of = 0;

  bool operator==(const RuntimeStats&) const = default;
};

struct OutputSummary {
  std::uint64_t id = 0;
  SummaryMode mode = SummaryMode::kFull;
  std::vector<std::string> columns;
  std::vector<Row> tuples;
  std::uint64_t source_cardinality = 0;
  std::uint64_t budget_rows = 0;
  std::uint64_t rng_seed = 0;
};

struct Annotation {
  Qid target = 0;
  std::optional<std::pair<std::size_t, std::size_t>> span;  // [begin, end) bytes
  std::string author;
  std::string text;
  EpochMs created_at = 0;
};

struct SessionEdge {
  Qid from = 0;
  Qid to = 0;
  EdgeType type = EdgeType::kTemporal;
  std::optional<sql::EditScript> edit_script;
};

struct StoredQuery {
  Qid qid = 0;
  std::string raw_text;
  std::string canonical_text;  // empty when the text did not parse
  std::string template_text;
  std::string parse_error;     // why features are empty, if they are
  sql::FeatureSet features;
  std::string owner;
  std::set<std::string> groups;
  EpochMs submitted_at = 0;
  RuntimeStats stats;
  std::optional<std::uint64_t> summary_ref;
  std::optional<Qid> session_id;
  Validity validity = Validity::kValid;
  std::vector<std::string> flag_reasons;
  Visibility visibility = Visibility::kGroup;
  std::vector<Annotation> annotations;

  bool parsed() const { return !canonical_text.empty(); }
};

/// Who is asking. A superuser sees everything (auth mode "none", local CLI).
struct Principal {
  std::string user;
  std::set<std::string> groups;
  bool superuser = false;

  static Principal root() { return {"", {}, true}; }
};

bool visible_to(const StoredQuery& q, const Principal& p);

// Log events.

struct QueryAdded {
  StoredQuery query;  // qid assigned by the store
  std::optional<OutputSummary> summary;
};
struct AnnotationAdded {
  Annotation annotation;
};
struct EdgeAdded {
  SessionEdge edge;
};
struct SchemaAdded {
  sql::SchemaSnapshot schema;
};
struct FlagChanged {
  Qid qid = 0;
  Validity validity = Validity::kValid;
  std::vector<std::string> reasons;
};
struct AccessChanged {
  Qid qid = 0;
  Visibility visibility = Visibility::kGroup;
};
struct QueryDeleted {
  Qid qid = 0;
};
struct SessionAssigned {
  Qid qid = 0;
  Qid session_id = 0;
};

using Event = std::variant<QueryAdded, AnnotationAdded, EdgeAdded, SchemaAdded, FlagChanged,
                           AccessChanged, QueryDeleted, SessionAssigned>;

std::string_view event_type_name(const Event& e);

}  // namespace store
}  // namespace cqms
