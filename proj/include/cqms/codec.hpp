#pragma once

// JSON encodings shared by the log, the HTTP API, the CLI and the Python
// binding. Field order is fixed, so equal values always encode to equal bytes.

#include "cqms/store/types.hpp"
#include "json.hpp"

namespace cqms::codec {

using Json = nlohmann::ordered_json;

Json to_json(const sql::FeatureSet& fs);
sql::FeatureSet features_from_json(const Json& j);

Json to_json(const sql::Edit& e);
Json to_json(const sql::EditScript& s);
sql::EditScript edit_script_from_json(const Json& j);

/// {"effective_at": n, "relations": {"r": [{"name": "a", "type": "t"}, ...]}}.
/// Columns may also be given as bare names.
Json to_json(const sql::SchemaSnapshot& s);
sql::SchemaSnapshot schema_from_json(const Json& j);

Json to_json(const store::Value& v);
store::Value value_from_json(const Json& j);

Json to_json(const store::RuntimeStats& s);
store::RuntimeStats stats_from_json(const Json& j);

Json to_json(const store::OutputSummary& s);
store::OutputSummary summary_from_json(const Json& j);

Json to_json(const store::Annotation& a);
store::Annotation annotation_from_json(const Json& j);

Json to_json(const store::SessionEdge& e);
store::SessionEdge edge_from_json(const Json& j);

/// Full record including the derived fields (validity, session, annotations).
Json to_json(const store::StoredQuery& q);
store::StoredQuery query_from_json(const Json& j);

/// The "body" of a log record.
Json event_body(const store::Event& e);
store::Event event_from_json(std::string_view type, const Json& body);

std::string id_string(std::uint64_t id);
std::uint64_t parse_id(const Json& j);

/// Throws InvalidArgument naming the field when it is missing or mistyped.
const Json& require(const Json& j, const char* field);

}  // namespace cqms::codec
