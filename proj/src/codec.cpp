#include "cqms/codec.hpp"

#include <charconv>

#include "cqms/error.hpp"

namespace cqms::codec {

using namespace store;

namespace {

template <typename T>
std::optional<T> opt(const Json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::string str_or(const Json& j, const char* field, std::string fallback = {}) {
  auto it = j.find(field);
  return it == j.end() || it->is_null() ? fallback : it->get<std::string>();
}

}  // namespace

const Json& require(const Json& j, const char* field) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "expected a JSON object");
  auto it = j.find(field);
  if (it == j.end()) throw Error(ErrorCode::kInvalidArgument, std::string("missing field '") +
                                                                  field + "'");
  return *it;
}

std::string id_string(std::uint64_t id) { return std::to_string(id); }

std::uint64_t parse_id(const Json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    std::uint64_t out = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty()) return out;
  }
  throw Error(ErrorCode::kInvalidArgument, "invalid id: " + j.dump());
}

Json to_json(const sql::FeatureSet& fs) {
  Json j = Json::object();
  j["data_sources"] = fs.data_sources;
  Json attrs = Json::array();
  for (const auto& a : fs.attributes)
    attrs.push_back({{"attr", a.attribute}, {"rel", a.relation}, {"role", sql::role_name(a.role)}});
  j["attributes"] = std::move(attrs);
  Json preds = Json::array();
  for (const auto& p : fs.predicates)
    preds.push_back({{"attr", p.attribute}, {"rel", p.relation}, {"op", p.op}, {"const", p.constant}});
  j["predicates"] = std::move(preds);
  Json joins = Json::array();
  for (const auto& jp : fs.join_pairs) joins.push_back({jp.first, jp.second});
  j["join_pairs"] = std::move(joins);
  Json aggs = Json::array();
  for (const auto& a : fs.aggregates)
    aggs.push_back({{"fn", a.function}, {"attr", a.attribute}, {"rel", a.relation}});
  j["aggregates"] = std::move(aggs);
  j["has_subquery"] = fs.has_subquery;
  return j;
}

sql::FeatureSet features_from_json(const Json& j) {
  sql::FeatureSet fs;
  for (const auto& s : j.value("data_sources", Json::array())) fs.data_sources.insert(s.get<std::string>());
  for (const auto& a : j.value("attributes", Json::array()))
    fs.attributes.insert({a.at("attr").get<std::string>(), a.at("rel").get<std::string>(),
                          sql::parse_role(a.at("role").get<std::string>())});
  for (const auto& p : j.value("predicates", Json::array()))
    fs.predicates.insert({p.at("attr").get<std::string>(), p.at("rel").get<std::string>(),
                          p.at("op").get<std::string>(), p.at("const").get<std::string>()});
  for (const auto& jp : j.value("join_pairs", Json::array()))
    fs.join_pairs.insert(sql::JoinPair::of(jp.at(0).get<std::string>(), jp.at(1).get<std::string>()));
  for (const auto& a : j.value("aggregates", Json::array()))
    fs.aggregates.insert({a.at("fn").get<std::string>(), a.at("attr").get<std::string>(),
                          a.at("rel").get<std::string>()});
  fs.has_subquery = j.value("has_subquery", false);
  return fs;
}

Json to_json(const sql::Edit& e) {
  Json j = {{"kind", sql::edit_kind_name(e.kind)}};
  if (!e.relation.empty()) j["relation"] = e.relation;
  if (!e.attribute.empty()) j["attribute"] = e.attribute;
  if (!e.op.empty()) j["op"] = e.op;
  if (!e.old_value.empty()) j["old"] = e.old_value;
  if (!e.new_value.empty()) j["new"] = e.new_value;
  if (!e.detail.empty()) j["detail"] = e.detail;
  j["label"] = e.label();
  return j;
}

Json to_json(const sql::EditScript& s) {
  Json j = Json::array();
  for (const auto& e : s) j.push_back(to_json(e));
  return j;
}

sql::EditScript edit_script_from_json(const Json& j) {
  sql::EditScript out;
  for (const auto& e : j) {
    sql::Edit edit;
    edit.kind = sql::parse_edit_kind(e.at("kind").get<std::string>());
    edit.relation = str_or(e, "relation");
    edit.attribute = str_or(e, "attribute");
    edit.op = str_or(e, "op");
    edit.old_value = str_or(e, "old");
    edit.new_value = str_or(e, "new");
    edit.detail = str_or(e, "detail");
    out.push_back(std::move(edit));
  }
  return out;
}

Json to_json(const sql::SchemaSnapshot& s) {
  Json rels = Json::object();
  for (const auto& [name, cols] : s.relations) {
    Json arr = Json::array();
    for (const auto& c : cols) arr.push_back({{"name", c.name}, {"type", c.type}});
    rels[name] = std::move(arr);
  }
  return {{"effective_at", s.effective_at}, {"relations", std::move(rels)}};
}

sql::SchemaSnapshot schema_from_json(const Json& j) {
  sql::SchemaSnapshot s;
  s.effective_at = j.value("effective_at", EpochMs{0});
  const Json& rels = require(j, "relations");
  if (!rels.is_object()) throw Error(ErrorCode::kInvalidArgument, "'relations' must be an object");
  for (const auto& [name, cols] : rels.items()) {
    auto& out = s.relations[name];
    for (const auto& c : cols) {
      if (c.is_string()) out.push_back({c.get<std::string>(), ""});
      else out.push_back({c.at("name").get<std::string>(), c.value("type", std::string())});
    }
  }
  return sql::SchemaSnapshot::normalized(std::move(s));
}

Json to_json(const Value& v) {
  switch (v.v.index()) {
    case 0: return nullptr;
    case 1: return std::get<bool>(v.v);
    case 2: return std::get<std::int64_t>(v.v);
    case 3: return std::get<double>(v.v);
    default: return std::get<std::string>(v.v);
  }
}

Value value_from_json(const Json& j) {
  if (j.is_null()) return {};
  if (j.is_boolean()) return {j.get<bool>()};
  if (j.is_number_integer()) return {j.get<std::int64_t>()};
  if (j.is_number()) return {j.get<double>()};
  if (j.is_string()) return {j.get<std::string>()};
  throw Error(ErrorCode::kInvalidArgument, "output values must be scalars: " + j.dump());
}

Json to_json(const RuntimeStats& s) {
  Json j = {{"execution_ms", s.execution_ms}};
  j["result_cardinality"] = s.result_cardinality ? Json(*s.result_cardinality) : Json(nullptr);
  j["last_executed_at"] = s.last_executed_at;
  j["stats_as_of"] = s.stats_as_of;
  return j;
}

RuntimeStats stats_from_json(const Json& j) {
  RuntimeStats s;
  s.execution_ms = j.value("execution_ms", std::int64_t{0});
  s.result_cardinality = opt<std::int64_t>(j, "result_cardinality");
  s.last_executed_at = j.value("last_executed_at", EpochMs{0});
  s.stats_as_of = j.value("stats_as_of", EpochMs{0});
  return s;
}

Json to_json(const OutputSummary& s) {
  Json rows = Json::array();
  for (const auto& r : s.tuples) {
    Json row = Json::array();
    for (const auto& v : r) row.push_back(to_json(v));
    rows.push_back(std::move(row));
  }
  return {{"id", id_string(s.id)},
          {"mode", summary_mode_name(s.mode)},
          {"columns", s.columns},
          {"tuples", std::move(rows)},
          {"source_cardinality", s.source_cardinality},
          {"budget_rows", s.budget_rows},
          {"rng_seed", id_string(s.rng_seed)}};
}

OutputSummary summary_from_json(const Json& j) {
  OutputSummary s;
  s.id = parse_id(j.at("id"));
  s.mode = parse_summary_mode(j.at("mode").get<std::string>());
  s.columns = j.value("columns", std::vector<std::string>{});
  for (const auto& r : j.at("tuples")) {
    Row row;
    for (const auto& v : r) row.push_back(value_from_json(v));
    s.tuples.push_back(std::move(row));
  }
  s.source_cardinality = j.at("source_cardinality").get<std::uint64_t>();
  s.budget_rows = j.at("budget_rows").get<std::uint64_t>();
  s.rng_seed = parse_id(j.at("rng_seed"));
  return s;
}

Json to_json(const Annotation& a) {
  Json j = {{"qid", id_string(a.target)}};
  j["span"] = a.span ? Json::array({a.span->first, a.span->second}) : Json(nullptr);
  j["author"] = a.author;
  j["text"] = a.text;
  j["created_at"] = a.created_at;
  return j;
}

Annotation annotation_from_json(const Json& j) {
  Annotation a;
  a.target = parse_id(require(j, "qid"));
  if (auto it = j.find("span"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2)
      throw Error(ErrorCode::kInvalidArgument, "span must be [begin, end]");
    a.span = std::make_pair(it->at(0).get<std::size_t>(), it->at(1).get<std::size_t>());
  }
  a.author = str_or(j, "author");
  a.text = require(j, "text").get<std::string>();
  a.created_at = j.value("created_at", EpochMs{0});
  return a;
}

Json to_json(const SessionEdge& e) {
  Json j = {{"from", id_string(e.from)}, {"to", id_string(e.to)}, {"type", edge_type_name(e.type)}};
  j["edit_script"] = e.edit_script ? to_json(*e.edit_script) : Json(nullptr);
  return j;
}

SessionEdge edge_from_json(const Json& j) {
  SessionEdge e;
  e.from = parse_id(j.at("from"));
  e.to = parse_id(j.at("to"));
  e.type = parse_edge_type(j.at("type").get<std::string>());
  if (auto it = j.find("edit_script"); it != j.end() && !it->is_null())
    e.edit_script = edit_script_from_json(*it);
  return e;
}

namespace {

// The part of a query fixed at ingest time.
Json query_core(const StoredQuery& q) {
  Json j = {{"qid", id_string(q.qid)},
            {"raw_text", q.raw_text},
            {"canonical_text", q.canonical_text},
            {"template_text", q.template_text}};
  if (!q.parse_error.empty()) j["parse_error"] = q.parse_error;
  j["features"] = to_json(q.features);
  j["owner"] = q.owner;
  j["groups"] = q.groups;
  j["submitted_at"] = q.submitted_at;
  j["stats"] = to_json(q.stats);
  j["summary_ref"] = q.summary_ref ? Json(id_string(*q.summary_ref)) : Json(nullptr);
  j["visibility"] = visibility_name(q.visibility);
  return j;
}

StoredQuery query_core_from_json(const Json& j) {
  StoredQuery q;
  q.qid = parse_id(j.at("qid"));
  q.raw_text = j.at("raw_text").get<std::string>();
  q.canonical_text = str_or(j, "canonical_text");
  q.template_text = str_or(j, "template_text");
  q.parse_error = str_or(j, "parse_error");
  q.features = features_from_json(j.at("features"));
  q.owner = str_or(j, "owner");
  q.groups = j.value("groups", std::set<std::string>{});
  q.submitted_at = j.value("submitted_at", EpochMs{0});
  q.stats = stats_from_json(j.at("stats"));
  if (auto it = j.find("summary_ref"); it != j.end() && !it->is_null())
    q.summary_ref = parse_id(*it);
  q.visibility = parse_visibility(j.value("visibility", std::string("group")));
  return q;
}

}  // namespace

Json to_json(const StoredQuery& q) {
  Json j = query_core(q);
  j["session_id"] = q.session_id ? Json(id_string(*q.session_id)) : Json(nullptr);
  j["validity"] = validity_name(q.validity);
  j["flag_reasons"] = q.flag_reasons;
  Json notes = Json::array();
  for (const auto& a : q.annotations) notes.push_back(to_json(a));
  j["annotations"] = std::move(notes);
  return j;
}

StoredQuery query_from_json(const Json& j) {
  StoredQuery q = query_core_from_json(j);
  if (auto it = j.find("session_id"); it != j.end() && !it->is_null()) q.session_id = parse_id(*it);
  q.validity = parse_validity(j.value("validity", std::string("valid")));
  q.flag_reasons = j.value("flag_reasons", std::vector<std::string>{});
  for (const auto& a : j.value("annotations", Json::array()))
    q.annotations.push_back(annotation_from_json(a));
  return q;
}

Json event_body(const Event& e) {
  return std::visit(
      [](const auto& ev) -> Json {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, QueryAdded>) {
          return query_core(ev.query);
        } else if constexpr (std::is_same_v<T, AnnotationAdded>) {
          return to_json(ev.annotation);
        } else if constexpr (std::is_same_v<T, EdgeAdded>) {
          return to_json(ev.edge);
        } else if constexpr (std::is_same_v<T, SchemaAdded>) {
          return to_json(ev.schema);
        } else if constexpr (std::is_same_v<T, FlagChanged>) {
          return {{"qid", id_string(ev.qid)},
                  {"validity", validity_name(ev.validity)},
                  {"reasons", ev.reasons}};
        } else if constexpr (std::is_same_v<T, AccessChanged>) {
          return {{"qid", id_string(ev.qid)}, {"visibility", visibility_name(ev.visibility)}};
        } else if constexpr (std::is_same_v<T, QueryDeleted>) {
          return {{"qid", id_string(ev.qid)}};
        } else {
          return {{"qid", id_string(ev.qid)}, {"session_id", id_string(ev.session_id)}};
        }
      },
      e);
}

Event event_from_json(std::string_view type, const Json& b) {
  if (type == "QueryAdded") return QueryAdded{query_core_from_json(b), std::nullopt};
  if (type == "AnnotationAdded") return AnnotationAdded{annotation_from_json(b)};
  if (type == "EdgeAdded") return EdgeAdded{edge_from_json(b)};
  if (type == "SchemaAdded") return SchemaAdded{schema_from_json(b)};
  if (type == "FlagChanged")
    return FlagChanged{parse_id(b.at("qid")), parse_validity(b.at("validity").get<std::string>()),
                       b.value("reasons", std::vector<std::string>{})};
  if (type == "AccessChanged")
    return AccessChanged{parse_id(b.at("qid")),
                         parse_visibility(b.at("visibility").get<std::string>())};
  if (type == "QueryDeleted") return QueryDeleted{parse_id(b.at("qid"))};
  if (type == "SessionAssigned")
    return SessionAssigned{parse_id(b.at("qid")), parse_id(b.at("session_id"))};
  throw Error(ErrorCode::kStoreCorrupt, "unknown event type: " + std::string(type));
}

}  // namespace cqms::codec
