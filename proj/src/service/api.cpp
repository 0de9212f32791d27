#include "cqms/service/api.hpp"

#include <regex>

#include "cqms/error.hpp"
#include "cqms/meta/json.hpp"
#include "cqms/sql/lexer.hpp"

namespace cqms::service {

using codec::Json;

// ---- engine -------------------------------------------------------------------------

Engine::Engine(ServiceConfig config, std::function<EpochMs()> clock) : config_(std::move(config)) {
  config_.validate();
  store_ = std::make_unique<store::Store>(store::StoreOptions{config_.store_path, clock});
  profiler_ = std::make_unique<profiler::Profiler>(*store_, config_.profiler);
  meta::ExecutorOptions eo;
  if (clock) eo.now = clock;
  executor_ = std::make_unique<meta::Executor>(*store_, eo);
  miner_ = std::make_unique<miner::Miner>(*store_, config_.miner, eo);
  maintenance_ = std::make_unique<maintenance::Maintenance>(*store_);
  miner_->build_suggestion_model();
}

codec::Json Engine::run_mine() {
  std::lock_guard jobs(jobs_);
  const auto sessions = miner_->segment_all_sessions();
  const auto model = miner_->build_suggestion_model();
  Json j = {{"ran_at", store_->now()},
            {"sessions",
             {{"queries", sessions.queries},
              {"sessions", sessions.sessions},
              {"assignments_written", sessions.assignments_written},
              {"edges_written", sessions.edges_written}}},
            {"model_version", model->version},
            {"rules", model->rules.size()},
            {"clusters", model->clusters.size()},
            {"transactions", model->transactions}};
  std::lock_guard lock(report_mutex_);
  last_mine_ = j;
  return j;
}

codec::Json Engine::run_maintain(std::optional<EpochMs> data_changed_at,
                                 const std::optional<std::set<std::string>>& relations) {
  std::lock_guard jobs(jobs_);
  Json j = maintenance::to_json(maintenance_->run(data_changed_at, relations));
  std::lock_guard lock(report_mutex_);
  last_maintain_ = j;
  return j;
}

codec::Json Engine::last_report() const {
  std::lock_guard lock(report_mutex_);
  return {{"mine", last_mine_}, {"maintenance", last_maintain_}};
}

store::Principal Engine::principal(const std::string& user, const std::set<std::string>& groups) const {
  if (config_.auth == AuthMode::kNone) {
    auto p = store::Principal::root();
    if (!user.empty()) p.user = user;
    return p;
  }
  store::Principal p{user.empty() ? "anonymous" : user, groups, false};
  p.superuser = config_.admins.count(p.user) > 0;
  return p;
}

// ---- helpers ------------------------------------------------------------------------

int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kNotFound:
    case ErrorCode::kDeleted:
      return 404;
    case ErrorCode::kPermissionDenied:
      return 403;
    default:
      return e.is_user_error() ? 400 : 500;
  }
}

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); }

Json parse_body(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    bad(std::string("request body is not valid JSON: ") + e.what());
  }
}

Qid parse_qid(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 19)
    throw Error(ErrorCode::kNotFound, "query " + s + " not found");
  return std::stoull(s);
}

std::optional<std::string> param(const Request& r, const std::string& key) {
  auto it = r.params.find(key);
  if (it == r.params.end()) return std::nullopt;
  return it->second;
}

std::int64_t int_param(const Request& r, const std::string& key, std::int64_t fallback) {
  const auto v = param(r, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const auto n = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument(key);
    return n;
  } catch (const std::exception&) {
    bad("parameter '" + key + "' must be an integer");
  }
}

std::size_t positive_param(const Request& r, const std::string& key, std::size_t fallback) {
  const auto n = int_param(r, key, static_cast<std::int64_t>(fallback));
  if (n < 1) bad("parameter '" + key + "' must be at least 1");
  return static_cast<std::size_t>(n);
}

void require_admin(const Request& r) {
  if (!r.principal.superuser) throw Error(ErrorCode::kPermissionDenied, "administrators only");
}

/// Owner-only operations: invisible is 404, visible but not yours is 403.
const store::StoredQuery& owned(const store::Snapshot& snap, Qid qid, const store::Principal& p) {
  const auto& q = snap.get(qid, p);
  if (!p.superuser && q.owner != p.user)
    throw Error(ErrorCode::kPermissionDenied, "only the owner may change query " + std::to_string(qid));
  return q;
}

Json brief(const store::StoredQuery& q) {
  return {{"qid", codec::id_string(q.qid)},
          {"text", q.raw_text},
          {"owner", q.owner},
          {"submitted_at", q.submitted_at},
          {"execution_ms", q.stats.execution_ms},
          {"result_cardinality", q.stats.result_cardinality ? Json(*q.stats.result_cardinality) : Json()},
          {"visibility", store::visibility_name(q.visibility)},
          {"validity", store::validity_name(q.validity)},
          {"flag_reasons", q.flag_reasons}};
}

Json results(const store::Snapshot& snap, const std::vector<meta::MatchResult>& rs) {
  Json out = Json::array();
  for (const auto& r : rs) {
    Json j = meta::to_json(r);
    j["query"] = brief(snap.get(r.qid));
    out.push_back(std::move(j));
  }
  return out;
}

std::string edit_label(const std::optional<sql::EditScript>& script) {
  if (!script) return "";
  std::string out;
  for (const auto& e : *script) out += (out.empty() ? "" : "; ") + e.label();
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

// ---- routing ------------------------------------------------------------------------

Response Api::handle(const Request& request) const {
  Response out;
  try {
    out.body = dispatch(request).dump();
  } catch (const Error& e) {
    out.status = status_for(e);
    out.body = Json{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}}.dump();
  } catch (const std::exception& e) {
    out.status = 500;
    out.body = Json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump();
  }
  return out;
}

Json Api::dispatch(const Request& r) const {
  static const std::regex kQuery("^/queries/([^/]+)$");
  static const std::regex kAccess("^/queries/([^/]+)/access$");
  static const std::regex kSessions("^/sessions/([^/]+)$");
  std::smatch m;
  const auto& p = r.principal;
  store::Store& store = engine_.store();

  if (r.method == "GET" && r.path == "/health") {
    return {{"status", "ok"}, {"seq", store.seq()}};
  }

  if (r.method == "POST" && r.path == "/queries") {
    auto rec = profiler::parse_log_record(r.body);
    const Qid qid = rec.output ? engine_.profiler().ingest(rec.raw, rec.output, p)
                               : engine_.profiler().ingest(rec.raw, std::nullopt, p);
    return {{"qid", codec::id_string(qid)}};
  }

  if (r.method == "POST" && r.path == "/queries/batch") {
    const auto res = engine_.profiler().ingest_lines(r.body, p);
    Json j = {{"ingested", res.ingested}};
    if (!res.errors.empty()) {
      Json errs = Json::array();
      for (const auto& e : res.errors) errs.push_back({{"line", e.line}, {"message", e.message}});
      j["errors"] = std::move(errs);
    }
    return j;
  }

  if (r.method == "GET" && r.path == "/queries") {
    store::ScanFilter f;
    f.owner = param(r, "owner");
    f.group = param(r, "group");
    const auto snap = store.snapshot();
    const std::size_t limit = positive_param(r, "limit", 100);
    Json list = Json::array();
    for (const auto* q : snap->scan(f, p)) {
      if (list.size() >= limit) break;
      list.push_back(brief(*q));
    }
    return {{"queries", std::move(list)}};
  }

  if (std::regex_match(r.path, m, kQuery)) {
    const Qid qid = parse_qid(m[1]);
    const auto snap = store.snapshot();
    if (r.method == "GET") {
      const auto& q = snap->get(qid, p);
      Json j = codec::to_json(q);
      if (q.summary_ref)
        if (auto s = snap->summary(*q.summary_ref)) j["summary"] = codec::to_json(*s);
      return j;
    }
    if (r.method == "DELETE") {
      owned(*snap, qid, p);
      store.append(store::QueryDeleted{qid});
      return {{"deleted", codec::id_string(qid)}};
    }
  }

  if (r.method == "PUT" && std::regex_match(r.path, m, kAccess)) {
    const Qid qid = parse_qid(m[1]);
    const Json body = parse_body(r.body);
    const auto vis = store::parse_visibility(codec::require(body, "visibility").get<std::string>());
    owned(*store.snapshot(), qid, p);
    store.append(store::AccessChanged{qid, vis});
    return {{"qid", codec::id_string(qid)}, {"visibility", store::visibility_name(vis)}};
  }

  if (r.method == "POST" && r.path == "/search") {
    const auto snap = store.snapshot();
    const bool empty = r.body.find_first_not_of(" \t\r\n") == std::string::npos;
    const Json body = empty ? Json::object() : parse_body(r.body);
    if (body.is_object() && body.empty()) {
      // No meta-query: every visible query, newest first.
      Json list = Json::array();
      for (const auto* q : snap->scan({}, p)) {
        meta::MatchResult mr{q->qid, 1.0, meta::Certainty::kDefinite, {}};
        Json j = meta::to_json(mr);
        j["query"] = brief(*q);
        list.push_back(std::move(j));
      }
      return {{"results", std::move(list)}};
    }
    const auto mq = meta::meta_query_from_json(body);
    return {{"results", results(*snap, engine_.executor().execute(mq, p))}};
  }

  if (r.method == "GET" && r.path == "/suggest") {
    const auto kind = miner::parse_completion_kind(param(r, "kind").value_or("any"));
    const auto model = engine_.miner().model();
    Json list = Json::array();
    for (const auto& c : engine_.miner().suggest_completions(param(r, "partial").value_or(""), kind,
                                                           positive_param(r, "limit", 10)))
      list.push_back({{"text", c.text},
                      {"kind", miner::completion_kind_name(c.kind)},
                      {"item", c.item},
                      {"score", c.score},
                      {"basis", c.basis}});
    return {{"model_version", model->version}, {"completions", std::move(list)}};
  }

  if (r.method == "POST" && r.path == "/corrections") {
    const Json body = parse_body(r.body);
    const auto signal = miner::parse_correction_signal(body.value("signal", std::string("unknown-identifier")));
    Json list = Json::array();
    for (const auto& c : engine_.miner().suggest_corrections(
             codec::require(body, "query").get<std::string>(), signal)) {
      Json j = {{"original", c.original},
                {"replacement", c.replacement},
                {"distance", c.distance},
                {"popularity", c.popularity}};
      if (!c.corrected_text.empty()) j["corrected_text"] = c.corrected_text;
      list.push_back(std::move(j));
    }
    return {{"signal", miner::correction_signal_name(signal)}, {"corrections", std::move(list)}};
  }

  if (r.method == "GET" && r.path == "/recommend") {
    std::vector<miner::RecentInput> recent;
    for (const auto& id : split_csv(param(r, "recent").value_or(""))) recent.emplace_back(parse_qid(id));
    if (auto text = param(r, "text"); text && !text->empty()) recent.emplace_back(*text);
    const auto snap = store.snapshot();
    const auto recs = engine_.miner().recommend(recent, positive_param(r, "k", 10),
                                                engine_.config().default_weights, p);
    return {{"results", results(*store.snapshot(), recs)}};
  }

  if (r.method == "GET" && std::regex_match(r.path, m, kSessions)) {
    const std::string user = m[1];
    const auto snap = store.snapshot();
    store::ScanFilter f;
    f.owner = user;
    auto mine = snap->scan(f, p);
    std::sort(mine.begin(), mine.end(), [](const auto* a, const auto* b) {
      return std::tie(a->submitted_at, a->qid) < std::tie(b->submitted_at, b->qid);
    });
    std::map<Qid, std::vector<const store::StoredQuery*>> by_session;
    std::vector<Qid> order;
    std::map<Qid, Qid> session_of;
    for (const auto* q : mine) {
      const Qid s = q->session_id.value_or(q->qid);
      if (!by_session.count(s)) order.push_back(s);
      by_session[s].push_back(q);
      session_of[q->qid] = s;
    }
    std::map<Qid, Json> edges;
    for (std::size_t i = 0; i < snap->edge_count(); ++i) {
      const auto& e = snap->edge(i);
      auto from = session_of.find(e.from);
      auto to = session_of.find(e.to);
      if (from == session_of.end() || to == session_of.end() || from->second != to->second) continue;
      Json j = codec::to_json(e);
      j["label"] = edit_label(e.edit_script);
      edges[from->second].push_back(std::move(j));
    }
    Json sessions = Json::array();
    for (Qid s : order) {
      Json nodes = Json::array();
      for (const auto* q : by_session[s]) nodes.push_back(brief(*q));
      sessions.push_back({{"session_id", codec::id_string(s)},
                          {"assigned", by_session[s].front()->session_id.has_value()},
                          {"nodes", std::move(nodes)},
                          {"edges", edges.count(s) ? edges[s] : Json::array()}});
    }
    return {{"user", user}, {"sessions", std::move(sessions)}};
  }

  if (r.method == "POST" && r.path == "/annotations") {
    const Json body = parse_body(r.body);
    const Qid qid = codec::parse_id(codec::require(body, "qid"));
    store.snapshot()->get(qid, p);
    store::Annotation a;
    a.target = qid;
    a.author = p.user;
    a.text = codec::require(body, "text").get<std::string>();
    if (auto it = body.find("span"); it != body.end() && !it->is_null()) {
      if (!it->is_array() || it->size() != 2) bad("span must be [begin, end]");
      a.span = std::make_pair((*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>());
    }
    store.append(store::AnnotationAdded{a});
    const auto& stored = store.snapshot()->get(qid).annotations.back();
    return {{"qid", codec::id_string(qid)}, {"annotation", codec::to_json(stored)}};
  }

  if (r.method == "POST" && r.path == "/schema") {
    require_admin(r);
    Json body = parse_body(r.body);
    if (body.is_object() && !body.contains("effective_at")) body["effective_at"] = store.now();
    auto schema = sql::SchemaSnapshot::normalized(codec::schema_from_json(body));
    const EpochMs at = schema.effective_at;
    store.append(store::SchemaAdded{std::move(schema)});
    return {{"effective_at", at}, {"schemas", store.snapshot()->schema_count()}};
  }

  if (r.method == "POST" && r.path == "/admin/mine") {
    require_admin(r);
    return engine_.run_mine();
  }

  if (r.method == "POST" && r.path == "/admin/maintain") {
    require_admin(r);
    std::optional<EpochMs> changed;
    std::optional<std::set<std::string>> relations;
    if (r.body.find_first_not_of(" \t\r\n") != std::string::npos) {
      const Json body = parse_body(r.body);
      if (auto it = body.find("data_changed_at"); it != body.end() && !it->is_null())
        changed = it->get<EpochMs>();
      if (auto it = body.find("relations"); it != body.end() && !it->is_null()) {
        relations.emplace();
        for (const auto& rel : *it) relations->insert(sql::to_lower(rel.get<std::string>()));
      }
    }
    return engine_.run_maintain(changed, relations);
  }

  if (r.method == "GET" && r.path == "/admin/report") {
    require_admin(r);
    return engine_.last_report();
  }

  throw Error(ErrorCode::kNotFound, "no route for " + r.method + " " + r.path);
}

}  // namespace cqms::service
