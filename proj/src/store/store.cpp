#include "cqms/store/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cqms/codec.hpp"
#include "cqms/error.hpp"

namespace cqms::store {

using codec::Json;

namespace {

constexpr const char* kFormat = "cqms-log";
constexpr int kVersion = 1;

EpochMs system_now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Error dangling(const char* what, Qid qid) {
  return Error(ErrorCode::kDanglingReference,
               std::string(what) + " references unknown query " + std::to_string(qid));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits into lines; `torn` is set when the last line has no newline.
std::vector<std::string_view> split_lines(std::string_view text, bool& torn) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  torn = false;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      torn = true;
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::FILE* open_append(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) throw Error(ErrorCode::kIoFailure, "cannot open " + path + " for appending");
  return f;
}

void write_line(std::FILE* f, const std::string& line, const std::string& path) {
  if (std::fwrite(line.data(), 1, line.size(), f) != line.size() || std::fputc('\n', f) == EOF ||
      std::fflush(f) != 0)
    throw Error(ErrorCode::kIoFailure, "write failed on " + path);
}

}  // namespace

// ---- Snapshot ---------------------------------------------------------------

const StoredQuery* Snapshot::find(Qid qid) const {
  if (qid == 0 || qid > queries_.size()) return nullptr;
  return queries_[qid - 1].get();
}

const StoredQuery& Snapshot::get(Qid qid) const {
  const StoredQuery* q = find(qid);
  if (!q) throw Error(ErrorCode::kNotFound, "query " + std::to_string(qid) + " not found");
  if (q->validity == Validity::kDeleted)
    throw Error(ErrorCode::kDeleted, "query " + std::to_string(qid) + " was deleted");
  return *q;
}

const StoredQuery& Snapshot::get(Qid qid, const Principal& principal) const {
  const StoredQuery* q = find(qid);
  if (!q || !visible_to(*q, principal))
    throw Error(ErrorCode::kNotFound, "query " + std::to_string(qid) + " not found");
  return get(qid);
}

std::vector<const StoredQuery*> Snapshot::scan(const ScanFilter& f, const Principal& p) const {
  std::vector<const StoredQuery*> out;
  for (std::size_t i = 0; i < queries_.size(); ++i) {
    const StoredQuery& q = *queries_[i];
    if (q.validity == Validity::kDeleted || !f.validity.count(q.validity)) continue;
    if (!visible_to(q, p)) continue;
    if (f.owner && q.owner != *f.owner) continue;
    if (f.group && !q.groups.count(*f.group)) continue;
    if (f.from && q.submitted_at < *f.from) continue;
    if (f.to && q.submitted_at >= *f.to) continue;
    out.push_back(&q);
  }
  std::stable_sort(out.begin(), out.end(), [](const StoredQuery* a, const StoredQuery* b) {
    if (a->submitted_at != b->submitted_at) return a->submitted_at > b->submitted_at;
    return a->qid > b->qid;
  });
  return out;
}

const sql::SchemaSnapshot* Snapshot::current_schema_or_null() const {
  return schemas_.empty() ? nullptr : schemas_[current_schema_].get();
}

const sql::SchemaSnapshot& Snapshot::current_schema() const {
  if (schemas_.empty()) throw Error(ErrorCode::kNoSchema, "no schema has been registered");
  return *schemas_[current_schema_];
}

std::shared_ptr<const OutputSummary> Snapshot::summary(std::uint64_t id) const {
  if (id == 0 || id > summaries_.size()) return nullptr;
  return summaries_[id - 1];
}

std::string Snapshot::dump_index() const {
  Json j = Json::object();
  j["seq"] = seq_;
  Json queries = Json::array();
  Json summaries = Json::array();
  for (std::size_t i = 0; i < queries_.size(); ++i) {
    queries.push_back(codec::to_json(*queries_[i]));
    if (summaries_[i]) summaries.push_back(codec::to_json(*summaries_[i]));
  }
  j["queries"] = std::move(queries);
  j["summaries"] = std::move(summaries);
  Json edges = Json::array();
  for (std::size_t i = 0; i < edges_.size(); ++i) edges.push_back(codec::to_json(edges_[i]));
  j["edges"] = std::move(edges);
  Json schemas = Json::array();
  for (const auto& s : schemas_) schemas.push_back(codec::to_json(*s));
  j["schemas"] = std::move(schemas);
  j["current_schema"] = schemas_.empty() ? Json(nullptr) : Json(current_schema_);
  return j.dump();
}

// ---- Store ------------------------------------------------------------------

Store::Store(StoreOptions options)
    : path_(std::move(options.path)),
      clock_(options.clock ? std::move(options.clock) : std::function<EpochMs()>(system_now)) {
  if (!path_.empty()) {
    const bool existing = std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0;
    if (existing) replay();
    log_ = open_append(path_);
    summaries_ = open_append(path_ + ".summaries");
    if (!existing) {
      write_line(log_, Json{{"format", kFormat}, {"version", kVersion}}.dump(), path_);
    }
  }
  publish();
}

Store::~Store() {
  try {
    sync();
  } catch (...) {
  }
  if (log_) std::fclose(log_);
  if (summaries_) std::fclose(summaries_);
}

std::shared_ptr<const Snapshot> Store::snapshot() const {
  std::lock_guard lock(publish_mutex_);
  return published_;
}

void Store::publish() {
  auto snap = std::make_shared<const Snapshot>(working_);
  std::lock_guard lock(publish_mutex_);
  published_ = std::move(snap);
}

void Store::sync() {
  std::lock_guard lock(writer_);
  for (std::FILE* f : {log_, summaries_}) {
    if (!f) continue;
    if (std::fflush(f) != 0 || ::fsync(fileno(f)) != 0)
      throw Error(ErrorCode::kIoFailure, "sync failed on " + path_);
  }
}

Store::Batch::Batch(Store& store) : store_(store), lock_(store.writer_) { ++store_.batch_depth_; }

Store::Batch::~Batch() {
  if (--store_.batch_depth_ == 0) store_.publish();
}

Seq Store::append(Event event) {
  std::lock_guard lock(writer_);
  return apply_locked(event, clock_(), false).seq;
}

Qid Store::add_query(StoredQuery query, std::optional<OutputSummary> summary) {
  Event e = QueryAdded{std::move(query), std::move(summary)};
  std::lock_guard lock(writer_);
  return apply_locked(e, clock_(), false).qid;
}

void Store::validate(const Event& event) const {
  const auto live = [&](Qid qid, const char* what) -> const StoredQuery& {
    const StoredQuery* q = working_.find(qid);
    if (!q) throw dangling(what, qid);
    if (q->validity == Validity::kDeleted)
      throw Error(ErrorCode::kDeleted, "query " + std::to_string(qid) + " was deleted");
    return *q;
  };
  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, QueryAdded>) {
          if (ev.query.raw_text.find_first_not_of(" \t\r\n") == std::string::npos)
            throw Error(ErrorCode::kEmptyQuery, "query text is empty");
        } else if constexpr (std::is_same_v<T, AnnotationAdded>) {
          const StoredQuery& q = live(ev.annotation.target, "annotation");
          if (ev.annotation.span) {
            const auto [b, e] = *ev.annotation.span;
            if (b > e || e > q.raw_text.size())
              throw Error(ErrorCode::kInvalidArgument, "annotation span outside the query text");
          }
        } else if constexpr (std::is_same_v<T, EdgeAdded>) {
          if (!working_.find(ev.edge.from)) throw dangling("edge", ev.edge.from);
          if (!working_.find(ev.edge.to)) throw dangling("edge", ev.edge.to);
          if (ev.edge.type == EdgeType::kModification && !ev.edge.edit_script)
            throw Error(ErrorCode::kInvalidArgument, "modification edges need an edit script");
        } else if constexpr (std::is_same_v<T, SchemaAdded>) {
        } else if constexpr (std::is_same_v<T, FlagChanged>) {
          live(ev.qid, "flag");
          if (ev.validity == Validity::kDeleted)
            throw Error(ErrorCode::kInvalidArgument, "use QueryDeleted to delete");
        } else if constexpr (std::is_same_v<T, AccessChanged>) {
          live(ev.qid, "access rule");
        } else if constexpr (std::is_same_v<T, QueryDeleted>) {
          live(ev.qid, "deletion");
        } else {
          live(ev.qid, "session assignment");
          if (!working_.find(ev.session_id)) throw dangling("session assignment", ev.session_id);
        }
      },
      event);
}

Store::Applied Store::apply_locked(Event& event, EpochMs at, bool replaying) {
  validate(event);
  const Seq seq = working_.seq_ + 1;
  Qid qid = 0;
  if (auto* added = std::get_if<QueryAdded>(&event)) {
    qid = working_.queries_.size() + 1;
    if (replaying) {
      if (added->query.qid != qid)
        throw Error(ErrorCode::kStoreCorrupt, "qid " + std::to_string(added->query.qid) +
                                                  " out of order at seq " + std::to_string(seq));
    }
    added->query.qid = qid;
    if (added->summary) {
      added->summary->id = qid;
      added->query.summary_ref = qid;
    } else if (!replaying) {
      added->query.summary_ref.reset();
    }
    // Fields only events may change start from their defaults.
    added->query.session_id.reset();
    added->query.validity = Validity::kValid;
    added->query.flag_reasons.clear();
    added->query.annotations.clear();
    if (!replaying && added->summary) write_summary(*added->summary);
  }
  if (auto* note = std::get_if<AnnotationAdded>(&event); note && note->annotation.created_at == 0)
    note->annotation.created_at = at;
  if (!replaying) write_record(seq, event, at);

  auto modify = [&](Qid target, auto&& fn) {
    auto copy = std::make_shared<StoredQuery>(*working_.queries_[target - 1]);
    fn(*copy);
    working_.queries_.set(target - 1, std::move(copy));
  };

  std::visit(
      [&](auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, QueryAdded>) {
          working_.queries_.push_back(std::make_shared<const StoredQuery>(std::move(ev.query)));
          working_.summaries_.push_back(
              ev.summary ? std::make_shared<const OutputSummary>(std::move(*ev.summary)) : nullptr);
        } else if constexpr (std::is_same_v<T, AnnotationAdded>) {
          modify(ev.annotation.target, [&](StoredQuery& q) { q.annotations.push_back(ev.annotation); });
        } else if constexpr (std::is_same_v<T, EdgeAdded>) {
          working_.edges_.push_back(ev.edge);
        } else if constexpr (std::is_same_v<T, SchemaAdded>) {
          working_.schemas_.push_back(std::make_shared<const sql::SchemaSnapshot>(ev.schema));
          const std::size_t idx = working_.schemas_.size() - 1;
          if (idx == 0 ||
              ev.schema.effective_at >= working_.schemas_[working_.current_schema_]->effective_at)
            working_.current_schema_ = idx;
        } else if constexpr (std::is_same_v<T, FlagChanged>) {
          modify(ev.qid, [&](StoredQuery& q) {
            q.validity = ev.validity;
            q.flag_reasons = ev.reasons;
          });
        } else if constexpr (std::is_same_v<T, AccessChanged>) {
          modify(ev.qid, [&](StoredQuery& q) { q.visibility = ev.visibility; });
        } else if constexpr (std::is_same_v<T, QueryDeleted>) {
          modify(ev.qid, [&](StoredQuery& q) { q.validity = Validity::kDeleted; });
        } else {
          modify(ev.qid, [&](StoredQuery& q) { q.session_id = ev.session_id; });
        }
      },
      event);

  working_.seq_ = seq;
  if (batch_depth_ == 0 && !replaying) publish();
  return {seq, qid};
}

void Store::write_record(Seq seq, const Event& event, EpochMs at) {
  if (!log_) return;
  Json rec = Json::object();
  rec["seq"] = seq;
  rec["type"] = event_type_name(event);
  rec["at"] = at;
  rec["body"] = codec::event_body(event);
  write_line(log_, rec.dump(), path_);
}

void Store::write_summary(const OutputSummary& summary) {
  if (!summaries_) return;
  write_line(summaries_, Json{{"id", codec::id_string(summary.id)}, {"summary", codec::to_json(summary)}}.dump(),
             path_ + ".summaries");
}

void Store::replay() {
  std::map<std::uint64_t, OutputSummary> summaries;
  const std::string summary_path = path_ + ".summaries";
  if (std::filesystem::exists(summary_path)) {
    const std::string text = read_file(summary_path);
    bool torn = false;
    const auto lines = split_lines(text, torn);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      try {
        const Json j = Json::parse(lines[i]);
        summaries[codec::parse_id(j.at("id"))] = codec::summary_from_json(j.at("summary"));
      } catch (const std::exception& e) {
        if (torn && i + 1 == lines.size()) break;  // interrupted write
        throw Error(ErrorCode::kStoreCorrupt,
                    summary_path + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
  }

  const std::string text = read_file(path_);
  bool torn = false;
  const auto lines = split_lines(text, torn);
  std::size_t good_bytes = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto where = [&] { return path_ + ":" + std::to_string(i + 1) + ": "; };
    try {
      const Json j = Json::parse(lines[i]);
      if (i == 0) {
        if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion)
          throw Error(ErrorCode::kStoreCorrupt, "missing or unsupported log header");
      } else {
        const Seq seq = j.at("seq").get<Seq>();
        if (seq != working_.seq_ + 1)
          throw Error(ErrorCode::kStoreCorrupt, "sequence gap at " + std::to_string(seq));
        const std::string type = j.at("type").get<std::string>();
        Event event = codec::event_from_json(type, j.at("body"));
        if (auto* added = std::get_if<QueryAdded>(&event); added && added->query.summary_ref) {
          auto it = summaries.find(*added->query.summary_ref);
          if (it == summaries.end())
            throw Error(ErrorCode::kStoreCorrupt, "missing output summary " +
                                                      std::to_string(*added->query.summary_ref));
          added->summary = std::move(it->second);
        }
        apply_locked(event, j.at("at").get<EpochMs>(), true);
      }
    } catch (const Error& e) {
      if (torn && i + 1 == lines.size() && i > 0) break;
      throw Error(ErrorCode::kStoreCorrupt, where() + e.what());
    } catch (const std::exception& e) {
      if (torn && i + 1 == lines.size() && i > 0) break;
      throw Error(ErrorCode::kStoreCorrupt, where() + e.what());
    }
    good_bytes += lines[i].size() + 1;
  }
  // Drop a torn final record so the next append starts on a fresh line.
  if (good_bytes < text.size()) std::filesystem::resize_file(path_, good_bytes);
}

}  // namespace cqms::store
