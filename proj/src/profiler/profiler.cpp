#include "cqms/profiler/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cqms/codec.hpp"
#include "cqms/error.hpp"
#include "cqms/maintenance/maintenance.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/parser.hpp"

namespace cqms::profiler {

using codec::Json;
using store::OutputSummary;
using store::Row;

void ProfilerConfig::validate() const {
  if (base_rows_per_second <= 0)
    throw Error(ErrorCode::kInvalidArgument, "base_rows_per_second must be positive");
  if (min_budget_rows < 0 || min_budget_rows > max_budget_rows)
    throw Error(ErrorCode::kInvalidArgument, "need 0 <= min_budget_rows <= max_budget_rows");
}

std::uint64_t budget_rows(std::int64_t execution_ms, const ProfilerConfig& c) {
  const long double raw = static_cast<long double>(c.base_rows_per_second) *
                          static_cast<long double>(std::max<std::int64_t>(execution_ms, 0)) / 1000.0L;
  const long double clamped = std::clamp(std::floor(raw), static_cast<long double>(c.min_budget_rows),
                                         static_cast<long double>(c.max_budget_rows));
  return static_cast<std::uint64_t>(clamped);
}

OutputSummary summarize_output(const RowSource& next, std::int64_t execution_ms,
                               const ProfilerConfig& config, std::vector<std::string> columns) {
  OutputSummary s;
  s.columns = std::move(columns);
  s.budget_rows = budget_rows(execution_ms, config);
  s.rng_seed = config.rng_seed;
  std::mt19937_64 rng(config.rng_seed);
  std::uint64_t seen = 0;
  Row row;
  // Algorithm R: the reservoir holds a uniform sample of the rows seen so far.
  while (next(row)) {
    if (seen < s.budget_rows) {
      s.tuples.push_back(std::move(row));
    } else {
      const std::uint64_t j = std::uniform_int_distribution<std::uint64_t>(0, seen)(rng);
      if (j < s.budget_rows) s.tuples[j] = std::move(row);
    }
    row = Row{};
    ++seen;
  }
  s.source_cardinality = seen;
  s.mode = seen <= s.budget_rows ? store::SummaryMode::kFull : store::SummaryMode::kSample;
  return s;
}

OutputSummary summarize_output(const std::vector<Row>& rows, std::int64_t execution_ms,
                               const ProfilerConfig& config, std::vector<std::string> columns) {
  std::size_t i = 0;
  return summarize_output(
      [&](Row& out) {
        if (i == rows.size()) return false;
        out = rows[i++];
        return true;
      },
      execution_ms, config, std::move(columns));
}

store::StoredQuery profile(const std::string& text, const sql::SchemaSnapshot* schema) {
  store::StoredQuery q;
  q.raw_text = text;
  try {
    const sql::ParseTree canonical = sql::canonicalize(sql::parse(text));
    q.canonical_text = sql::render(canonical);
    q.template_text = sql::render(sql::to_template(canonical));
    q.features = sql::extract_features(canonical, schema);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSyntaxError && e.code() != ErrorCode::kUnsupportedFeature) throw;
    q.parse_error = e.what();
  }
  return q;
}

namespace {

std::int64_t non_negative(const Json& j, const char* field) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
    throw Error(ErrorCode::kInvalidArgument, std::string("'") + field +
                                                 "' must be a non-negative integer");
  return j.get<std::int64_t>();
}

}  // namespace

LogRecord parse_log_record(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "log record must be an object");
  LogRecord rec;
  try {
    const Json& q = codec::require(j, "query");
    if (!q.is_string()) throw Error(ErrorCode::kInvalidArgument, "'query' must be a string");
    rec.raw.text = q.get<std::string>();
    if (auto it = j.find("user"); it != j.end() && !it->is_null()) rec.raw.user = it->get<std::string>();
    if (auto it = j.find("ts"); it != j.end() && !it->is_null())
      rec.raw.submitted_at = non_negative(*it, "ts");
    if (auto it = j.find("exec_ms"); it != j.end() && !it->is_null())
      rec.raw.execution_ms = non_negative(*it, "exec_ms");
    if (auto it = j.find("rows_out"); it != j.end() && !it->is_null())
      rec.raw.result_cardinality = non_negative(*it, "rows_out");
    if (auto it = j.find("groups"); it != j.end() && !it->is_null())
      rec.raw.groups = it->get<std::set<std::string>>();
    if (auto it = j.find("output"); it != j.end() && !it->is_null()) {
      if (!it->is_array()) throw Error(ErrorCode::kInvalidArgument, "'output' must be an array");
      ResultRows out;
      if (auto c = j.find("columns"); c != j.end() && !c->is_null())
        out.columns = c->get<std::vector<std::string>>();
      for (const auto& r : *it) {
        if (!r.is_array()) throw Error(ErrorCode::kInvalidArgument, "each output row must be an array");
        Row row;
        for (const auto& v : r) row.push_back(codec::value_from_json(v));
        if (!out.columns.empty() && row.size() != out.columns.size())
          throw Error(ErrorCode::kInvalidArgument, "output row width differs from 'columns'");
        out.rows.push_back(std::move(row));
      }
      if (rec.raw.result_cardinality &&
          static_cast<std::size_t>(*rec.raw.result_cardinality) != out.rows.size())
        throw Error(ErrorCode::kInvalidArgument, "'rows_out' disagrees with the output length");
      rec.output = std::move(out);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what());
  }
  return rec;
}

Profiler::Profiler(store::Store& store, ProfilerConfig config)
    : store_(store), config_(config) {
  config_.validate();
}

Qid Profiler::ingest(const RawQuery& raw, const std::optional<ResultRows>& rows,
                     const store::Principal& principal) {
  if (!rows) return append(raw, std::nullopt, principal);
  std::size_t i = 0;
  return ingest(
      raw,
      [&](Row& out) {
        if (i == rows->rows.size()) return false;
        out = rows->rows[i++];
        return true;
      },
      rows->columns, principal);
}

Qid Profiler::ingest(const RawQuery& raw, const RowSource& rows, std::vector<std::string> columns,
                     const store::Principal& principal) {
  OutputSummary summary = summarize_output(rows, raw.execution_ms, config_, std::move(columns));
  if (raw.result_cardinality &&
      static_cast<std::uint64_t>(*raw.result_cardinality) != summary.source_cardinality)
    throw Error(ErrorCode::kInvalidArgument, "result cardinality disagrees with the result rows");
  return append(raw, std::move(summary), principal);
}

Qid Profiler::append(const RawQuery& raw, std::optional<OutputSummary> summary,
                     const store::Principal& principal) {
  if (raw.text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(ErrorCode::kEmptyQuery, "query text is empty");
  if (!principal.superuser && !raw.user.empty() && raw.user != principal.user)
    throw Error(ErrorCode::kPermissionDenied, "cannot log queries on behalf of " + raw.user);

  // Parsing happens outside the writer lock; only the append is serialized.
  const auto snap = store_.snapshot();
  store::StoredQuery q = profile(raw.text, snap->current_schema_or_null());
  q.owner = raw.user.empty() ? principal.user : raw.user;
  q.groups = principal.groups;
  q.groups.insert(raw.groups.begin(), raw.groups.end());
  q.submitted_at = raw.submitted_at ? *raw.submitted_at : store_.now();
  q.stats.execution_ms = raw.execution_ms;
  q.stats.result_cardinality = raw.result_cardinality;
  if (summary) q.stats.result_cardinality = static_cast<std::int64_t>(summary->source_cardinality);
  q.stats.last_executed_at = q.submitted_at;
  q.stats.stats_as_of = q.submitted_at;
  // Queries that do not fit the schema they were written against are
  // flagged right away, which is what lets maintenance skip newer queries.
  std::vector<std::string> problems;
  if (const auto* schema = snap->current_schema_or_null(); schema && q.parsed())
    problems = maintenance::schema_problems(q.features, *schema);
  if (problems.empty()) return store_.add_query(std::move(q), std::move(summary));
  store::Store::Batch batch(store_);
  const Qid qid = store_.add_query(std::move(q), std::move(summary));
  store_.append(store::FlagChanged{qid, store::Validity::kFlaggedSchema, std::move(problems)});
  return qid;
}

BatchResult Profiler::ingest_lines(std::string_view text, const store::Principal& principal) {
  BatchResult result;
  store::Store::Batch batch(store_);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const LogRecord rec = parse_log_record(line);
      result.qids.push_back(ingest(rec.raw, rec.output, principal));
      ++result.ingested;
    } catch (const Error& e) {
      if (!e.is_user_error()) throw;
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

BatchResult Profiler::ingest_batch(const std::string& path, const store::Principal& principal) {
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path))
    throw Error(ErrorCode::kFileNotFound, "no such log file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  BatchResult result = ingest_lines(ss.str(), principal);
  store_.sync();
  return result;
}

}  // namespace cqms::profiler
