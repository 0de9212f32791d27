#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cqms/store/store.hpp"

namespace cqms::profiler {

struct ProfilerConfig {
  std::int64_t base_rows_per_second = 64;
  std::int64_t min_budget_rows = 10;
  std::int64_t max_budget_rows = 10000;
  std::uint64_t rng_seed = 0x5eed;

  /// Throws InvalidArgument unless 0 < base and 0 <= min <= max.
  void validate() const;
};

struct RawQuery {
  std::string text;
  std::string user;
  std::optional<EpochMs> submitted_at;  // defaults to the store clock
  std::int64_t execution_ms = 0;
  std::optional<std::int64_t> result_cardinality;
  std::set<std::string> groups;  // extra sharing groups named by the log
};

struct ResultRows {
  std::vector<std::string> columns;
  std::vector<store::Row> rows;
};

/// One record of the external query log, already validated.
struct LogRecord {
  RawQuery raw;
  std::optional<ResultRows> output;
};

/// Parses one NDJSON log line. Throws InvalidArgument describing the problem.
LogRecord parse_log_record(std::string_view line);

/// clamp(base * execution_ms / 1000, min, max).
std::uint64_t budget_rows(std::int64_t execution_ms, const ProfilerConfig& config);

/// Pulls the next row into its argument; returns false when exhausted.
using RowSource = std::function<bool(store::Row&)>;

/// Keeps every row when they fit in the budget, else a seeded uniform
/// reservoir sample of exactly budget_rows rows. The source is read once.
store::OutputSummary summarize_output(const RowSource& rows, std::int64_t execution_ms,
                                      const ProfilerConfig& config,
                                      std::vector<std::string> columns = {});
store::OutputSummary summarize_output(const std::vector<store::Row>& rows,
                                      std::int64_t execution_ms, const ProfilerConfig& config,
                                      std::vector<std::string> columns = {});

/// Parse, canonicalize and extract features without touching the store.
/// Text outside the supported dialect yields a raw-only record.
store::StoredQuery profile(const std::string& text, const sql::SchemaSnapshot* schema);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct BatchResult {
  std::size_t ingested = 0;
  std::vector<Qid> qids;
  std::vector<LineError> errors;
};

/// The hot path. Ingest only parses, extracts and appends; sessions,
/// clusters and rules are left to the miner.
class Profiler {
 public:
  explicit Profiler(store::Store& store, ProfilerConfig config = {});

  const ProfilerConfig& config() const { return config_; }

  /// Throws EmptyQuery, PermissionDenied (a non-superuser logging on behalf of
  /// someone else) or InvalidArgument (cardinality disagrees with the rows).
  Qid ingest(const RawQuery& raw, const std::optional<ResultRows>& rows,
             const store::Principal& principal);
  Qid ingest(const RawQuery& raw, const RowSource& rows, std::vector<std::string> columns,
             const store::Principal& principal);

  /// Ingests a file of log records in order; bad lines are reported, never fatal.
  /// Throws FileNotFound.
  BatchResult ingest_batch(const std::string& path, const store::Principal& principal);
  /// Same for records already in memory (one per line).
  BatchResult ingest_lines(std::string_view text, const store::Principal& principal);

 private:
  Qid append(const RawQuery& raw, std::optional<store::OutputSummary> summary,
             const store::Principal& principal);

  store::Store& store_;
  ProfilerConfig config_;
};

}  // namespace cqms::profiler
