#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cqms/store/store.hpp"

namespace cqms::meta {

/// Closed interval; a missing bound is unbounded.
struct Range {
  std::optional<double> lo;
  std::optional<double> hi;

  bool contains(double x) const { return (!lo || x >= *lo) && (!hi || x <= *hi); }
  bool operator==(const Range&) const = default;
};

enum class AtomKind {
  kReferences,
  kHasAttribute,
  kHasPredicate,
  kAuthor,
  kExecMs,
  kCardinality,
  kSubmitted,
};

/// One structural or runtime condition. A relation of "" or "?" matches any
/// relation; an empty op matches any operator.
struct Atom {
  AtomKind kind = AtomKind::kReferences;
  std::string relation;
  std::string attribute;
  std::optional<sql::AttributeRole> role;
  std::string op;
  std::optional<std::string> constant;  // canonical literal text
  Range range;                          // constant range, or the runtime range
  std::string author;

  static Atom references(std::string relation);
  static Atom has_attribute(std::string attribute, std::string relation = {},
                            std::optional<sql::AttributeRole> role = std::nullopt);
  static Atom has_predicate(std::string attribute, std::string relation = {}, std::string op = {},
                            std::optional<std::string> constant = std::nullopt, Range range = {});

  bool matches(const store::StoredQuery& q) const;
  std::string describe() const;
  bool operator==(const Atom&) const = default;
};

struct Cond {
  enum class Op { kAtom, kAnd, kOr, kNot };
  Op op = Op::kAtom;
  Atom atom;
  std::vector<Cond> children;

  static Cond leaf(Atom a) { return {Op::kAtom, std::move(a), {}}; }
  static Cond all(std::vector<Cond> c) { return {Op::kAnd, {}, std::move(c)}; }
  static Cond any(std::vector<Cond> c) { return {Op::kOr, {}, std::move(c)}; }
  static Cond negate(Cond c) { return {Op::kNot, {}, {std::move(c)}}; }

  bool evaluate(const store::StoredQuery& q) const;
  /// Atoms that hold for q, in tree order.
  void matched_atoms(const store::StoredQuery& q, std::vector<std::string>& out) const;
  bool operator==(const Cond&) const = default;
};

/// Weights of the ranking components. Each component lies in [0, 1].
struct RankWeights {
  double similarity = 1.0;
  double popularity = 0.0;
  double recency = 0.0;
  double efficiency = 0.0;
  double small_cardinality = 0.0;

  /// Throws InvalidWeights if any weight is negative or all are zero.
  void validate() const;
};

/// An output tuple to look for. With column names only those columns are
/// compared; without, the row must equal the tuple as a multiset of values.
struct Tuple {
  std::vector<store::Value> values;
  std::vector<std::string> columns;

  bool operator==(const Tuple& o) const { return values == o.values && columns == o.columns; }
  std::string to_string() const;
};

struct KeywordQuery {
  std::vector<std::string> terms;
};
struct SubstringQuery {
  std::string pattern;
};
struct FeatureQuery {
  Cond cond;
};
struct DataQuery {
  std::vector<Tuple> include;
  std::vector<Tuple> exclude;
};
struct KnnQuery {
  std::optional<Qid> target;
  std::string text;  // used when there is no target qid
  std::size_t k = 10;
  RankWeights weights;
};

struct MetaQuery {
  std::variant<KeywordQuery, SubstringQuery, FeatureQuery, DataQuery, KnnQuery> body;
  /// Orders non-kNN results; without it every match scores 1.
  std::optional<RankWeights> rank;
  std::optional<std::size_t> limit;

  /// Throws InvalidMetaQuery.
  void validate() const;
};

enum class Certainty { kDefinite, kPossible };
std::string_view certainty_name(Certainty c);

struct MatchResult {
  Qid qid = 0;
  double score = 0.0;
  Certainty certainty = Certainty::kDefinite;
  std::vector<std::string> explanation;
};

enum class DataMatch { kMatch, kNonMatch, kPossible };

/// Tri-state decision of a DataQuery against one query's output summary
/// (nullptr when the query has none).
DataMatch match_data(const store::OutputSummary* summary, const DataQuery& cond);
bool row_matches(const store::Row& row, const std::vector<std::string>& columns, const Tuple& t);

/// Feature conditions implied by a partially written query: every FROM
/// relation plus every complete WHERE predicate. Throws SyntaxError.
MetaQuery from_partial(const std::string& partial);

/// Whole-word tokens (lower case) used by keyword search.
std::vector<std::string> keyword_tokens(std::string_view text);

struct ExecutorOptions {
  double half_life_ms = 30.0 * 24 * 3600 * 1000;
  std::function<EpochMs()> now;  // defaults to the system clock
};

/// Corpus-wide figures the ranking normalizes by.
struct CorpusStats {
  Seq seq = 0;
  std::unordered_map<std::string, std::uint32_t> template_counts;
  std::uint32_t max_template_count = 0;
  double max_efficiency = 0.0;
  double max_small_cardinality = 0.0;

  static const std::string& template_key(const store::StoredQuery& q);
  std::uint32_t count(const store::StoredQuery& q) const;
};

class Executor {
 public:
  explicit Executor(const store::Store& store, ExecutorOptions options = {});

  /// Runs a meta-query for a principal. Read-only. Throws InvalidMetaQuery,
  /// InvalidWeights or NotFound (unknown or invisible kNN target).
  std::vector<MatchResult> execute(const MetaQuery& mq, const store::Principal& principal) const;

  /// Scores and orders candidates; ties go to the smaller qid.
  std::vector<MatchResult> rank(const store::Snapshot& snap, const std::vector<Qid>& candidates,
                                const RankWeights& weights,
                                const sql::FeatureSet* similar_to = nullptr) const;

  /// Features of a kNN target given as text, resolved against the current schema.
  sql::FeatureSet features_of_text(const store::Snapshot& snap, const std::string& text) const;

  std::shared_ptr<const CorpusStats> stats(const store::Snapshot& snap) const;

 private:
  const store::Store& store_;
  ExecutorOptions options_;
  mutable std::mutex cache_mutex_;
  mutable std::shared_ptr<const CorpusStats> cache_;
};

}  // namespace cqms::meta
