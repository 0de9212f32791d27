#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cqms/meta/meta_query.hpp"
#include "cqms/store/store.hpp"

namespace cqms::miner {

struct MinerConfig {
  std::int64_t session_gap_ms = 600'000;
  double session_sim_threshold = 0.3;
  double min_support = 0.05;
  double min_confidence = 0.5;
  double cluster_link_threshold = 0.6;
  /// Version given to the first model built; later builds count up from it.
  std::uint64_t model_version = 1;

  /// Throws InvalidArgument.
  void validate() const;
};

/// Feature items are tagged tokens: "src:r", "attr:a@r", "pred-template:a@r op".
using Item = std::string;
using ItemSet = std::vector<Item>;  // sorted, no duplicates

ItemSet feature_items(const sql::FeatureSet& fs);

struct AssociationRule {
  ItemSet antecedent;
  Item consequent;
  double support = 0.0;
  double confidence = 0.0;

  bool operator==(const AssociationRule&) const = default;
};

struct FrequentItemset {
  ItemSet items;
  std::size_t count = 0;
};

/// Level-wise apriori. An itemset is frequent when it occurs in at least
/// min_support of the transactions. Ordered by size, then lexicographically.
std::vector<FrequentItemset> frequent_itemsets(const std::vector<ItemSet>& transactions,
                                               double min_support);

/// Single-consequent rules over the frequent itemsets, ordered by support
/// descending and then lexicographically by (antecedent, consequent).
std::vector<AssociationRule> association_rules(const std::vector<ItemSet>& transactions,
                                               double min_support, double min_confidence);

/// Single-linkage clusters at `threshold` over the feature similarity.
/// Queries that did not parse are singletons. Each cluster is sorted and the
/// list is ordered by smallest member.
std::vector<std::vector<Qid>> cluster(const std::vector<const store::StoredQuery*>& queries,
                                      double threshold);

struct SessionReport {
  std::size_t queries = 0;
  std::size_t sessions = 0;
  std::size_t assignments_written = 0;
  std::size_t edges_written = 0;
};

/// Everything the assisted-interaction calls read. Immutable once published.
struct SuggestionModel {
  std::uint64_t version = 0;
  Seq built_at_seq = 0;
  std::size_t transactions = 0;
  std::map<Item, std::uint32_t> global_counts;
  /// Distinct feature-item transactions with their multiplicities, for
  /// conditional counts over arbitrary contexts.
  std::vector<std::pair<ItemSet, std::uint32_t>> itemsets;
  std::vector<AssociationRule> rules;
  std::map<std::string, std::uint32_t> template_popularity;
  /// Predicates of logged queries that returned at least one row.
  std::map<sql::Predicate, std::uint32_t> nonempty_predicates;
  std::vector<std::vector<Qid>> clusters;
  std::unordered_map<Qid, std::size_t> cluster_of;
  std::shared_ptr<const sql::SchemaSnapshot> schema;

  /// Transactions containing every item of `context` and `item`.
  std::uint32_t conditional_count(const ItemSet& context, const Item& item) const;
  std::uint32_t support_count(const ItemSet& items) const;

  /// Canonical JSON without the version; equal content gives equal text.
  std::string content_json() const;
};

enum class CompletionKind { kRelation, kAttribute, kPredicate, kAny };
std::string_view completion_kind_name(CompletionKind k);
CompletionKind parse_completion_kind(std::string_view name);

struct Completion {
  std::string text;  // what to insert: "watertemp", "temp", "temp <"
  CompletionKind kind = CompletionKind::kRelation;
  Item item;
  double score = 0.0;
  std::string basis;  // rule, conditional, global or schema
};

enum class CorrectionSignal { kUnknownIdentifier, kEmptyResult };
std::string_view correction_signal_name(CorrectionSignal s);
CorrectionSignal parse_correction_signal(std::string_view name);

struct Correction {
  std::string original;
  std::string replacement;
  std::size_t distance = 0;
  std::uint32_t popularity = 0;
  std::string corrected_text;  // the whole query with the replacement applied
};

std::size_t edit_distance(std::string_view a, std::string_view b);

/// A recent query, either logged (qid) or given as text.
using RecentInput = std::variant<Qid, std::string>;

class Miner {
 public:
  explicit Miner(store::Store& store, MinerConfig config = {},
                 meta::ExecutorOptions executor_options = {});

  const MinerConfig& config() const { return config_; }

  /// Splits one user's queries into sessions and records assignments and
  /// edges not already in the store.
  SessionReport segment_sessions(const std::string& user);
  SessionReport segment_all_sessions();

  std::vector<AssociationRule> mine_association_rules() const;
  std::vector<std::vector<Qid>> cluster_queries() const;

  /// Builds a model from the current snapshot and publishes it.
  std::shared_ptr<const SuggestionModel> build_suggestion_model();
  /// The published model; an empty version-0 model before the first build.
  std::shared_ptr<const SuggestionModel> model() const;

  /// Throws SyntaxError when the partial text cannot be read at all.
  std::vector<Completion> suggest_completions(const std::string& partial, CompletionKind kind,
                                              std::size_t limit = 10) const;
  std::vector<Correction> suggest_corrections(const std::string& query,
                                              CorrectionSignal signal) const;
  /// Throws NotFound for an unknown or invisible qid, InvalidArgument for k = 0.
  std::vector<meta::MatchResult> recommend(const std::vector<RecentInput>& recent, std::size_t k,
                                           const meta::RankWeights& weights,
                                           const store::Principal& principal) const;

 private:
  store::Store& store_;
  MinerConfig config_;
  meta::Executor executor_;
  std::atomic<std::uint64_t> next_version_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const SuggestionModel> model_;
};

}  // namespace cqms::miner
