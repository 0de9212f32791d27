#include "cqms/miner/miner.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "cqms/codec.hpp"
#include "cqms/error.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/diff.hpp"
#include "cqms/sql/lexer.hpp"
#include "cqms/sql/parser.hpp"
#include "cqms/sql/similarity.hpp"

namespace cqms::miner {

namespace {

void check_fraction(double v, const char* name) {
  if (!(v > 0.0 && v <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be in (0, 1]");
}

bool is_subset(const std::vector<std::uint32_t>& small, const std::vector<std::uint32_t>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

bool is_subset(const ItemSet& small, const ItemSet& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

/// Transactions interned to sorted id vectors; ids follow item order so id
/// vectors compare the way the item vectors do.
struct Interned {
  std::vector<Item> items;
  std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> unique;  // with multiplicity
  std::size_t total = 0;
};

Interned intern(const std::vector<ItemSet>& transactions) {
  Interned in;
  std::set<Item> all;
  for (const auto& t : transactions) all.insert(t.begin(), t.end());
  in.items.assign(all.begin(), all.end());
  std::map<std::vector<std::uint32_t>, std::size_t> counts;
  for (const auto& t : transactions) {
    if (t.empty()) continue;
    std::vector<std::uint32_t> ids;
    ids.reserve(t.size());
    for (const auto& item : t)
      ids.push_back(static_cast<std::uint32_t>(
          std::lower_bound(in.items.begin(), in.items.end(), item) - in.items.begin()));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    ++counts[ids];
    ++in.total;
  }
  in.unique.assign(counts.begin(), counts.end());
  return in;
}

std::size_t min_count(double min_support, std::size_t n) {
  const double need = std::ceil(min_support * static_cast<double>(n) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(need));
}

using IdSets = std::map<std::vector<std::uint32_t>, std::size_t>;

IdSets apriori(const Interned& in, double min_support) {
  IdSets frequent;
  if (in.total == 0) return frequent;
  const std::size_t need = min_count(min_support, in.total);
  std::vector<std::size_t> singles(in.items.size(), 0);
  for (const auto& [ids, n] : in.unique)
    for (auto id : ids) singles[id] += n;
  IdSets level;
  for (std::uint32_t i = 0; i < singles.size(); ++i)
    if (singles[i] >= need) level[{i}] = singles[i];
  while (!level.empty()) {
    frequent.insert(level.begin(), level.end());
    // Join sets sharing all but their last id, then drop candidates with an
    // infrequent subset.
    std::vector<std::vector<std::uint32_t>> candidates;
    for (auto a = level.begin(); a != level.end(); ++a) {
      for (auto b = std::next(a); b != level.end(); ++b) {
        if (!std::equal(a->first.begin(), a->first.end() - 1, b->first.begin())) break;
        auto c = a->first;
        c.push_back(b->first.back());
        bool keep = true;
        for (std::size_t drop = 0; keep && drop + 2 < c.size(); ++drop) {
          auto sub = c;
          sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
          keep = level.count(sub) > 0;
        }
        if (keep) candidates.push_back(std::move(c));
      }
    }
    IdSets next;
    for (auto& c : candidates) {
      std::size_t n = 0;
      for (const auto& [ids, m] : in.unique)
        if (ids.size() >= c.size() && is_subset(c, ids)) n += m;
      if (n >= need) next.emplace(std::move(c), n);
    }
    level = std::move(next);
  }
  return frequent;
}

ItemSet names(const Interned& in, const std::vector<std::uint32_t>& ids) {
  ItemSet out;
  for (auto id : ids) out.push_back(in.items[id]);
  return out;
}

// ---- clustering ---------------------------------------------------------------

/// The parts of a feature set the similarity looks at, interned to ids.
struct Profile {
  std::array<std::vector<std::uint32_t>, 4> parts;
  bool operator<(const Profile& o) const { return parts < o.parts; }
};

double jaccard_ids(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

// Same arithmetic as sql::similarity with unit weights.
double profile_similarity(const Profile& a, const Profile& b) {
  double total = 0;
  for (std::size_t k = 0; k < 4; ++k) total += jaccard_ids(a.parts[k], b.parts[k]);
  return total / 4.0;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// ---- completion helpers --------------------------------------------------------

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Item tag and name parts: "attr:temp@watertemp" -> {"attr", "temp", "watertemp", ""}.
struct ItemParts {
  std::string tag, name, relation, op;
};

ItemParts split_item(const Item& item) {
  ItemParts p;
  const auto colon = item.find(':');
  p.tag = item.substr(0, colon);
  std::string rest = item.substr(colon + 1);
  if (p.tag == "src") {
    p.name = rest;
    return p;
  }
  if (p.tag == "pred-template") {
    const auto space = rest.find(' ');
    p.op = rest.substr(space + 1);
    rest = rest.substr(0, space);
  }
  const auto at = rest.rfind('@');
  p.name = rest.substr(0, at);
  p.relation = at == std::string::npos ? "" : rest.substr(at + 1);
  return p;
}

CompletionKind kind_of(const ItemParts& p) {
  if (p.tag == "src") return CompletionKind::kRelation;
  if (p.tag == "attr") return CompletionKind::kAttribute;
  return CompletionKind::kPredicate;
}

/// Which kinds fit at the end of `context`, judged by the last clause keyword.
std::set<CompletionKind> kinds_at_end(const std::string& context) {
  const std::set<CompletionKind> all = {CompletionKind::kRelation, CompletionKind::kAttribute,
                                        CompletionKind::kPredicate};
  std::vector<sql::Token> tokens;
  try {
    tokens = sql::tokenize(context);
  } catch (const Error&) {
    return all;
  }
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (it->type != sql::TokenType::kIdentifier) continue;
    if (it->is_keyword("FROM") || it->is_keyword("JOIN")) return {CompletionKind::kRelation};
    if (it->is_keyword("SELECT") || it->is_keyword("BY")) return {CompletionKind::kAttribute};
    if (it->is_keyword("WHERE") || it->is_keyword("AND") || it->is_keyword("OR") ||
        it->is_keyword("ON") || it->is_keyword("HAVING") || it->is_keyword("NOT"))
      return {CompletionKind::kPredicate, CompletionKind::kAttribute};
  }
  return all;
}

std::string lower(std::string s) { return sql::to_lower(s); }

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

sql::FeatureSet features_of(const std::string& text, const sql::SchemaSnapshot* schema) {
  return sql::extract_features(sql::canonicalize(sql::parse(text)), schema);
}

}  // namespace

// ---- config and items -----------------------------------------------------------

void MinerConfig::validate() const {
  if (session_gap_ms <= 0) throw Error(ErrorCode::kInvalidArgument, "session_gap_ms must be positive");
  check_fraction(session_sim_threshold, "session_sim_threshold");
  check_fraction(min_support, "min_support");
  check_fraction(min_confidence, "min_confidence");
  check_fraction(cluster_link_threshold, "cluster_link_threshold");
}

ItemSet feature_items(const sql::FeatureSet& fs) {
  std::set<Item> items;
  for (const auto& r : fs.data_sources) items.insert("src:" + r);
  for (const auto& a : fs.attributes) items.insert("attr:" + a.attribute + "@" + a.relation);
  for (const auto& p : fs.predicates) items.insert("pred-template:" + p.template_key());
  return {items.begin(), items.end()};
}

std::vector<FrequentItemset> frequent_itemsets(const std::vector<ItemSet>& transactions,
                                               double min_support) {
  check_fraction(min_support, "min_support");
  const Interned in = intern(transactions);
  std::vector<FrequentItemset> out;
  for (const auto& [ids, n] : apriori(in, min_support)) out.push_back({names(in, ids), n});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.items.size() < b.items.size();
  });
  return out;
}

std::vector<AssociationRule> association_rules(const std::vector<ItemSet>& transactions,
                                               double min_support, double min_confidence) {
  check_fraction(min_support, "min_support");
  check_fraction(min_confidence, "min_confidence");
  const Interned in = intern(transactions);
  const IdSets freq = apriori(in, min_support);
  std::vector<AssociationRule> rules;
  for (const auto& [ids, n] : freq) {
    if (ids.size() < 2) continue;
    for (std::size_t c = 0; c < ids.size(); ++c) {
      auto ante = ids;
      ante.erase(ante.begin() + static_cast<std::ptrdiff_t>(c));
      const double confidence = static_cast<double>(n) / static_cast<double>(freq.at(ante));
      if (confidence + 1e-12 < min_confidence) continue;
      rules.push_back({names(in, ante), in.items[ids[c]],
                       static_cast<double>(n) / static_cast<double>(in.total), confidence});
    }
  }
  std::sort(rules.begin(), rules.end(), [](const auto& a, const auto& b) {
    if (a.support != b.support) return a.support > b.support;
    return std::tie(a.antecedent, a.consequent) < std::tie(b.antecedent, b.consequent);
  });
  return rules;
}

std::vector<std::vector<Qid>> cluster(const std::vector<const store::StoredQuery*>& queries,
                                      double threshold) {
  check_fraction(threshold, "cluster_link_threshold");
  // Queries with equal profiles are similarity 1 apart, so cluster profiles.
  std::map<std::string, std::uint32_t> dict;
  const auto id = [&](std::string key) {
    return dict.emplace(std::move(key), static_cast<std::uint32_t>(dict.size())).first->second;
  };
  std::map<Profile, std::vector<Qid>> groups;
  std::vector<std::vector<Qid>> out;
  for (const auto* q : queries) {
    if (!q->parsed()) {
      out.push_back({q->qid});
      continue;
    }
    const auto& f = q->features;
    Profile p;
    for (const auto& r : f.data_sources) p.parts[0].push_back(id("s" + r));
    for (const auto& a : f.attributes)
      p.parts[1].push_back(id("a" + a.attribute + "@" + a.relation + "#" +
                              std::string(sql::role_name(a.role))));
    for (const auto& t : sql::predicate_templates(f)) p.parts[2].push_back(id("p" + t));
    for (const auto& j : f.join_pairs) p.parts[3].push_back(id("j" + j.first + "~" + j.second));
    for (auto& part : p.parts) std::sort(part.begin(), part.end());
    groups[p].push_back(q->qid);
  }

  // Single linkage at a threshold keeps exactly the maximum spanning tree
  // edges at or above it (Prim over the dense similarity graph).
  std::vector<const Profile*> profiles;
  for (const auto& [p, _] : groups) profiles.push_back(&p);
  const std::size_t n = profiles.size();
  UnionFind uf(n);
  std::vector<double> best(n, -1.0);
  std::vector<std::size_t> link(n, 0);
  std::vector<bool> in_tree(n, false);
  for (std::size_t step = 0, cur = 0; step < n; ++step) {
    in_tree[cur] = true;
    if (step > 0 && best[cur] >= threshold) uf.unite(cur, link[cur]);
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double s = profile_similarity(*profiles[cur], *profiles[v]);
      if (s > best[v]) {
        best[v] = s;
        link[v] = cur;
      }
      if (next == n || best[v] > best[next]) next = v;
    }
    cur = next;
  }
  std::map<std::size_t, std::vector<Qid>> merged;
  std::size_t i = 0;
  for (const auto& [_, ids] : groups) {
    auto& m = merged[uf.find(i++)];
    m.insert(m.end(), ids.begin(), ids.end());
  }
  for (auto& [_, ids] : merged) {
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- model ------------------------------------------------------------------------

std::uint32_t SuggestionModel::support_count(const ItemSet& items) const {
  std::uint32_t n = 0;
  for (const auto& [set, m] : itemsets)
    if (is_subset(items, set)) n += m;
  return n;
}

std::uint32_t SuggestionModel::conditional_count(const ItemSet& context, const Item& item) const {
  ItemSet all = context;
  all.insert(std::lower_bound(all.begin(), all.end(), item), item);
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return support_count(all);
}

std::string SuggestionModel::content_json() const {
  codec::Json j = codec::Json::object();
  j["seq"] = built_at_seq;
  j["transactions"] = transactions;
  j["global"] = global_counts;
  codec::Json sets = codec::Json::array();
  for (const auto& [s, n] : itemsets) sets.push_back({{"items", s}, {"count", n}});
  j["itemsets"] = std::move(sets);
  codec::Json rs = codec::Json::array();
  for (const auto& r : rules)
    rs.push_back({{"antecedent", r.antecedent},
                  {"consequent", r.consequent},
                  {"support", r.support},
                  {"confidence", r.confidence}});
  j["rules"] = std::move(rs);
  j["templates"] = template_popularity;
  codec::Json preds = codec::Json::array();
  for (const auto& [p, n] : nonempty_predicates)
    preds.push_back({{"attr", p.attribute}, {"rel", p.relation}, {"op", p.op}, {"const", p.constant},
                     {"count", n}});
  j["nonempty_predicates"] = std::move(preds);
  codec::Json cs = codec::Json::array();
  for (const auto& c : clusters) cs.push_back(c);
  j["clusters"] = std::move(cs);
  j["schema"] = schema ? codec::to_json(*schema) : codec::Json();
  return j.dump();
}

std::string_view completion_kind_name(CompletionKind k) {
  switch (k) {
    case CompletionKind::kRelation: return "relation";
    case CompletionKind::kAttribute: return "attribute";
    case CompletionKind::kPredicate: return "predicate";
    case CompletionKind::kAny: return "any";
  }
  return "any";
}

CompletionKind parse_completion_kind(std::string_view name) {
  for (auto k : {CompletionKind::kRelation, CompletionKind::kAttribute, CompletionKind::kPredicate,
                 CompletionKind::kAny})
    if (sql::iequals(name, completion_kind_name(k))) return k;
  throw Error(ErrorCode::kInvalidArgument, "unknown completion kind '" + std::string(name) + "'");
}

std::string_view correction_signal_name(CorrectionSignal s) {
  return s == CorrectionSignal::kEmptyResult ? "empty-result" : "unknown-identifier";
}

CorrectionSignal parse_correction_signal(std::string_view name) {
  if (sql::iequals(name, "empty-result")) return CorrectionSignal::kEmptyResult;
  if (sql::iequals(name, "unknown-identifier")) return CorrectionSignal::kUnknownIdentifier;
  throw Error(ErrorCode::kInvalidArgument, "unknown correction signal '" + std::string(name) + "'");
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

// ---- miner ------------------------------------------------------------------------

Miner::Miner(store::Store& store, MinerConfig config, meta::ExecutorOptions executor_options)
    : store_(store),
      config_(config),
      executor_(store, std::move(executor_options)),
      next_version_(config.model_version),
      model_(std::make_shared<SuggestionModel>()) {
  config_.validate();
}

SessionReport Miner::segment_sessions(const std::string& user) {
  store::Store::Batch batch(store_);
  const auto snap = store_.snapshot();
  std::vector<const store::StoredQuery*> mine;
  snap->for_each([&](const store::StoredQuery& q) {
    if (q.owner == user) mine.push_back(&q);
  });
  std::sort(mine.begin(), mine.end(), [](const auto* a, const auto* b) {
    return std::tie(a->submitted_at, a->qid) < std::tie(b->submitted_at, b->qid);
  });
  std::set<std::pair<Qid, Qid>> existing;
  for (std::size_t i = 0; i < snap->edge_count(); ++i)
    existing.emplace(snap->edge(i).from, snap->edge(i).to);

  SessionReport report;
  report.queries = mine.size();
  Qid session = 0;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    const auto& cur = *mine[i];
    const store::StoredQuery* prev = i ? mine[i - 1] : nullptr;
    const bool fresh = !prev || cur.submitted_at - prev->submitted_at > config_.session_gap_ms ||
                       sql::similarity(prev->features, cur.features) < config_.session_sim_threshold;
    if (fresh) {
      session = cur.qid;
      ++report.sessions;
    }
    if (cur.session_id != session) {
      store_.append(store::SessionAssigned{cur.qid, session});
      ++report.assignments_written;
    }
    if (fresh || existing.count({prev->qid, cur.qid})) continue;
    store::SessionEdge edge{prev->qid, cur.qid, store::EdgeType::kTemporal, std::nullopt};
    auto script = sql::diff(prev->features, cur.features);
    if (!script.empty()) {
      edge.type = store::EdgeType::kModification;
      edge.edit_script = std::move(script);
    }
    store_.append(store::EdgeAdded{std::move(edge)});
    ++report.edges_written;
  }
  return report;
}

SessionReport Miner::segment_all_sessions() {
  std::set<std::string> users;
  store_.snapshot()->for_each([&](const store::StoredQuery& q) { users.insert(q.owner); });
  SessionReport total;
  for (const auto& u : users) {
    const auto r = segment_sessions(u);
    total.queries += r.queries;
    total.sessions += r.sessions;
    total.assignments_written += r.assignments_written;
    total.edges_written += r.edges_written;
  }
  return total;
}

std::vector<AssociationRule> Miner::mine_association_rules() const {
  std::vector<ItemSet> transactions;
  store_.snapshot()->for_each(
      [&](const store::StoredQuery& q) { transactions.push_back(feature_items(q.features)); });
  return association_rules(transactions, config_.min_support, config_.min_confidence);
}

std::vector<std::vector<Qid>> Miner::cluster_queries() const {
  const auto snap = store_.snapshot();
  std::vector<const store::StoredQuery*> all;
  snap->for_each([&](const store::StoredQuery& q) { all.push_back(&q); });
  return cluster(all, config_.cluster_link_threshold);
}

std::shared_ptr<const SuggestionModel> Miner::build_suggestion_model() {
  const auto snap = store_.snapshot();
  auto m = std::make_shared<SuggestionModel>();
  m->built_at_seq = snap->seq();
  std::vector<ItemSet> transactions;
  std::vector<const store::StoredQuery*> all;
  std::map<ItemSet, std::uint32_t> distinct;
  snap->for_each([&](const store::StoredQuery& q) {
    all.push_back(&q);
    ++m->template_popularity[meta::CorpusStats::template_key(q)];
    auto items = feature_items(q.features);
    if (!items.empty()) {
      for (const auto& it : items) ++m->global_counts[it];
      ++distinct[items];
      ++m->transactions;
    }
    transactions.push_back(std::move(items));
    if (q.stats.result_cardinality.value_or(0) > 0)
      for (const auto& p : q.features.predicates) ++m->nonempty_predicates[p];
  });
  m->itemsets.assign(distinct.begin(), distinct.end());
  m->rules = association_rules(transactions, config_.min_support, config_.min_confidence);
  m->clusters = cluster(all, config_.cluster_link_threshold);
  for (std::size_t i = 0; i < m->clusters.size(); ++i)
    for (Qid q : m->clusters[i]) m->cluster_of[q] = i;
  if (const auto* s = snap->current_schema_or_null())
    m->schema = std::make_shared<const sql::SchemaSnapshot>(*s);
  m->version = next_version_.fetch_add(1);
  std::lock_guard lock(model_mutex_);
  model_ = m;
  return m;
}

std::shared_ptr<const SuggestionModel> Miner::model() const {
  std::lock_guard lock(model_mutex_);
  return model_;
}

std::vector<Completion> Miner::suggest_completions(const std::string& partial, CompletionKind kind,
                                                   std::size_t limit) const {
  const auto m = model();
  // The identifier being typed, unless it is a finished keyword.
  std::size_t cut = partial.size();
  while (cut > 0 && ident_char(partial[cut - 1])) --cut;
  std::string prefix = lower(partial.substr(cut));
  if (!prefix.empty() && sql::is_reserved_word(prefix)) {
    prefix.clear();
    cut = partial.size();
  }
  const std::string context_text = partial.substr(0, cut);

  sql::FeatureSet context_fs;
  const bool blank = std::all_of(context_text.begin(), context_text.end(),
                                 [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (!blank) context_fs = features_of(context_text, m->schema.get());
  const ItemSet context = feature_items(context_fs);

  std::set<CompletionKind> kinds =
      kind == CompletionKind::kAny ? kinds_at_end(context_text) : std::set<CompletionKind>{kind};

  struct Scored {
    Completion c;
    int tier;
  };
  std::map<Item, Scored> scored;
  const auto offer = [&](const Item& item, int tier, double score, const char* basis) {
    if (std::binary_search(context.begin(), context.end(), item)) return;
    const ItemParts p = split_item(item);
    const CompletionKind k = kind_of(p);
    if (!kinds.count(k) || p.name == "*" || !starts_with(p.name, prefix)) return;
    // Attributes and predicates must belong to a relation already named.
    if (k != CompletionKind::kRelation && !context_fs.data_sources.empty() &&
        p.relation != sql::kUnresolved && !context_fs.data_sources.count(p.relation))
      return;
    if (auto it = scored.find(item);
        it != scored.end() && (it->second.tier > tier ||
                               (it->second.tier == tier && it->second.c.score >= score)))
      return;
    Completion c;
    c.text = k == CompletionKind::kPredicate ? p.name + " " + p.op : p.name;
    c.kind = k;
    c.item = item;
    c.score = score;
    c.basis = basis;
    scored[item] = {std::move(c), tier};
  };

  for (const auto& r : m->rules)
    if (!context.empty() && is_subset(r.antecedent, context)) offer(r.consequent, 3, r.confidence, "rule");
  const std::uint32_t context_count = context.empty() ? 0 : m->support_count(context);
  for (const auto& [item, n] : m->global_counts) {
    if (context_count > 0)
      if (const auto c = m->conditional_count(context, item); c > 0)
        offer(item, 2, static_cast<double>(c) / context_count, "conditional");
    offer(item, 1, static_cast<double>(n) / static_cast<double>(std::max<std::size_t>(1, m->transactions)),
          "global");
  }
  if (m->schema) {
    for (const auto& [rel, cols] : m->schema->relations) {
      offer("src:" + rel, 0, 0.0, "schema");
      for (const auto& col : cols) offer("attr:" + col.name + "@" + rel, 0, 0.0, "schema");
    }
  }

  std::vector<Scored> ranked;
  for (auto& [_, s] : scored) ranked.push_back(std::move(s));
  std::sort(ranked.begin(), ranked.end(), [](const Scored& a, const Scored& b) {
    if (a.tier != b.tier) return a.tier > b.tier;
    if (a.c.score != b.c.score) return a.c.score > b.c.score;
    return std::tie(a.c.text, a.c.item) < std::tie(b.c.text, b.c.item);
  });
  // One entry per inserted text; the best-ranked item for it wins.
  std::vector<Completion> out;
  std::set<std::pair<CompletionKind, std::string>> seen;
  for (auto& s : ranked) {
    if (out.size() >= limit) break;
    if (seen.emplace(s.c.kind, s.c.text).second) out.push_back(std::move(s.c));
  }
  return out;
}

std::vector<Correction> Miner::suggest_corrections(const std::string& query,
                                                   CorrectionSignal signal) const {
  const auto m = model();
  const sql::SchemaSnapshot* schema = m->schema.get();
  const sql::FeatureSet fs = features_of(query, schema);
  std::vector<Correction> out;

  if (signal == CorrectionSignal::kEmptyResult) {
    for (const auto& p : fs.predicates) {
      std::vector<Correction> found;
      for (const auto& [logged, n] : m->nonempty_predicates) {
        if (logged.attribute != p.attribute || logged == p) continue;
        if (logged.relation != p.relation && logged.relation != sql::kUnresolved &&
            p.relation != sql::kUnresolved)
          continue;
        const std::string text = logged.to_string();
        auto same = std::find_if(found.begin(), found.end(),
                                 [&](const Correction& c) { return c.replacement == text; });
        if (same != found.end()) {
          same->popularity += n;
          continue;
        }
        if (text == p.to_string()) continue;
        found.push_back({p.to_string(), text, 0, n, ""});
      }
      out.insert(out.end(), found.begin(), found.end());
    }
    std::stable_sort(out.begin(), out.end(), [](const Correction& a, const Correction& b) {
      if (a.popularity != b.popularity) return a.popularity > b.popularity;
      return std::tie(a.original, a.replacement) < std::tie(b.original, b.replacement);
    });
    return out;
  }

  // Known names with their popularity in the log.
  std::map<std::string, std::uint32_t> relations, attributes;
  for (const auto& [item, n] : m->global_counts) {
    const ItemParts p = split_item(item);
    if (p.tag == "src") relations[p.name] += n;
    else if (p.tag == "attr" && p.name != "*") attributes[p.name] += n;
  }
  if (schema)
    for (const auto& [rel, cols] : schema->relations) {
      relations.emplace(rel, 0);
      for (const auto& c : cols) attributes.emplace(c.name, 0);
    }
  const auto known_relation = [&](const std::string& r) {
    return schema ? schema->has_relation(r) : relations.count(r) > 0;
  };
  const auto known_attribute = [&](const std::string& a) {
    if (!schema) return attributes.count(a) > 0;
    for (const auto& [_, cols] : schema->relations)
      for (const auto& c : cols)
        if (c.name == a) return true;
    return false;
  };

  std::vector<std::string> unknown_rel, unknown_attr;
  for (const auto& r : fs.data_sources)
    if (!known_relation(r)) unknown_rel.push_back(r);
  std::set<std::string> attr_names;
  for (const auto& a : fs.attributes)
    if (a.attribute != "*") attr_names.insert(a.attribute);
  for (const auto& p : fs.predicates) attr_names.insert(p.attribute);
  for (const auto& a : attr_names)
    if (!known_attribute(a)) unknown_attr.push_back(a);

  const auto tokens = sql::tokenize(query);
  const auto fix = [&](const std::string& bad, const std::map<std::string, std::uint32_t>& pool) {
    const std::size_t max_d = bad.size() <= 4 ? 1 : 2;
    std::vector<Correction> found;
    for (const auto& [name, pop] : pool) {
      const std::size_t d = edit_distance(bad, name);
      if (d == 0 || d > max_d) continue;
      std::string corrected = query;
      for (auto it = tokens.rbegin(); it != tokens.rend(); ++it)
        if (it->type == sql::TokenType::kIdentifier && lower(it->text) == bad)
          corrected.replace(it->begin, it->end - it->begin, name);
      found.push_back({bad, name, d, pop, std::move(corrected)});
    }
    std::sort(found.begin(), found.end(), [](const Correction& a, const Correction& b) {
      if (a.distance != b.distance) return a.distance < b.distance;
      if (a.popularity != b.popularity) return a.popularity > b.popularity;
      return a.replacement < b.replacement;
    });
    out.insert(out.end(), found.begin(), found.end());
  };
  for (const auto& r : unknown_rel) fix(r, relations);
  for (const auto& a : unknown_attr) fix(a, attributes);
  return out;
}

std::vector<meta::MatchResult> Miner::recommend(const std::vector<RecentInput>& recent,
                                                std::size_t k, const meta::RankWeights& weights,
                                                const store::Principal& principal) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (recent.empty()) throw Error(ErrorCode::kInvalidArgument, "no recent queries given");
  weights.validate();
  const auto snap = store_.snapshot();
  const auto m = model();
  sql::FeatureSet target;
  std::set<Qid> inputs;
  for (const auto& r : recent) {
    if (const Qid* q = std::get_if<Qid>(&r)) {
      target.merge(snap->get(*q, principal).features);
      inputs.insert(*q);
    } else {
      target.merge(executor_.features_of_text(*snap, std::get<std::string>(r)));
    }
  }
  std::vector<Qid> candidates;
  for (const auto* q : snap->scan({}, principal))
    if (!inputs.count(q->qid)) candidates.push_back(q->qid);
  std::vector<meta::MatchResult> out;
  std::set<std::size_t> used_clusters;
  for (auto& r : executor_.rank(*snap, candidates, weights, &target)) {
    if (out.size() >= k) break;
    const auto c = m->cluster_of.find(r.qid);
    if (c != m->cluster_of.end() && !used_clusters.insert(c->second).second) continue;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cqms::miner
