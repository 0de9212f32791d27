#include "cqms/meta/meta_query.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>

#include "cqms/error.hpp"
#include "cqms/profiler/profiler.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/lexer.hpp"
#include "cqms/sql/parser.hpp"
#include "cqms/sql/similarity.hpp"

namespace cqms::meta {

using store::StoredQuery;

namespace {

bool relation_matches(const std::string& wanted, const std::string& actual) {
  return wanted.empty() || wanted == sql::kUnresolved || wanted == actual;
}

std::optional<double> as_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string describe_range(const Range& r) {
  std::string out = "[";
  out += r.lo ? sql::normalize_number(std::to_string(*r.lo)) : "-inf";
  out += ", ";
  out += r.hi ? sql::normalize_number(std::to_string(*r.hi)) : "inf";
  return out + "]";
}

EpochMs system_now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Atom Atom::references(std::string relation) {
  Atom a;
  a.kind = AtomKind::kReferences;
  a.relation = std::move(relation);
  return a;
}

Atom Atom::has_attribute(std::string attribute, std::string relation,
                         std::optional<sql::AttributeRole> role) {
  Atom a;
  a.kind = AtomKind::kHasAttribute;
  a.attribute = std::move(attribute);
  a.relation = std::move(relation);
  a.role = role;
  return a;
}

Atom Atom::has_predicate(std::string attribute, std::string relation, std::string op,
                         std::optional<std::string> constant, Range range) {
  Atom a;
  a.kind = AtomKind::kHasPredicate;
  a.attribute = std::move(attribute);
  a.relation = std::move(relation);
  a.op = std::move(op);
  a.constant = std::move(constant);
  a.range = range;
  return a;
}

bool Atom::matches(const StoredQuery& q) const {
  const auto& fs = q.features;
  switch (kind) {
    case AtomKind::kReferences:
      return fs.data_sources.count(relation) > 0;
    case AtomKind::kHasAttribute:
      for (const auto& a : fs.attributes)
        if (a.attribute == attribute && relation_matches(relation, a.relation) &&
            (!role || a.role == *role))
          return true;
      return false;
    case AtomKind::kHasPredicate: {
      const bool ranged = range.lo || range.hi;
      for (const auto& p : fs.predicates) {
        if (p.attribute != attribute || !relation_matches(relation, p.relation)) continue;
        if (!op.empty() && p.op != op) continue;
        if (constant && p.constant != *constant) continue;
        if (ranged) {
          const auto v = as_number(p.constant);
          if (!v || !range.contains(*v)) continue;
        }
        return true;
      }
      return false;
    }
    case AtomKind::kAuthor:
      return q.owner == author;
    case AtomKind::kExecMs:
      return range.contains(static_cast<double>(q.stats.execution_ms));
    case AtomKind::kCardinality:
      return q.stats.result_cardinality &&
             range.contains(static_cast<double>(*q.stats.result_cardinality));
    case AtomKind::kSubmitted:
      return range.contains(static_cast<double>(q.submitted_at));
  }
  return false;
}

std::string Atom::describe() const {
  const std::string rel = relation.empty() ? std::string(sql::kUnresolved) : relation;
  switch (kind) {
    case AtomKind::kReferences:
      return "references(" + relation + ")";
    case AtomKind::kHasAttribute:
      return "has-attribute(" + attribute + ", " + rel +
             (role ? ", " + std::string(sql::role_name(*role)) : "") + ")";
    case AtomKind::kHasPredicate: {
      std::string out = "has-predicate(" + attribute + ", " + rel;
      if (!op.empty()) out += ", " + op;
      if (constant) out += ", " + *constant;
      if (range.lo || range.hi) out += ", " + describe_range(range);
      return out + ")";
    }
    case AtomKind::kAuthor:
      return "author(" + author + ")";
    case AtomKind::kExecMs:
      return "exec-ms" + describe_range(range);
    case AtomKind::kCardinality:
      return "cardinality" + describe_range(range);
    case AtomKind::kSubmitted:
      return "submitted" + describe_range(range);
  }
  return "?";
}

bool Cond::evaluate(const StoredQuery& q) const {
  switch (op) {
    case Op::kAtom:
      return atom.matches(q);
    case Op::kAnd:
      return std::all_of(children.begin(), children.end(),
                         [&](const Cond& c) { return c.evaluate(q); });
    case Op::kOr:
      return std::any_of(children.begin(), children.end(),
                         [&](const Cond& c) { return c.evaluate(q); });
    case Op::kNot:
      return !children.front().evaluate(q);
  }
  return false;
}

void Cond::matched_atoms(const StoredQuery& q, std::vector<std::string>& out) const {
  if (op == Op::kAtom) {
    if (atom.matches(q)) out.push_back(atom.describe());
    return;
  }
  if (op == Op::kNot) return;  // a negated atom holding is not a reason to match
  for (const auto& c : children) c.matched_atoms(q, out);
}

void RankWeights::validate() const {
  const double w[] = {similarity, popularity, recency, efficiency, small_cardinality};
  double sum = 0;
  for (double x : w) {
    if (!(x >= 0) || !std::isfinite(x))
      throw Error(ErrorCode::kInvalidWeights, "rank weights must be non-negative");
    sum += x;
  }
  if (sum <= 0) throw Error(ErrorCode::kInvalidWeights, "rank weights must not all be zero");
}

std::string Tuple::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if (i < columns.size()) out += columns[i] + "=";
    out += values[i].to_string();
  }
  return out + ")";
}

namespace {

void validate_cond(const Cond& c, int depth) {
  if (depth > 64) throw Error(ErrorCode::kInvalidMetaQuery, "condition nested too deeply");
  switch (c.op) {
    case Cond::Op::kAtom: {
      const Atom& a = c.atom;
      if ((a.kind == AtomKind::kReferences && a.relation.empty()) ||
          ((a.kind == AtomKind::kHasAttribute || a.kind == AtomKind::kHasPredicate) &&
           a.attribute.empty()) ||
          (a.kind == AtomKind::kAuthor && a.author.empty()))
        throw Error(ErrorCode::kInvalidMetaQuery, "incomplete atom " + a.describe());
      if (a.range.lo && a.range.hi && *a.range.lo > *a.range.hi)
        throw Error(ErrorCode::kInvalidMetaQuery, "empty range in " + a.describe());
      return;
    }
    case Cond::Op::kNot:
      if (c.children.size() != 1)
        throw Error(ErrorCode::kInvalidMetaQuery, "NOT takes exactly one condition");
      break;
    default:
      if (c.children.empty())
        throw Error(ErrorCode::kInvalidMetaQuery, "AND/OR need at least one condition");
  }
  for (const auto& child : c.children) validate_cond(child, depth + 1);
}

}  // namespace

void MetaQuery::validate() const {
  if (limit && *limit == 0) throw Error(ErrorCode::kInvalidMetaQuery, "limit must be positive");
  if (rank) rank->validate();
  std::visit(
      [](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, KeywordQuery>) {
          if (q.terms.empty()) throw Error(ErrorCode::kInvalidMetaQuery, "keyword search needs terms");
        } else if constexpr (std::is_same_v<T, SubstringQuery>) {
          if (q.pattern.empty()) throw Error(ErrorCode::kInvalidMetaQuery, "empty substring pattern");
        } else if constexpr (std::is_same_v<T, FeatureQuery>) {
          validate_cond(q.cond, 0);
        } else if constexpr (std::is_same_v<T, DataQuery>) {
          if (q.include.empty() && q.exclude.empty())
            throw Error(ErrorCode::kInvalidMetaQuery, "data condition needs include or exclude tuples");
          for (const auto& t : q.include) {
            if (std::find(q.exclude.begin(), q.exclude.end(), t) != q.exclude.end())
              throw Error(ErrorCode::kInvalidMetaQuery,
                          "tuple " + t.to_string() + " is both included and excluded");
          }
          for (const auto* list : {&q.include, &q.exclude})
            for (const auto& t : *list)
              if (!t.columns.empty() && t.columns.size() != t.values.size())
                throw Error(ErrorCode::kInvalidMetaQuery, "tuple columns and values differ in length");
        } else {
          if (q.k < 1) throw Error(ErrorCode::kInvalidMetaQuery, "k must be at least 1");
          if (!q.target && q.text.empty())
            throw Error(ErrorCode::kInvalidMetaQuery, "kNN needs a target qid or query text");
          q.weights.validate();
        }
      },
      body);
}

std::string_view certainty_name(Certainty c) {
  return c == Certainty::kDefinite ? "definite" : "possible";
}

bool row_matches(const store::Row& row, const std::vector<std::string>& columns, const Tuple& t) {
  if (!t.columns.empty()) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      auto it = std::find(columns.begin(), columns.end(), t.columns[i]);
      if (it == columns.end()) return false;
      const auto idx = static_cast<std::size_t>(it - columns.begin());
      if (idx >= row.size() || !(row[idx] == t.values[i])) return false;
    }
    return true;
  }
  if (row.size() != t.values.size()) return false;
  store::Row a = row;
  store::Row b = t.values;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

DataMatch match_data(const store::OutputSummary* summary, const DataQuery& cond) {
  if (!summary) return DataMatch::kPossible;
  const auto present = [&](const Tuple& t) {
    return std::any_of(summary->tuples.begin(), summary->tuples.end(),
                       [&](const store::Row& r) { return row_matches(r, summary->columns, t); });
  };
  for (const auto& t : cond.exclude)
    if (present(t)) return DataMatch::kNonMatch;
  const bool all_included = std::all_of(cond.include.begin(), cond.include.end(), present);
  if (summary->mode == store::SummaryMode::kFull)
    return all_included ? DataMatch::kMatch : DataMatch::kNonMatch;
  // A sample can neither prove an exclusion nor rule out a missing include.
  return DataMatch::kPossible;
}

MetaQuery from_partial(const std::string& partial) {
  const sql::FeatureSet fs = sql::extract_features(sql::canonicalize(sql::parse(partial)));
  std::vector<Cond> atoms;
  for (const auto& r : fs.data_sources) atoms.push_back(Cond::leaf(Atom::references(r)));
  for (const auto& p : fs.predicates) {
    if (p.constant == "?") continue;  // a parameter says nothing about the value
    atoms.push_back(Cond::leaf(Atom::has_predicate(p.attribute, p.relation, p.op, p.constant)));
  }
  if (atoms.empty())
    throw Error(ErrorCode::kInvalidMetaQuery, "the partial query names no relation or predicate yet");
  return MetaQuery{FeatureQuery{Cond::all(std::move(atoms))}, std::nullopt, std::nullopt};
}

std::vector<std::string> keyword_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '_' || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// ---- ranking ------------------------------------------------------------------

const std::string& CorpusStats::template_key(const StoredQuery& q) {
  return q.parsed() ? q.template_text : q.raw_text;
}

std::uint32_t CorpusStats::count(const StoredQuery& q) const {
  auto it = template_counts.find(template_key(q));
  return it == template_counts.end() ? 0 : it->second;
}

namespace {

double efficiency_of(const StoredQuery& q) {
  return 1.0 / (1.0 + static_cast<double>(q.stats.execution_ms) / 1000.0);
}

double small_cardinality_of(const StoredQuery& q) {
  if (!q.stats.result_cardinality) return 0.0;
  return 1.0 / (1.0 + static_cast<double>(*q.stats.result_cardinality));
}

}  // namespace

Executor::Executor(const store::Store& store, ExecutorOptions options)
    : store_(store), options_(std::move(options)) {
  if (!options_.now) options_.now = system_now;
}

std::shared_ptr<const CorpusStats> Executor::stats(const store::Snapshot& snap) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (cache_ && cache_->seq == snap.seq()) return cache_;
  }
  auto s = std::make_shared<CorpusStats>();
  s->seq = snap.seq();
  snap.for_each([&](const StoredQuery& q) {
    const auto n = ++s->template_counts[CorpusStats::template_key(q)];
    s->max_template_count = std::max(s->max_template_count, n);
    s->max_efficiency = std::max(s->max_efficiency, efficiency_of(q));
    s->max_small_cardinality = std::max(s->max_small_cardinality, small_cardinality_of(q));
  });
  std::shared_ptr<const CorpusStats> out = std::move(s);
  std::lock_guard lock(cache_mutex_);
  if (!cache_ || cache_->seq <= out->seq) cache_ = out;
  return out;
}

std::vector<MatchResult> Executor::rank(const store::Snapshot& snap,
                                        const std::vector<Qid>& candidates,
                                        const RankWeights& w, const sql::FeatureSet* target) const {
  w.validate();
  const auto st = stats(snap);
  const EpochMs now = options_.now();
  const double total = w.similarity + w.popularity + w.recency + w.efficiency + w.small_cardinality;
  std::vector<MatchResult> out;
  out.reserve(candidates.size());
  for (Qid qid : candidates) {
    const StoredQuery& q = snap.get(qid);
    const double sim = target ? sql::similarity(*target, q.features) : 0.0;
    const double pop = st->max_template_count
                           ? static_cast<double>(st->count(q)) / st->max_template_count
                           : 0.0;
    const double age = static_cast<double>(std::max<EpochMs>(0, now - q.submitted_at));
    const double rec = std::exp2(-age / options_.half_life_ms);
    const double eff = st->max_efficiency > 0 ? efficiency_of(q) / st->max_efficiency : 0.0;
    const double card =
        st->max_small_cardinality > 0 ? small_cardinality_of(q) / st->max_small_cardinality : 0.0;
    double score = (w.similarity * sim + w.popularity * pop + w.recency * rec +
                    w.efficiency * eff + w.small_cardinality * card) /
                   total;
    // Snap to a fixed grid so that scaling all weights cannot reorder ties
    // through rounding noise.
    score = std::clamp(std::round(score * 1e12) / 1e12, 0.0, 1.0);
    MatchResult m{qid, score, Certainty::kDefinite, {}};
    if (target) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "similarity=%.4f", sim);
      m.explanation.emplace_back(buf);
    }
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.qid < b.qid;
  });
  return out;
}

sql::FeatureSet Executor::features_of_text(const store::Snapshot& snap, const std::string& text) const {
  return sql::extract_features(sql::canonicalize(sql::parse(text)), snap.current_schema_or_null());
}

std::vector<MatchResult> Executor::execute(const MetaQuery& mq, const store::Principal& principal) const {
  mq.validate();
  const auto snap = store_.snapshot();
  const auto visible = snap->scan({}, principal);

  std::vector<MatchResult> out;
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, KnnQuery>) {
          sql::FeatureSet target;
          if (q.target) target = snap->get(*q.target, principal).features;
          else target = features_of_text(*snap, q.text);
          std::vector<Qid> ids;
          ids.reserve(visible.size());
          for (const auto* s : visible) ids.push_back(s->qid);
          out = rank(*snap, ids, q.weights, &target);
          if (out.size() > q.k) out.resize(q.k);
          return;
        } else {
          std::vector<std::string> terms;
          if constexpr (std::is_same_v<T, KeywordQuery>) {
            for (const auto& t : q.terms)
              for (auto& tok : keyword_tokens(t)) terms.push_back(std::move(tok));
            if (terms.empty())
              throw Error(ErrorCode::kInvalidMetaQuery, "keyword terms contain no words");
          }
          for (const StoredQuery* s : visible) {
            MatchResult m{s->qid, 1.0, Certainty::kDefinite, {}};
            if constexpr (std::is_same_v<T, KeywordQuery>) {
              auto tokens = keyword_tokens(s->parsed() ? s->canonical_text : s->raw_text);
              for (const auto& a : s->annotations)
                for (auto& tok : keyword_tokens(a.text)) tokens.push_back(std::move(tok));
              std::sort(tokens.begin(), tokens.end());
              bool all = true;
              for (const auto& t : terms) {
                if (!std::binary_search(tokens.begin(), tokens.end(), t)) {
                  all = false;
                  break;
                }
                m.explanation.push_back("keyword(" + t + ")");
              }
              if (!all) continue;
            } else if constexpr (std::is_same_v<T, SubstringQuery>) {
              if (s->raw_text.find(q.pattern) == std::string::npos) continue;
              m.explanation.push_back("substring(" + q.pattern + ")");
            } else if constexpr (std::is_same_v<T, FeatureQuery>) {
              if (!q.cond.evaluate(*s)) continue;
              q.cond.matched_atoms(*s, m.explanation);
            } else {
              const auto summary = s->summary_ref ? snap->summary(*s->summary_ref) : nullptr;
              const DataMatch d = match_data(summary.get(), q);
              if (d == DataMatch::kNonMatch) continue;
              m.certainty = d == DataMatch::kMatch ? Certainty::kDefinite : Certainty::kPossible;
              if (!summary) m.explanation.push_back("no output summary");
              else if (summary->mode == store::SummaryMode::kSample)
                m.explanation.push_back("sampled output summary");
              for (const auto& t : q.include) m.explanation.push_back("include" + t.to_string());
              for (const auto& t : q.exclude) m.explanation.push_back("exclude" + t.to_string());
            }
            out.push_back(std::move(m));
          }
          if (mq.rank) {
            std::vector<Qid> ids;
            for (const auto& m : out) ids.push_back(m.qid);
            auto ranked = rank(*snap, ids, *mq.rank, nullptr);
            std::unordered_map<Qid, MatchResult*> by_id;
            for (auto& m : out) by_id[m.qid] = &m;
            for (auto& r : ranked) {
              MatchResult& m = *by_id[r.qid];
              r.certainty = m.certainty;
              r.explanation = std::move(m.explanation);
            }
            out = std::move(ranked);
          }
        }
      },
      mq.body);

  std::stable_sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
    if (a.certainty != b.certainty) return a.certainty == Certainty::kDefinite;
    if (a.score != b.score) return a.score > b.score;
    return a.qid < b.qid;
  });
  if (mq.limit && out.size() > *mq.limit) out.resize(*mq.limit);
  return out;
}

}  // namespace cqms::meta
