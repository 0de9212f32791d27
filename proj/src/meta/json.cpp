#include "cqms/meta/json.hpp"

#include "cqms/error.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/lexer.hpp"

namespace cqms::meta {

using codec::Json;

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kInvalidMetaQuery, why); }

Range range_from(const Json& j) {
  Range r;
  if (!j.is_object()) bad("range must be an object with min/max");
  if (auto it = j.find("min"); it != j.end() && !it->is_null()) r.lo = it->get<double>();
  if (auto it = j.find("max"); it != j.end() && !it->is_null()) r.hi = it->get<double>();
  return r;
}

void put_range(Json& j, const Range& r) {
  if (r.lo) j["min"] = *r.lo;
  if (r.hi) j["max"] = *r.hi;
}

std::string lowered(const Json& j) { return sql::to_lower(j.get<std::string>()); }

Cond cond_from(const Json& j, int depth) {
  if (depth > 64) bad("condition nested too deeply");
  if (!j.is_object() || j.size() != 1) bad("each condition must be an object with one key");
  const auto& [key, v] = *j.items().begin();
  if (key == "and" || key == "or") {
    if (!v.is_array()) bad("'" + key + "' takes a list");
    std::vector<Cond> kids;
    for (const auto& c : v) kids.push_back(cond_from(c, depth + 1));
    return key == "and" ? Cond::all(std::move(kids)) : Cond::any(std::move(kids));
  }
  if (key == "not") return Cond::negate(cond_from(v, depth + 1));
  if (key == "references") return Cond::leaf(Atom::references(lowered(v)));
  if (key == "has_attribute") {
    std::optional<sql::AttributeRole> role;
    if (auto it = v.find("role"); it != v.end() && !it->is_null())
      role = sql::parse_role(it->get<std::string>());
    return Cond::leaf(Atom::has_attribute(lowered(codec::require(v, "attr")),
                                          v.contains("rel") ? lowered(v["rel"]) : "", role));
  }
  if (key == "has_predicate") {
    std::optional<std::string> constant;
    if (auto it = v.find("const"); it != v.end() && !it->is_null()) constant = canonical_constant(*it);
    Range r;
    if (auto it = v.find("min"); it != v.end() && !it->is_null()) r.lo = it->get<double>();
    if (auto it = v.find("max"); it != v.end() && !it->is_null()) r.hi = it->get<double>();
    std::string op = v.value("op", std::string());
    op = sql::to_upper(op);
    if (op == "!=") op = "<>";
    return Cond::leaf(Atom::has_predicate(lowered(codec::require(v, "attr")),
                                          v.contains("rel") ? lowered(v["rel"]) : "", op, constant, r));
  }
  Atom a;
  if (key == "author") {
    a.kind = AtomKind::kAuthor;
    a.author = v.get<std::string>();
  } else if (key == "exec_ms") {
    a.kind = AtomKind::kExecMs;
    a.range = range_from(v);
  } else if (key == "cardinality") {
    a.kind = AtomKind::kCardinality;
    a.range = range_from(v);
  } else if (key == "submitted") {
    a.kind = AtomKind::kSubmitted;
    a.range = range_from(v);
  } else {
    bad("unknown condition '" + key + "'");
  }
  return Cond::leaf(std::move(a));
}

Tuple tuple_from(const Json& j) {
  Tuple t;
  if (j.is_array()) {
    for (const auto& v : j) t.values.push_back(codec::value_from_json(v));
  } else if (j.is_object()) {
    for (const auto& [col, v] : j.items()) {
      t.columns.push_back(col);
      t.values.push_back(codec::value_from_json(v));
    }
  } else {
    t.values.push_back(codec::value_from_json(j));  // a bare scalar is a one-value row
  }
  return t;
}

Json to_json(const Tuple& t) {
  if (t.columns.empty()) {
    Json a = Json::array();
    for (const auto& v : t.values) a.push_back(codec::to_json(v));
    return a;
  }
  Json o = Json::object();
  for (std::size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = codec::to_json(t.values[i]);
  return o;
}

}  // namespace

std::string canonical_constant(const Json& j) {
  if (j.is_number()) return sql::normalize_number(j.dump());
  if (!j.is_string()) bad("predicate constants must be numbers or strings");
  const std::string s = j.get<std::string>();
  if (!s.empty() && s.front() == '\'') return s;
  if (s == "?") return s;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  if (!s.empty() && end == s.c_str() + s.size()) return sql::normalize_number(s);
  std::string quoted = "'";
  for (char c : s) {
    quoted += c;
    if (c == '\'') quoted += '\'';
  }
  return quoted + "'";
}

RankWeights weights_from_json(const Json& j, RankWeights w) {
  if (j.is_null()) return w;
  if (!j.is_object()) bad("weights must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) bad("weight '" + k + "' must be a number");
    const double x = v.get<double>();
    if (k == "similarity") w.similarity = x;
    else if (k == "popularity") w.popularity = x;
    else if (k == "recency") w.recency = x;
    else if (k == "efficiency") w.efficiency = x;
    else if (k == "small_cardinality") w.small_cardinality = x;
    else bad("unknown weight '" + k + "'");
  }
  return w;
}

Json to_json(const RankWeights& w) {
  return {{"similarity", w.similarity},
          {"popularity", w.popularity},
          {"recency", w.recency},
          {"efficiency", w.efficiency},
          {"small_cardinality", w.small_cardinality}};
}

MetaQuery meta_query_from_json(const Json& j) {
  try {
    if (!j.is_object()) bad("meta-query must be a JSON object");
    MetaQuery mq;
    const std::string type = codec::require(j, "type").get<std::string>();
    if (type == "keyword") {
      KeywordQuery k;
      const Json& terms = codec::require(j, "terms");
      if (terms.is_string()) k.terms.push_back(terms.get<std::string>());
      else k.terms = terms.get<std::vector<std::string>>();
      mq.body = std::move(k);
    } else if (type == "substring") {
      mq.body = SubstringQuery{codec::require(j, "pattern").get<std::string>()};
    } else if (type == "feature") {
      mq.body = FeatureQuery{cond_from(codec::require(j, "cond"), 0)};
    } else if (type == "data") {
      DataQuery d;
      for (const auto& t : j.value("include", Json::array())) d.include.push_back(tuple_from(t));
      for (const auto& t : j.value("exclude", Json::array())) d.exclude.push_back(tuple_from(t));
      mq.body = std::move(d);
    } else if (type == "knn") {
      KnnQuery k;
      if (auto it = j.find("qid"); it != j.end() && !it->is_null()) k.target = codec::parse_id(*it);
      k.text = j.value("text", std::string());
      const auto kk = j.value("k", std::int64_t{10});
      if (kk < 1) bad("k must be at least 1");
      k.k = static_cast<std::size_t>(kk);
      k.weights = weights_from_json(j.value("weights", Json()));
      mq.body = std::move(k);
    } else {
      bad("unknown meta-query type '" + type + "'");
    }
    if (auto it = j.find("rank"); it != j.end() && !it->is_null())
      mq.rank = weights_from_json(*it, RankWeights{0, 0, 0, 0, 0});
    if (auto it = j.find("limit"); it != j.end() && !it->is_null()) {
      const auto n = it->get<std::int64_t>();
      if (n < 1) bad("limit must be positive");
      mq.limit = static_cast<std::size_t>(n);
    }
    mq.validate();
    return mq;
  } catch (const Json::exception& e) {
    bad(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidMetaQuery || e.code() == ErrorCode::kInvalidWeights) throw;
    bad(e.what());
  }
}

Json to_json(const Cond& c) {
  switch (c.op) {
    case Cond::Op::kAnd:
    case Cond::Op::kOr: {
      Json kids = Json::array();
      for (const auto& k : c.children) kids.push_back(to_json(k));
      return {{c.op == Cond::Op::kAnd ? "and" : "or", std::move(kids)}};
    }
    case Cond::Op::kNot:
      return {{"not", to_json(c.children.front())}};
    case Cond::Op::kAtom:
      break;
  }
  const Atom& a = c.atom;
  Json body = Json::object();
  switch (a.kind) {
    case AtomKind::kReferences:
      return {{"references", a.relation}};
    case AtomKind::kHasAttribute:
      body["attr"] = a.attribute;
      if (!a.relation.empty()) body["rel"] = a.relation;
      if (a.role) body["role"] = sql::role_name(*a.role);
      return {{"has_attribute", std::move(body)}};
    case AtomKind::kHasPredicate:
      body["attr"] = a.attribute;
      if (!a.relation.empty()) body["rel"] = a.relation;
      if (!a.op.empty()) body["op"] = a.op;
      if (a.constant) body["const"] = *a.constant;
      put_range(body, a.range);
      return {{"has_predicate", std::move(body)}};
    case AtomKind::kAuthor:
      return {{"author", a.author}};
    case AtomKind::kExecMs:
      put_range(body, a.range);
      return {{"exec_ms", std::move(body)}};
    case AtomKind::kCardinality:
      put_range(body, a.range);
      return {{"cardinality", std::move(body)}};
    case AtomKind::kSubmitted:
      put_range(body, a.range);
      return {{"submitted", std::move(body)}};
  }
  return body;
}

Json to_json(const MetaQuery& mq) {
  Json j = std::visit(
      [](const auto& q) -> Json {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, KeywordQuery>) {
          return {{"type", "keyword"}, {"terms", q.terms}};
        } else if constexpr (std::is_same_v<T, SubstringQuery>) {
          return {{"type", "substring"}, {"pattern", q.pattern}};
        } else if constexpr (std::is_same_v<T, FeatureQuery>) {
          return {{"type", "feature"}, {"cond", to_json(q.cond)}};
        } else if constexpr (std::is_same_v<T, DataQuery>) {
          Json inc = Json::array(), exc = Json::array();
          for (const auto& t : q.include) inc.push_back(to_json(t));
          for (const auto& t : q.exclude) exc.push_back(to_json(t));
          return {{"type", "data"}, {"include", std::move(inc)}, {"exclude", std::move(exc)}};
        } else {
          Json k = {{"type", "knn"}};
          if (q.target) k["qid"] = codec::id_string(*q.target);
          else k["text"] = q.text;
          k["k"] = q.k;
          k["weights"] = to_json(q.weights);
          return k;
        }
      },
      mq.body);
  if (mq.rank) j["rank"] = to_json(*mq.rank);
  if (mq.limit) j["limit"] = *mq.limit;
  return j;
}

Json to_json(const MatchResult& m) {
  return {{"qid", codec::id_string(m.qid)},
          {"score", m.score},
          {"certainty", certainty_name(m.certainty)},
          {"explanation", m.explanation}};
}

}  // namespace cqms::meta
