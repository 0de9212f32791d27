#pragma once

// MetaQuery wire format:
//   {"type": "keyword",   "terms": ["salinity", ...]}
//   {"type": "substring", "pattern": "temp <"}
//   {"type": "feature",   "cond": COND}
//   {"type": "data",      "include": [TUPLE...], "exclude": [TUPLE...]}
//   {"type": "knn",       "qid": "12" | "text": "SELECT ...", "k": 5, "weights": WEIGHTS}
// plus optional "rank": WEIGHTS and "limit": n on any type.
//
// COND is one of
//   {"and": [COND...]}  {"or": [COND...]}  {"not": COND}
//   {"references": "watertemp"}
//   {"has_attribute": {"attr": "temp", "rel": "watertemp", "role": "where"}}
//   {"has_predicate": {"attr": "temp", "rel": "?", "op": "<", "const": 18, "min": 0, "max": 20}}
//   {"author": "ann"}
//   {"exec_ms": {"min": 0, "max": 100}}, likewise "cardinality" and "submitted"
// TUPLE is a list of values (the whole output row, as a multiset) or an
// object of column -> value (only those columns are compared).
// WEIGHTS is {"similarity", "popularity", "recency", "efficiency", "small_cardinality"}.

#include "cqms/codec.hpp"
#include "cqms/meta/meta_query.hpp"

namespace cqms::meta {

/// Throws InvalidMetaQuery on malformed input.
MetaQuery meta_query_from_json(const codec::Json& j);
codec::Json to_json(const MetaQuery& mq);
codec::Json to_json(const Cond& c);

RankWeights weights_from_json(const codec::Json& j, RankWeights defaults = {});
codec::Json to_json(const RankWeights& w);

codec::Json to_json(const MatchResult& m);

/// Literal text as it appears in canonical predicates: numbers normalized,
/// strings single-quoted.
std::string canonical_constant(const codec::Json& j);

}  // namespace cqms::meta
