#pragma once

#include <set>
#include <string>
#include <tuple>
#include <utility>

#include "cqms/sql/ast.hpp"
#include "cqms/sql/schema.hpp"

namespace cqms::sql {

/// Relation name used when an attribute cannot be tied to one relation.
inline constexpr const char* kUnresolved = "?";

enum class AttributeRole { kSelect, kWhere, kGroupBy, kOrderBy, kHaving };

std::string_view role_name(AttributeRole role);
AttributeRole parse_role(std::string_view name);

struct AttributeUse {
  std::string attribute;
  std::string relation;
  AttributeRole role = AttributeRole::kSelect;

  auto key() const { return std::tie(attribute, relation, role); }
  bool operator<(const AttributeUse& o) const { return key() < o.key(); }
  bool operator==(const AttributeUse& o) const { return key() == o.key(); }
};

/// A selection predicate `attribute op constant`. The constant is canonical
/// literal text: `18`, `'salinity'`, `?` for a parameter, `(1, 2)` for an IN
/// list and `1 AND 5` for BETWEEN.
struct Predicate {
  std::string attribute;
  std::string relation;
  std::string op;
  std::string constant;

  auto key() const { return std::tie(attribute, relation, op, constant); }
  bool operator<(const Predicate& o) const { return key() < o.key(); }
  bool operator==(const Predicate& o) const { return key() == o.key(); }

  /// The predicate with its constant stripped: "temp@watertemp <".
  std::string template_key() const { return attribute + "@" + relation + " " + op; }
  std::string to_string() const;
};

/// Unordered pair of relations equated by a column = column comparison;
/// stored with first <= second.
struct JoinPair {
  std::string first;
  std::string second;

  static JoinPair of(std::string a, std::string b) {
    if (b < a) std::swap(a, b);
    return {std::move(a), std::move(b)};
  }
  auto key() const { return std::tie(first, second); }
  bool operator<(const JoinPair& o) const { return key() < o.key(); }
  bool operator==(const JoinPair& o) const { return key() == o.key(); }
};

struct AggregateUse {
  std::string function;
  std::string attribute;  // "*" for COUNT(*)
  std::string relation;

  auto key() const { return std::tie(function, attribute, relation); }
  bool operator<(const AggregateUse& o) const { return key() < o.key(); }
  bool operator==(const AggregateUse& o) const { return key() == o.key(); }
};

/// The structured features of one query.
struct FeatureSet {
  std::set<std::string> data_sources;
  std::set<AttributeUse> attributes;
  std::set<Predicate> predicates;
  std::set<JoinPair> join_pairs;
  std::set<AggregateUse> aggregates;
  bool has_subquery = false;

  bool empty() const {
    return data_sources.empty() && attributes.empty() && predicates.empty() &&
           join_pairs.empty() && aggregates.empty() && !has_subquery;
  }
  bool operator==(const FeatureSet&) const = default;

  /// Union of two feature sets (used to merge several recent queries).
  void merge(const FeatureSet& other);
};

/// Walks a canonical tree and extracts its features. Unqualified attributes
/// are tied to the unique relation in scope that defines them according to
/// `schema`; without a schema, or when the owner is ambiguous, the relation
/// is "?". Never throws.
FeatureSet extract_features(const ParseTree& tree, const SchemaSnapshot* schema = nullptr);

}  // namespace cqms::sql
