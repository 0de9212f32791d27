#include "cqms/sql/features.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "cqms/error.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/lexer.hpp"

namespace cqms::sql {

std::string_view role_name(AttributeRole role) {
  switch (role) {
    case AttributeRole::kSelect: return "select";
    case AttributeRole::kWhere: return "where";
    case AttributeRole::kGroupBy: return "groupby";
    case AttributeRole::kOrderBy: return "orderby";
    case AttributeRole::kHaving: return "having";
  }
  return "select";
}

AttributeRole parse_role(std::string_view name) {
  if (name == "select") return AttributeRole::kSelect;
  if (name == "where") return AttributeRole::kWhere;
  if (name == "groupby") return AttributeRole::kGroupBy;
  if (name == "orderby") return AttributeRole::kOrderBy;
  if (name == "having") return AttributeRole::kHaving;
  throw Error(ErrorCode::kInvalidArgument, "unknown attribute role: " + std::string(name));
}

std::string Predicate::to_string() const { return attribute + " " + op + " " + constant; }

void FeatureSet::merge(const FeatureSet& other) {
  data_sources.insert(other.data_sources.begin(), other.data_sources.end());
  attributes.insert(other.attributes.begin(), other.attributes.end());
  predicates.insert(other.predicates.begin(), other.predicates.end());
  join_pairs.insert(other.join_pairs.begin(), other.join_pairs.end());
  aggregates.insert(other.aggregates.begin(), other.aggregates.end());
  has_subquery = has_subquery || other.has_subquery;
}

bool SchemaSnapshot::has_relation(const std::string& relation) const {
  return relations.count(relation) != 0;
}

bool SchemaSnapshot::has_attribute(const std::string& relation,
                                   const std::string& attribute) const {
  auto it = relations.find(relation);
  if (it == relations.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const Column& c) { return c.name == attribute; });
}

std::vector<std::string> SchemaSnapshot::owners(const std::string& attribute,
                                                const std::vector<std::string>& candidates) const {
  std::vector<std::string> out;
  for (const auto& rel : candidates) {
    if (has_attribute(rel, attribute) && std::find(out.begin(), out.end(), rel) == out.end())
      out.push_back(rel);
  }
  return out;
}

SchemaSnapshot SchemaSnapshot::normalized(SchemaSnapshot raw) {
  SchemaSnapshot out;
  out.effective_at = raw.effective_at;
  for (auto& [name, columns] : raw.relations) {
    const std::string rel = to_lower(name);
    if (out.relations.count(rel))
      throw Error(ErrorCode::kInvalidArgument, "duplicate relation in schema: " + rel);
    std::vector<Column> cols;
    for (auto& c : columns) {
      Column col{to_lower(c.name), c.type};
      if (std::any_of(cols.begin(), cols.end(), [&](const Column& x) { return x.name == col.name; }))
        throw Error(ErrorCode::kInvalidArgument,
                    "duplicate attribute " + col.name + " in relation " + rel);
      cols.push_back(std::move(col));
    }
    out.relations.emplace(rel, std::move(cols));
  }
  return out;
}

namespace {

struct Scope {
  std::map<std::string, std::string> names;  // alias or relation -> relation
  std::vector<std::string> relations;
};

bool is_constant(const Node& n) {
  return n.kind == NodeKind::kLiteral || (n.kind == NodeKind::kPlaceholder && !n.is_hole());
}

bool is_column(const Node& n) { return n.kind == NodeKind::kColumnRef && !n.value.empty(); }

std::string flip(const std::string& op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  if (op == ">=") return "<=";
  return op;
}

class Extractor {
 public:
  explicit Extractor(const SchemaSnapshot* schema) : schema_(schema) {}

  FeatureSet run(const ParseTree& tree) {
    statement(tree.root);
    return std::move(out_);
  }

 private:
  void statement(const Node& stmt) {
    Scope scope;
    if (const Node* from = stmt.find_child(NodeKind::kFromList)) {
      for (const auto& ref : from->children) {
        if (ref.kind != NodeKind::kTableRef) continue;
        scope.relations.push_back(ref.value);
        scope.names[ref.value] = ref.value;
        if (!ref.alias.empty()) {
          scope.names[ref.alias] = ref.value;
          scope.names[to_lower(ref.alias)] = ref.value;
        }
        out_.data_sources.insert(ref.value);
      }
    }
    scopes_.push_back(std::move(scope));
    for (const auto& clause : stmt.children) {
      switch (clause.kind) {
        case NodeKind::kSelectList:
          for (const auto& item : clause.children) operand(item, AttributeRole::kSelect);
          break;
        case NodeKind::kFromList:
          for (const auto& ref : clause.children)
            for (const auto& cond : ref.children) condition(cond, AttributeRole::kWhere);
          break;
        case NodeKind::kWhereClause:
          for (const auto& c : clause.children) condition(c, AttributeRole::kWhere);
          break;
        case NodeKind::kHaving:
          for (const auto& c : clause.children) condition(c, AttributeRole::kHaving);
          break;
        case NodeKind::kGroupBy:
          for (const auto& c : clause.children) operand(c, AttributeRole::kGroupBy);
          break;
        case NodeKind::kOrderBy:
          for (const auto& key : clause.children)
            for (const auto& c : key.children)
              if (!names_output_column(stmt, c)) operand(c, AttributeRole::kOrderBy);
          break;
        default:
          break;
      }
    }
    scopes_.pop_back();
  }

  // ORDER BY may name a select-list alias instead of a stored attribute.
  static bool names_output_column(const Node& stmt, const Node& key) {
    if (key.kind != NodeKind::kColumnRef || !key.qualifier.empty()) return false;
    const Node* list = stmt.find_child(NodeKind::kSelectList);
    if (list == nullptr) return false;
    for (const auto& item : list->children)
      if (!item.alias.empty() && iequals(item.alias, key.value)) return true;
    return false;
  }

  std::string resolve(const Node& col) const {
    if (!col.qualifier.empty()) {
      for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
        auto f = it->names.find(col.qualifier);
        if (f == it->names.end()) f = it->names.find(to_lower(col.qualifier));
        if (f != it->names.end()) return f->second;
      }
      return kUnresolved;
    }
    if (schema_ == nullptr) return kUnresolved;
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      const auto owners = schema_->owners(col.value, it->relations);
      if (owners.size() == 1) return owners.front();
      if (owners.size() > 1) return kUnresolved;
    }
    return kUnresolved;
  }

  void operand(const Node& n, AttributeRole role) {
    switch (n.kind) {
      case NodeKind::kColumnRef:
        if (!n.value.empty()) out_.attributes.insert({n.value, resolve(n), role});
        break;
      case NodeKind::kAggregate:
        for (const auto& c : n.children) {
          if (is_column(c)) {
            const std::string rel = resolve(c);
            out_.attributes.insert({c.value, rel, role});
            out_.aggregates.insert({n.value, c.value, rel});
          } else if (c.kind == NodeKind::kStar) {
            out_.aggregates.insert({n.value, "*", c.qualifier});
          }
        }
        break;
      case NodeKind::kSubquery:
        out_.has_subquery = true;
        for (const auto& c : n.children)
          if (c.kind == NodeKind::kStatement) statement(c);
        break;
      default:
        break;
    }
  }

  void condition(const Node& n, AttributeRole role) {
    switch (n.kind) {
      case NodeKind::kLogicalOp:
        for (const auto& c : n.children) condition(c, role);
        return;
      case NodeKind::kSubquery:
        operand(n, role);
        return;
      case NodeKind::kComparison:
        comparison(n, role);
        return;
      default:
        operand(n, role);
        return;
    }
  }

  void comparison(const Node& n, AttributeRole role) {
    for (const auto& c : n.children) operand(c, role);
    // Only WHERE/ON comparisons are selection predicates.
    if (role != AttributeRole::kWhere) return;
    if (n.value.empty() || n.children.size() < 2) return;
    const Node& lhs = n.children[0];
    const Node& rhs = n.children[1];

    if (n.value == "IN") {
      if (!is_column(lhs)) return;
      std::string list = "(";
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        if (!is_constant(n.children[i])) return;
        if (i > 1) list += ", ";
        list += n.children[i].value;
      }
      list += ")";
      out_.predicates.insert({lhs.value, resolve(lhs), "IN", list});
      return;
    }
    if (n.value == "BETWEEN") {
      if (!is_column(lhs) || n.children.size() != 3 || !is_constant(rhs) ||
          !is_constant(n.children[2]))
        return;
      out_.predicates.insert(
          {lhs.value, resolve(lhs), "BETWEEN", rhs.value + " AND " + n.children[2].value});
      return;
    }
    if (is_column(lhs) && is_column(rhs)) {
      if (n.value == "=") out_.join_pairs.insert(JoinPair::of(resolve(lhs), resolve(rhs)));
      return;
    }
    if (is_column(lhs) && is_constant(rhs)) {
      out_.predicates.insert({lhs.value, resolve(lhs), n.value, rhs.value});
    } else if (is_constant(lhs) && is_column(rhs) && n.value != "LIKE") {
      out_.predicates.insert({rhs.value, resolve(rhs), flip(n.value), lhs.value});
    }
  }

  const SchemaSnapshot* schema_;
  std::vector<Scope> scopes_;
  FeatureSet out_;
};

}  // namespace

FeatureSet extract_features(const ParseTree& tree, const SchemaSnapshot* schema) {
  return Extractor(schema).run(tree);
}

}  // namespace cqms::sql
