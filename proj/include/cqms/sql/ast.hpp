#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cqms::sql {

enum class NodeKind {
  kStatement,
  kSelectList,
  kFromList,
  kWhereClause,
  kGroupBy,
  kHaving,
  kOrderBy,
  kSortKey,
  kLimit,
  kTableRef,
  kColumnRef,
  kComparison,
  kLogicalOp,
  kLiteral,
  kPlaceholder,
  kSubquery,
  kAggregate,
  kStar,
};

std::string_view kind_name(NodeKind kind);

/// Half-open byte range into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

/// One node of a parse tree. The meaning of the string fields depends on
/// the kind:
///
///   Statement   value = "DISTINCT" or empty
///   TableRef    value = relation, alias = alias, qualifier = join type
///               ("", "inner", "left", "right", "full"); a joined ref has
///               its ON condition as the only child
///   ColumnRef   value = attribute, qualifier = relation or alias
///   Comparison  value = operator; children are the operands
///   LogicalOp   value = AND / OR / NOT
///   Literal     value = literal text; strings keep their single quotes
///   Placeholder value = "?" for a parameter, empty for input that was
///               cut off (partial query)
///   Subquery    value = "EXISTS" or empty; child is a Statement
///   Aggregate   value = function, qualifier = "distinct" or empty
///   SortKey     value = ASC / DESC
///   Limit       value = row count
///
/// Select-list items may carry an output alias in `alias`.
struct Node {
  NodeKind kind = NodeKind::kPlaceholder;
  std::string value;
  std::string qualifier;
  std::string alias;
  bool quoted = false;  // value came from a "quoted identifier"
  Span span;
  std::vector<Node> children;

  static Node make(NodeKind kind, std::string value = {}, Span span = {}) {
    Node n;
    n.kind = kind;
    n.value = std::move(value);
    n.span = span;
    return n;
  }

  bool is_hole() const { return kind == NodeKind::kPlaceholder && value.empty(); }
  const Node* find_child(NodeKind k) const;
  Node* find_child(NodeKind k);
};

/// Structural equality, ignoring source spans.
bool same_structure(const Node& a, const Node& b);

struct ParseTree {
  Node root;
  /// Set when the parser substituted placeholders for missing input.
  bool partial = false;

  const Node* clause(NodeKind k) const { return root.find_child(k); }
};

bool same_structure(const ParseTree& a, const ParseTree& b);

}  // namespace cqms::sql
