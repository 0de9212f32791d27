#include "cqms/sql/ast.hpp"

namespace cqms::sql {

std::string_view kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::kStatement: return "Statement";
    case NodeKind::kSelectList: return "SelectList";
    case NodeKind::kFromList: return "FromList";
    case NodeKind::kWhereClause: return "WhereClause";
    case NodeKind::kGroupBy: return "GroupBy";
    case NodeKind::kHaving: return "Having";
    case NodeKind::kOrderBy: return "OrderBy";
    case NodeKind::kSortKey: return "SortKey";
    case NodeKind::kLimit: return "Limit";
    case NodeKind::kTableRef: return "TableRef";
    case NodeKind::kColumnRef: return "ColumnRef";
    case NodeKind::kComparison: return "Comparison";
    case NodeKind::kLogicalOp: return "LogicalOp";
    case NodeKind::kLiteral: return "Literal";
    case NodeKind::kPlaceholder: return "Placeholder";
    case NodeKind::kSubquery: return "Subquery";
    case NodeKind::kAggregate: return "Aggregate";
    case NodeKind::kStar: return "Star";
  }
  return "?";
}

const Node* Node::find_child(NodeKind k) const {
  for (const auto& c : children)
    if (c.kind == k) return &c;
  return nullptr;
}

Node* Node::find_child(NodeKind k) {
  for (auto& c : children)
    if (c.kind == k) return &c;
  return nullptr;
}

bool same_structure(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.value != b.value || a.qualifier != b.qualifier ||
      a.alias != b.alias || a.quoted != b.quoted || a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_structure(a.children[i], b.children[i])) return false;
  return true;
}

bool same_structure(const ParseTree& a, const ParseTree& b) {
  return a.partial == b.partial && same_structure(a.root, b.root);
}

}  // namespace cqms::sql
