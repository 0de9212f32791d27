#include <cctype>

#include "cqms/sql/canonical.hpp"
#include "cqms/sql/lexer.hpp"

namespace cqms::sql {

namespace {

bool plain_lower_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (!(std::islower(u) || std::isdigit(u) || c == '_' || c == '$')) return false;
  }
  return !is_reserved_word(s);
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string identifier(const std::string& s, bool force_quote) {
  if (force_quote) return quoted(s);
  return s;
}

// Qualifiers and aliases carry no quote flag; quote them when reading them
// back unquoted would change their spelling.
std::string soft_identifier(const std::string& s) {
  if (s.empty() || plain_lower_identifier(s)) return s;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '_' || c == '$' || c == '.')) return quoted(s);
  }
  return is_reserved_word(s) ? quoted(s) : s;
}

void render_into(const Node& n, std::string& out);

void render_statement(const Node& stmt, std::string& out) {
  out += "SELECT ";
  if (stmt.value == "DISTINCT") out += "DISTINCT ";
  for (const auto& clause : stmt.children) {
    switch (clause.kind) {
      case NodeKind::kSelectList:
        for (std::size_t i = 0; i < clause.children.size(); ++i) {
          if (i) out += ", ";
          const auto& item = clause.children[i];
          render_into(item, out);
          if (!item.alias.empty()) out += " AS " + soft_identifier(item.alias);
        }
        break;
      case NodeKind::kFromList:
        out += " FROM ";
        for (std::size_t i = 0; i < clause.children.size(); ++i) {
          const auto& ref = clause.children[i];
          if (i && ref.qualifier.empty()) out += ", ";
          if (!ref.qualifier.empty()) {
            if (ref.qualifier == "inner") out += " JOIN ";
            else out += " " + to_upper(ref.qualifier) + " JOIN ";
          }
          render_into(ref, out);
          if (ref.kind == NodeKind::kTableRef && !ref.children.empty()) {
            out += " ON ";
            render_into(ref.children.front(), out);
          }
        }
        break;
      case NodeKind::kWhereClause:
        out += " WHERE ";
        render_into(clause.children.front(), out);
        break;
      case NodeKind::kGroupBy:
      case NodeKind::kOrderBy:
        out += clause.kind == NodeKind::kGroupBy ? " GROUP BY " : " ORDER BY ";
        for (std::size_t i = 0; i < clause.children.size(); ++i) {
          if (i) out += ", ";
          render_into(clause.children[i], out);
        }
        break;
      case NodeKind::kHaving:
        out += " HAVING ";
        render_into(clause.children.front(), out);
        break;
      case NodeKind::kLimit:
        out += " LIMIT ";
        if (clause.children.empty()) {
          out += clause.value;
          if (!clause.qualifier.empty()) out += " OFFSET " + clause.qualifier;
        }
        break;
      default:
        break;
    }
  }
}

void render_logical(const Node& n, std::string& out) {
  if (n.value == "NOT") {
    out += "NOT ";
    const Node& c = n.children.front();
    const bool paren = c.kind == NodeKind::kLogicalOp && c.value != "NOT";
    if (paren) out += "(";
    render_into(c, out);
    if (paren) out += ")";
    return;
  }
  const std::string sep = " " + n.value + " ";
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (i) out += sep;
    const Node& c = n.children[i];
    const bool paren = c.kind == NodeKind::kLogicalOp && c.value != "NOT" &&
                       (c.value == "OR" || c.value == n.value);
    if (paren) out += "(";
    render_into(c, out);
    if (paren) out += ")";
  }
}

void render_comparison(const Node& n, std::string& out) {
  render_into(n.children.front(), out);
  if (n.value.empty()) return;
  if (n.value == "IN") {
    out += " IN ";
    if (n.children.size() == 2 && n.children[1].kind == NodeKind::kSubquery) {
      render_into(n.children[1], out);
      return;
    }
    out += "(";
    for (std::size_t i = 1; i < n.children.size(); ++i) {
      if (i > 1) out += ", ";
      render_into(n.children[i], out);
    }
    out += ")";
    return;
  }
  if (n.value == "BETWEEN") {
    out += " BETWEEN ";
    render_into(n.children[1], out);
    out += " AND ";
    if (n.children.size() > 2) render_into(n.children[2], out);
    return;
  }
  out += " " + n.value + " ";
  if (n.children.size() > 1) render_into(n.children[1], out);
}

void render_into(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::kStatement:
      render_statement(n, out);
      break;
    case NodeKind::kTableRef:
      out += identifier(n.value, n.quoted);
      if (!n.alias.empty()) out += " " + soft_identifier(n.alias);
      break;
    case NodeKind::kColumnRef:
      if (!n.qualifier.empty()) out += soft_identifier(n.qualifier) + ".";
      out += identifier(n.value, n.quoted);
      break;
    case NodeKind::kStar:
      if (!n.qualifier.empty()) out += soft_identifier(n.qualifier) + ".";
      out += "*";
      break;
    case NodeKind::kLiteral:
    case NodeKind::kPlaceholder:
      out += n.value;
      break;
    case NodeKind::kAggregate:
      out += n.value + "(";
      if (n.qualifier == "distinct") out += "DISTINCT ";
      if (!n.children.empty()) render_into(n.children.front(), out);
      out += ")";
      break;
    case NodeKind::kComparison:
      render_comparison(n, out);
      break;
    case NodeKind::kLogicalOp:
      render_logical(n, out);
      break;
    case NodeKind::kSubquery:
      if (n.value == "EXISTS") out += "EXISTS ";
      out += "(";
      if (!n.children.empty()) render_into(n.children.front(), out);
      out += ")";
      break;
    case NodeKind::kSortKey:
      render_into(n.children.front(), out);
      if (n.value == "DESC") out += " DESC";
      break;
    case NodeKind::kLimit:
      out += n.value;
      break;
    default:
      for (const auto& c : n.children) render_into(c, out);
      break;
  }
}

}  // namespace

std::string render(const Node& node) {
  std::string out;
  render_into(node, out);
  return out;
}

std::string render(const ParseTree& tree) { return render(tree.root); }

}  // namespace cqms::sql
