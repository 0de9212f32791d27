#include "cqms/sql/canonical.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>

#include "cqms/sql/lexer.hpp"

namespace cqms::sql {

namespace {

bool plain_lower(const std::string& s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (!(std::islower(u) || std::isdigit(u) || c == '_' || c == '$' || u >= 0x80))
      return false;
  }
  return !is_reserved_word(s);
}

// Canonical spelling of an identifier and whether it still needs quotes.
void canon_identifier(std::string& value, bool& quoted) {
  if (quoted) {
    quoted = !plain_lower(value);
    return;
  }
  value = to_lower(value);
}

using Scope = std::map<std::string, std::string>;  // alias or name -> relation

struct Canonicalizer {
  std::vector<const Scope*> scopes;

  std::string resolve_qualifier(const std::string& q) const {
    const std::string key = to_lower(q);
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      auto f = (*it)->find(key);
      if (f != (*it)->end()) return f->second;
      f = (*it)->find(q);
      if (f != (*it)->end()) return f->second;
    }
    return key;
  }

  void statement(Node& stmt) {
    Scope scope;
    if (Node* from = stmt.find_child(NodeKind::kFromList)) {
      for (auto& ref : from->children) {
        if (ref.kind != NodeKind::kTableRef) continue;
        canon_identifier(ref.value, ref.quoted);
        scope[ref.value] = ref.value;
        if (!ref.alias.empty()) {
          scope[to_lower(ref.alias)] = ref.value;
          scope[ref.alias] = ref.value;
          ref.alias.clear();
        }
      }
    }
    scopes.push_back(&scope);
    for (auto& clause : stmt.children) {
      switch (clause.kind) {
        case NodeKind::kSelectList:
          for (auto& item : clause.children) {
            expression(item);
            item.alias = to_lower(item.alias);
          }
          break;
        case NodeKind::kFromList:
          for (auto& ref : clause.children)
            for (auto& cond : ref.children) expression(cond);
          break;
        default:
          for (auto& c : clause.children) expression(c);
          break;
      }
    }
    scopes.pop_back();
  }

  static int operand_rank(const Node& n) {
    switch (n.kind) {
      case NodeKind::kColumnRef: return 0;
      case NodeKind::kAggregate: return 1;
      case NodeKind::kSubquery: return 2;
      default: return 3;
    }
  }

  static std::string flipped(const std::string& op) {
    if (op == "<") return ">";
    if (op == ">") return "<";
    if (op == "<=") return ">=";
    if (op == ">=") return "<=";
    return op;
  }

  void comparison(Node& n) {
    for (auto& c : n.children) expression(c);
    static const std::vector<std::string> kOrdered = {"=", "<>", "<", "<=", ">", ">="};
    if (n.children.size() != 2 ||
        std::find(kOrdered.begin(), kOrdered.end(), n.value) == kOrdered.end())
      return;
    Node& l = n.children[0];
    Node& r = n.children[1];
    const int rl = operand_rank(l);
    const int rr = operand_rank(r);
    bool swap = rl > rr;
    if (rl == rr && rl == 0) swap = render(l) > render(r);
    if (swap) {
      std::swap(l, r);
      n.value = flipped(n.value);
    }
  }

  void expression(Node& n) {
    switch (n.kind) {
      case NodeKind::kColumnRef:
        canon_identifier(n.value, n.quoted);
        if (!n.qualifier.empty()) n.qualifier = resolve_qualifier(n.qualifier);
        return;
      case NodeKind::kStar:
        if (!n.qualifier.empty()) n.qualifier = resolve_qualifier(n.qualifier);
        return;
      case NodeKind::kLiteral:
        if (!n.value.empty() && n.value.front() != '\'' && n.value != "NULL")
          n.value = normalize_number(n.value);
        return;
      case NodeKind::kAggregate:
        n.value = to_lower(n.value);
        for (auto& c : n.children) expression(c);
        return;
      case NodeKind::kComparison:
        comparison(n);
        if (n.value == "IN" && !(n.children.size() == 2 &&
                                 n.children[1].kind == NodeKind::kSubquery)) {
          std::stable_sort(n.children.begin() + 1, n.children.end(),
                           [](const Node& a, const Node& b) { return render(a) < render(b); });
        }
        return;
      case NodeKind::kLogicalOp:
        logical(n);
        return;
      case NodeKind::kSubquery:
        for (auto& c : n.children)
          if (c.kind == NodeKind::kStatement) statement(c);
        return;
      case NodeKind::kSortKey:
        for (auto& c : n.children) expression(c);
        return;
      default:
        for (auto& c : n.children) expression(c);
        return;
    }
  }

  void logical(Node& n) {
    for (auto& c : n.children) expression(c);
    if (n.value == "NOT") return;
    std::vector<Node> flat;
    for (auto& c : n.children) {
      if (c.kind == NodeKind::kLogicalOp && c.value == n.value) {
        for (auto& g : c.children) flat.push_back(std::move(g));
      } else {
        flat.push_back(std::move(c));
      }
    }
    std::vector<std::pair<std::string, Node>> keyed;
    keyed.reserve(flat.size());
    for (auto& c : flat) keyed.emplace_back(render(c), std::move(c));
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    n.children.clear();
    for (auto& [k, c] : keyed) n.children.push_back(std::move(c));
  }
};

void strip_literals(Node& n) {
  if (n.kind == NodeKind::kLiteral) {
    n.kind = NodeKind::kPlaceholder;
    n.value = "?";
    return;
  }
  for (auto& c : n.children) strip_literals(c);
}

}  // namespace

std::string normalize_number(const std::string& text) {
  std::string_view digits = text;
  bool negative = false;
  if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) {
    negative = digits.front() == '-';
    digits.remove_prefix(1);
  }
  if (!digits.empty() &&
      std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    std::size_t first = digits.find_first_not_of('0');
    if (first == std::string_view::npos) return "0";
    return (negative ? "-" : "") + std::string(digits.substr(first));
  }
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || !std::isfinite(v)) return text;
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    const auto as_int = static_cast<long long>(v);
    return std::to_string(as_int);
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ParseTree canonicalize(const ParseTree& tree) {
  ParseTree out = tree;
  Canonicalizer c;
  c.statement(out.root);
  return out;
}

ParseTree to_template(const ParseTree& tree) {
  ParseTree out = tree;
  strip_literals(out.root);
  return canonicalize(out);
}

}  // namespace cqms::sql
