#include "cqms/sql/parser.hpp"

#include <array>
#include <string>
#include <vector>

#include "cqms/error.hpp"
#include "cqms/sql/lexer.hpp"

namespace cqms::sql {

namespace {

constexpr std::array kAggregates = {"count", "sum", "avg", "min", "max"};
constexpr std::array kClauseKeywords = {"WHERE", "GROUP", "HAVING", "ORDER", "LIMIT"};

bool is_aggregate_name(std::string_view name) {
  for (const char* a : kAggregates)
    if (iequals(name, a)) return true;
  return false;
}

std::string quote_string(std::string_view raw) {
  std::string out = "'";
  for (char c : raw) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  ParseTree run() {
    ParseTree tree;
    tree.root = statement(0);
    if (!at_end()) {
      if (peek().type == TokenType::kSemicolon) advance();
      if (!at_end()) {
        if (peek().is_keyword("UNION") || peek().is_keyword("INTERSECT") ||
            peek().is_keyword("EXCEPT"))
          throw UnsupportedFeature("set operation");
        fail({"end of statement"});
      }
    }
    tree.partial = partial_;
    return tree;
  }

 private:
  const Token& peek(std::size_t k = 0) const {
    const std::size_t i = pos_ + k;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }

  const Token& advance() {
    const Token& t = tokens_[pos_];
    if (t.type != TokenType::kEnd) {
      last_end_ = t.end;
      ++pos_;
    }
    return t;
  }

  bool at_end() const { return peek().type == TokenType::kEnd; }

  bool accept_keyword(std::string_view kw) {
    if (peek().is_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }

  bool accept(TokenType type) {
    if (peek().type == type) {
      advance();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(peek().begin, std::move(expected));
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail({std::string(kw)});
  }

  void expect(TokenType type, const char* what) {
    if (!accept(type)) fail({what});
  }

  bool at_clause_keyword() const {
    for (const char* kw : kClauseKeywords)
      if (peek().is_keyword(kw)) return true;
    return false;
  }

  bool at_name() const {
    const Token& t = peek();
    return (t.type == TokenType::kIdentifier && !is_reserved_word(t.text)) ||
           t.type == TokenType::kQuotedIdentifier;
  }

  Node hole() {
    partial_ = true;
    return Node::make(NodeKind::kPlaceholder, {}, Span{peek().begin, peek().begin});
  }

  void close(Node& n, std::size_t begin) const {
    n.span = Span{begin, std::max(begin, last_end_)};
  }

  Node statement(int depth) {
    const std::size_t begin = peek().begin;
    if (!peek().is_keyword("SELECT")) {
      for (const char* kw : {"WITH", "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER"})
        if (peek().is_keyword(kw)) throw UnsupportedFeature(to_lower(kw) + " statement");
      fail({"SELECT"});
    }
    advance();
    Node stmt = Node::make(NodeKind::kStatement);
    if (accept_keyword("DISTINCT")) {
      stmt.value = "DISTINCT";
    } else {
      accept_keyword("ALL");
    }

    stmt.children.push_back(select_list());
    if (at_end()) {
      Node from = Node::make(NodeKind::kFromList);
      from.children.push_back(hole());
      from.span = Span{peek().begin, peek().begin};
      stmt.children.push_back(std::move(from));
      close(stmt, begin);
      return stmt;
    }
    if (!peek().is_keyword("FROM")) fail({"FROM", ","});
    stmt.children.push_back(from_list(depth));

    if (peek().is_keyword("WHERE")) {
      const std::size_t b = peek().begin;
      advance();
      Node where = Node::make(NodeKind::kWhereClause);
      where.children.push_back(at_end() ? hole() : expression(depth));
      close(where, b);
      stmt.children.push_back(std::move(where));
    }
    if (peek().is_keyword("GROUP")) {
      const std::size_t b = peek().begin;
      advance();
      Node group = Node::make(NodeKind::kGroupBy);
      if (at_end()) {
        group.children.push_back(hole());
      } else {
        expect_keyword("BY");
        operand_list(group, depth);
      }
      close(group, b);
      stmt.children.push_back(std::move(group));
    }
    if (peek().is_keyword("HAVING")) {
      const std::size_t b = peek().begin;
      advance();
      Node having = Node::make(NodeKind::kHaving);
      having.children.push_back(at_end() ? hole() : expression(depth));
      close(having, b);
      stmt.children.push_back(std::move(having));
    }
    if (peek().is_keyword("ORDER")) {
      const std::size_t b = peek().begin;
      advance();
      Node order = Node::make(NodeKind::kOrderBy);
      if (at_end()) {
        order.children.push_back(hole());
      } else {
        expect_keyword("BY");
        order_list(order, depth);
      }
      close(order, b);
      stmt.children.push_back(std::move(order));
    }
    if (peek().is_keyword("LIMIT")) {
      const std::size_t b = peek().begin;
      advance();
      if (at_end()) {
        Node limit = Node::make(NodeKind::kLimit);
        limit.children.push_back(hole());
        close(limit, b);
        stmt.children.push_back(std::move(limit));
      } else {
        if (peek().type != TokenType::kNumber) fail({"row count"});
        Node limit = Node::make(NodeKind::kLimit, advance().text);
        if (accept_keyword("OFFSET")) {
          if (peek().type != TokenType::kNumber) fail({"row offset"});
          limit.qualifier = advance().text;
        }
        close(limit, b);
        stmt.children.push_back(std::move(limit));
      }
    }
    close(stmt, begin);
    return stmt;
  }

  Node select_list() {
    Node list = Node::make(NodeKind::kSelectList);
    const std::size_t begin = peek().begin;
    if (at_end() || peek().is_keyword("FROM")) {
      list.children.push_back(hole());
      list.span = Span{begin, begin};
      return list;
    }
    for (;;) {
      list.children.push_back(select_item());
      if (!accept(TokenType::kComma)) break;
      if (at_end() || peek().is_keyword("FROM")) {
        list.children.push_back(hole());
        break;
      }
    }
    close(list, begin);
    return list;
  }

  Node select_item() {
    const std::size_t begin = peek().begin;
    if (accept(TokenType::kStar)) {
      Node star = Node::make(NodeKind::kStar);
      close(star, begin);
      return star;
    }
    Node item = operand(0);
    reject_arithmetic();
    if (accept_keyword("AS")) {
      if (!at_name()) fail({"alias"});
      item.alias = advance().text;
    } else if (at_name()) {
      item.alias = advance().text;
    }
    return item;
  }

  Node from_list(int depth) {
    const std::size_t begin = peek().begin;
    advance();  // FROM
    Node list = Node::make(NodeKind::kFromList);
    list.children.push_back(table_ref());
    for (;;) {
      if (accept(TokenType::kComma)) {
        if (at_end() || at_clause_keyword()) {
          list.children.push_back(hole());
          break;
        }
        list.children.push_back(table_ref());
        continue;
      }
      std::string join_type;
      bool cross = false;
      if (accept_keyword("JOIN")) {
        join_type = "inner";
      } else if (accept_keyword("INNER")) {
        expect_keyword("JOIN");
        join_type = "inner";
      } else if (peek().is_keyword("LEFT") || peek().is_keyword("RIGHT") ||
                 peek().is_keyword("FULL")) {
        join_type = to_lower(advance().text);
        accept_keyword("OUTER");
        expect_keyword("JOIN");
      } else if (accept_keyword("CROSS")) {
        expect_keyword("JOIN");
        join_type = "cross";
        cross = true;
      } else {
        break;
      }
      Node ref = table_ref();
      ref.qualifier = join_type;
      if (!cross && !ref.is_hole()) {
        if (at_end()) {
          partial_ = true;
        } else {
          if (peek().is_keyword("USING")) throw UnsupportedFeature("JOIN USING");
          expect_keyword("ON");
          ref.children.push_back(at_end() ? hole() : expression(depth));
        }
      }
      list.children.push_back(std::move(ref));
      if (at_end()) break;
    }
    close(list, begin);
    return list;
  }

  Node table_ref() {
    if (at_end()) return hole();
    const std::size_t begin = peek().begin;
    if (peek().type == TokenType::kLParen) throw UnsupportedFeature("derived table");
    if (!at_name()) fail({"relation name"});
    Node ref = Node::make(NodeKind::kTableRef);
    const Token& name = advance();
    ref.value = name.text;
    ref.quoted = name.type == TokenType::kQuotedIdentifier;
    while (accept(TokenType::kDot)) {
      if (!at_name()) fail({"relation name"});
      ref.value += "." + advance().text;
    }
    if (accept_keyword("AS")) {
      if (!at_name()) fail({"alias"});
      ref.alias = advance().text;
    } else if (at_name()) {
      ref.alias = advance().text;
    }
    close(ref, begin);
    return ref;
  }

  void operand_list(Node& parent, int depth) {
    for (;;) {
      if (at_end()) {
        parent.children.push_back(hole());
        return;
      }
      parent.children.push_back(operand(depth));
      reject_arithmetic();
      if (!accept(TokenType::kComma)) return;
      if (at_end() || at_clause_keyword()) {
        parent.children.push_back(hole());
        return;
      }
    }
  }

  void order_list(Node& parent, int depth) {
    for (;;) {
      if (at_end()) {
        parent.children.push_back(hole());
        return;
      }
      const std::size_t begin = peek().begin;
      Node key = Node::make(NodeKind::kSortKey, "ASC");
      key.children.push_back(operand(depth));
      reject_arithmetic();
      if (accept_keyword("DESC")) {
        key.value = "DESC";
      } else {
        accept_keyword("ASC");
      }
      close(key, begin);
      parent.children.push_back(std::move(key));
      if (!accept(TokenType::kComma)) return;
      if (at_end() || at_clause_keyword()) {
        parent.children.push_back(hole());
        return;
      }
    }
  }

  void reject_arithmetic() const {
    if (peek().type == TokenType::kArith) throw UnsupportedFeature("arithmetic expression");
  }

  Node subquery(int depth, std::string marker) {
    if (depth >= 1) throw UnsupportedFeature("nested subquery");
    const std::size_t begin = peek().begin;
    advance();  // (
    Node sub = Node::make(NodeKind::kSubquery, std::move(marker));
    sub.children.push_back(statement(depth + 1));
    if (!at_end()) expect(TokenType::kRParen, ")");
    else partial_ = true;
    close(sub, begin);
    return sub;
  }

  Node operand(int depth) {
    if (at_end()) return hole();
    const Token& t = peek();
    const std::size_t begin = t.begin;
    switch (t.type) {
      case TokenType::kNumber:
        return Node::make(NodeKind::kLiteral, advance().text, Span{begin, t.end});
      case TokenType::kString: {
        const Token& s = advance();
        return Node::make(NodeKind::kLiteral, quote_string(s.text), Span{begin, s.end});
      }
      case TokenType::kParameter:
        advance();
        return Node::make(NodeKind::kPlaceholder, "?", Span{begin, begin + 1});
      case TokenType::kArith:
        if (t.text == "-" && peek(1).type == TokenType::kNumber && peek(1).begin == t.end) {
          advance();
          const Token& num = advance();
          return Node::make(NodeKind::kLiteral, "-" + num.text, Span{begin, num.end});
        }
        throw UnsupportedFeature("arithmetic expression");
      case TokenType::kLParen: {
        if (peek(1).is_keyword("SELECT")) return subquery(depth, {});
        advance();
        Node inner = operand(depth);
        reject_arithmetic();
        if (!at_end()) expect(TokenType::kRParen, ")");
        return inner;
      }
      case TokenType::kIdentifier:
        if (t.is_keyword("NULL")) {
          advance();
          return Node::make(NodeKind::kLiteral, "NULL", Span{begin, last_end_});
        }
        if (is_reserved_word(t.text)) fail({"expression"});
        break;
      case TokenType::kQuotedIdentifier:
        break;
      default:
        fail({"expression"});
    }

    const Token& name = advance();
    if (peek().type == TokenType::kLParen && name.type == TokenType::kIdentifier)
      return function_call(name, begin, depth);

    Node col = Node::make(NodeKind::kColumnRef, name.text);
    col.quoted = name.type == TokenType::kQuotedIdentifier;
    if (accept(TokenType::kDot)) {
      if (accept(TokenType::kStar)) {
        Node star = Node::make(NodeKind::kStar);
        star.qualifier = name.text;
        close(star, begin);
        return star;
      }
      if (at_end()) {
        // "t." while typing: a column of t is expected next.
        partial_ = true;
        col.qualifier = col.value;
        col.value.clear();
        close(col, begin);
        return col;
      }
      if (!at_name()) fail({"column name"});
      const Token& attr = advance();
      col.qualifier = col.value;
      col.value = attr.text;
      col.quoted = attr.type == TokenType::kQuotedIdentifier;
    }
    close(col, begin);
    return col;
  }

  Node function_call(const Token& name, std::size_t begin, int depth) {
    if (!is_aggregate_name(name.text)) {
      // Skip the balanced argument list to tell window functions apart.
      std::size_t k = 0;
      int level = 0;
      do {
        const Token& t = peek(k++);
        if (t.type == TokenType::kEnd) break;
        if (t.type == TokenType::kLParen) ++level;
        if (t.type == TokenType::kRParen) --level;
      } while (level > 0);
      if (peek(k).is_keyword("OVER")) throw UnsupportedFeature("window function");
      throw UnsupportedFeature("function call " + to_lower(name.text));
    }
    advance();  // (
    Node agg = Node::make(NodeKind::kAggregate, name.text);
    if (accept_keyword("DISTINCT")) agg.qualifier = "distinct";
    if (peek().type == TokenType::kStar) {
      const std::size_t b = peek().begin;
      advance();
      agg.children.push_back(Node::make(NodeKind::kStar, {}, Span{b, b + 1}));
    } else {
      agg.children.push_back(operand(depth));
      reject_arithmetic();
    }
    if (at_end()) {
      partial_ = true;
      close(agg, begin);
      return agg;
    }
    expect(TokenType::kRParen, ")");
    if (peek().is_keyword("OVER")) throw UnsupportedFeature("window function");
    close(agg, begin);
    return agg;
  }

  Node expression(int depth) { return disjunction(depth); }

  Node disjunction(int depth) {
    const std::size_t begin = peek().begin;
    Node left = conjunction(depth);
    if (!peek().is_keyword("OR")) return left;
    Node op = Node::make(NodeKind::kLogicalOp, "OR");
    op.children.push_back(std::move(left));
    while (accept_keyword("OR")) op.children.push_back(at_end() ? hole() : conjunction(depth));
    close(op, begin);
    return op;
  }

  Node conjunction(int depth) {
    const std::size_t begin = peek().begin;
    Node left = negation(depth);
    if (!peek().is_keyword("AND")) return left;
    Node op = Node::make(NodeKind::kLogicalOp, "AND");
    op.children.push_back(std::move(left));
    while (accept_keyword("AND")) op.children.push_back(at_end() ? hole() : negation(depth));
    close(op, begin);
    return op;
  }

  Node negation(int depth) {
    const std::size_t begin = peek().begin;
    if (accept_keyword("NOT")) {
      Node op = Node::make(NodeKind::kLogicalOp, "NOT");
      op.children.push_back(at_end() ? hole() : negation(depth));
      close(op, begin);
      return op;
    }
    return predicate(depth);
  }

  Node predicate(int depth) {
    if (at_end()) return hole();
    const std::size_t begin = peek().begin;
    if (peek().is_keyword("EXISTS")) {
      advance();
      if (at_end()) return hole();
      if (peek().type != TokenType::kLParen || !peek(1).is_keyword("SELECT")) fail({"subquery"});
      Node sub = subquery(depth, "EXISTS");
      sub.span.begin = begin;
      return sub;
    }
    if (peek().type == TokenType::kLParen && !peek(1).is_keyword("SELECT")) {
      advance();
      Node inner = expression(depth);
      if (!at_end()) expect(TokenType::kRParen, ")");
      else partial_ = true;
      return inner;
    }

    Node lhs = operand(depth);
    if (lhs.is_hole()) return lhs;
    reject_arithmetic();

    Node cmp = Node::make(NodeKind::kComparison);
    if (at_end()) {
      partial_ = true;
      cmp.children.push_back(std::move(lhs));
      cmp.children.push_back(hole());
      close(cmp, begin);
      return cmp;
    }

    bool negated = false;
    if (peek().is_keyword("NOT") &&
        (peek(1).is_keyword("LIKE") || peek(1).is_keyword("IN") || peek(1).is_keyword("BETWEEN"))) {
      advance();
      negated = true;
    }

    cmp.children.push_back(std::move(lhs));
    if (peek().type == TokenType::kCompare && !negated) {
      cmp.value = advance().text;
      cmp.children.push_back(operand(depth));
      reject_arithmetic();
    } else if (accept_keyword("LIKE")) {
      cmp.value = "LIKE";
      cmp.children.push_back(operand(depth));
    } else if (accept_keyword("BETWEEN")) {
      cmp.value = "BETWEEN";
      cmp.children.push_back(operand(depth));
      if (!at_end()) {
        expect_keyword("AND");
        cmp.children.push_back(operand(depth));
      } else {
        cmp.children.push_back(hole());
      }
    } else if (accept_keyword("IN")) {
      cmp.value = "IN";
      in_list(cmp, depth);
    } else if (peek().is_keyword("IS")) {
      throw UnsupportedFeature("IS NULL predicate");
    } else {
      fail({"comparison operator"});
    }
    close(cmp, begin);
    if (!negated) return cmp;
    Node op = Node::make(NodeKind::kLogicalOp, "NOT");
    op.children.push_back(std::move(cmp));
    close(op, begin);
    return op;
  }

  void in_list(Node& cmp, int depth) {
    if (at_end()) {
      cmp.children.push_back(hole());
      return;
    }
    if (peek().type != TokenType::kLParen) fail({"("});
    if (peek(1).is_keyword("SELECT")) {
      cmp.children.push_back(subquery(depth, {}));
      return;
    }
    advance();
    for (;;) {
      if (at_end()) {
        cmp.children.push_back(hole());
        return;
      }
      Node v = operand(depth);
      if (v.kind != NodeKind::kLiteral && v.kind != NodeKind::kPlaceholder)
        fail({"literal"});
      cmp.children.push_back(std::move(v));
      if (accept(TokenType::kComma)) continue;
      if (at_end()) {
        partial_ = true;
        return;
      }
      expect(TokenType::kRParen, ")");
      return;
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t last_end_ = 0;
  bool partial_ = false;
};

}  // namespace

ParseTree parse(std::string_view text) { return Parser(text).run(); }

}  // namespace cqms::sql
