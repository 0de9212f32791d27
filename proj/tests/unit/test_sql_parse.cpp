#include <functional>

#include "cqms/error.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/parser.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace cqms;
using namespace cqms::sql;

namespace {

int count_kind(const Node& n, NodeKind k) {
  int total = n.kind == k ? 1 : 0;
  for (const auto& c : n.children) total += count_kind(c, k);
  return total;
}

std::vector<std::string> table_names(const ParseTree& t) {
  std::vector<std::string> out;
  for (const auto& c : t.clause(NodeKind::kFromList)->children)
    if (c.kind == NodeKind::kTableRef) out.push_back(c.value);
  return out;
}

void check_spans(const Node& n, std::size_t text_size) {
  CHECK(n.span.begin <= n.span.end);
  CHECK(n.span.end <= text_size);
  const Node* prev = nullptr;
  for (const auto& c : n.children) {
    if (prev != nullptr && c.span.begin != c.span.end && prev->span.begin != prev->span.end &&
        n.kind != NodeKind::kLogicalOp && n.kind != NodeKind::kComparison) {
      CHECK(prev->span.end <= c.span.begin);
    }
    check_spans(c, text_size);
    prev = &c;
  }
}

}  // namespace

TEST_CASE("fig-1 meta-query parses into three relations and six comparisons") {
  const auto tree = parse(fixtures::kFigure1MetaQuery);
  CHECK(tree.root.kind == NodeKind::kStatement);
  CHECK_FALSE(tree.partial);
  CHECK(table_names(tree) == std::vector<std::string>{"Queries", "Attributes", "Attributes"});
  CHECK(count_kind(tree.root, NodeKind::kComparison) == 6);
  check_spans(tree.root, std::string_view(fixtures::kFigure1MetaQuery).size());
}

TEST_CASE("partial select list and trailing comma recover with placeholders") {
  const auto tree = parse("SELECT FROM WaterSalinity, WaterTemperature,");
  CHECK(tree.partial);
  const Node* select = tree.clause(NodeKind::kSelectList);
  REQUIRE(select != nullptr);
  REQUIRE(select->children.size() == 1);
  CHECK(select->children[0].is_hole());
  CHECK(table_names(tree) == std::vector<std::string>{"WaterSalinity", "WaterTemperature"});
  CHECK(tree.clause(NodeKind::kFromList)->children.back().is_hole());
}

TEST_CASE("malformed keyword is a syntax error at offset 0") {
  try {
    parse("SELEC x FRO t");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 0);
    CHECK(e.expected() == std::vector<std::string>{"SELECT"});
  }
}

TEST_CASE("other syntax errors report their position") {
  try {
    parse("SELECT a FROM t WHERE a < 3 b");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 28);
  }
  CHECK_THROWS_AS(parse("SELECT a b c FROM t"), SyntaxError);
  CHECK_THROWS_AS(parse("SELECT a FROM t WHERE 'unterminated"), SyntaxError);
  CHECK_THROWS_AS(parse("SELECT a WHERE x = 1"), SyntaxError);
}

TEST_CASE("out-of-subset constructs are UnsupportedFeature") {
  auto feature_of = [](const char* text) {
    try {
      parse(text);
    } catch (const UnsupportedFeature& e) {
      return e.feature();
    }
    return std::string("<parsed>");
  };
  CHECK(feature_of("SELECT rank() OVER (ORDER BY x) FROM t") == "window function");
  CHECK(feature_of("SELECT sum(x) OVER (PARTITION BY y) FROM t") == "window function");
  CHECK(feature_of("SELECT a FROM t UNION SELECT a FROM u") == "set operation");
  CHECK(feature_of("INSERT INTO t VALUES (1)") == "insert statement");
  CHECK(feature_of("SELECT a + 1 FROM t") == "arithmetic expression");
  CHECK(feature_of("SELECT a FROM t WHERE x IN (SELECT y FROM u WHERE z IN (SELECT w FROM v))") ==
        "nested subquery");
  CHECK(feature_of("SELECT a FROM (SELECT b FROM t) s") == "derived table");
  CHECK(feature_of("SELECT a FROM t WHERE a IS NULL") == "IS NULL predicate");
}

TEST_CASE("full subset parses") {
  const char* text =
      "SELECT DISTINCT w.lake, count(*) AS n FROM WaterTemp w "
      "JOIN WaterSalinity s ON w.lake = s.lake "
      "WHERE w.temp BETWEEN 10 AND 20 AND s.salinity IN (1, 2, 3) "
      "AND w.lake LIKE 'Lake%' AND NOT w.depth > 5 "
      "AND EXISTS (SELECT 1 FROM CityLocations c WHERE c.lake = w.lake) "
      "GROUP BY w.lake HAVING count(*) > 2 ORDER BY n DESC LIMIT 10";
  const auto tree = parse(text);
  CHECK_FALSE(tree.partial);
  CHECK(tree.root.value == "DISTINCT");
  CHECK(tree.clause(NodeKind::kGroupBy) != nullptr);
  CHECK(tree.clause(NodeKind::kHaving) != nullptr);
  CHECK(tree.clause(NodeKind::kOrderBy)->children[0].value == "DESC");
  CHECK(tree.clause(NodeKind::kLimit)->value == "10");
  CHECK(count_kind(tree.root, NodeKind::kSubquery) == 1);
  CHECK(count_kind(tree.root, NodeKind::kAggregate) == 2);
  check_spans(tree.root, std::string_view(text).size());
}

TEST_CASE("queries cut off mid-composition yield placeholders") {
  for (const char* text :
       {"SELECT", "SELECT a", "SELECT a,", "SELECT * FROM", "SELECT * FROM t WHERE",
        "SELECT * FROM t WHERE temp", "SELECT * FROM t WHERE temp <",
        "SELECT * FROM t WHERE temp < 18 AND", "SELECT * FROM t JOIN u",
        "SELECT * FROM t JOIN u ON", "SELECT * FROM t WHERE x IN (1,",
        "SELECT * FROM t WHERE t.", "SELECT * FROM t GROUP BY", "SELECT count(",
        "SELECT * FROM t WHERE x IN (SELECT y FROM u"}) {
    CAPTURE(text);
    ParseTree tree;
    CHECK_NOTHROW(tree = parse(text));
    CHECK(tree.partial);
  }
}

TEST_CASE("parse, canonicalize, render round trip is a fixed point") {
  for (const char* text : fixtures::kRoundTripCorpus) {
    CAPTURE(text);
    const auto canon = canonicalize(parse(text));
    const std::string rendered = render(canon);
    CAPTURE(rendered);
    const auto again = canonicalize(parse(rendered));
    CHECK(same_structure(canon, again));
    CHECK(render(again) == rendered);
  }
}
