#include <random>

#include "cqms/error.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/features.hpp"
#include "cqms/sql/parser.hpp"
#include "cqms/sql/similarity.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace cqms::sql;

namespace {

FeatureSet features_of(const std::string& text, const SchemaSnapshot* schema = nullptr) {
  return extract_features(canonicalize(parse(text)), schema);
}

// Independent oracle: visit every Comparison under the WHERE clause of a
// flat single-block query and classify it directly.
struct FlatOracle {
  const SchemaSnapshot* schema;
  std::vector<std::string> from;
  std::set<Predicate> predicates;
  std::set<JoinPair> joins;

  std::string owner(const Node& col) const {
    if (!col.qualifier.empty()) return col.qualifier;
    std::string found;
    int hits = 0;
    for (const auto& [rel, cols] : schema->relations) {
      if (std::find(from.begin(), from.end(), rel) == from.end()) continue;
      for (const auto& c : cols)
        if (c.name == col.value) {
          found = rel;
          ++hits;
        }
    }
    return hits == 1 ? found : "?";
  }

  void visit(const Node& n) {
    if (n.kind == NodeKind::kComparison && n.children.size() == 2) {
      const Node& l = n.children[0];
      const Node& r = n.children[1];
      if (l.kind == NodeKind::kColumnRef && r.kind == NodeKind::kColumnRef)
        joins.insert(JoinPair::of(owner(l), owner(r)));
      else if (l.kind == NodeKind::kColumnRef && r.kind == NodeKind::kLiteral)
        predicates.insert({l.value, owner(l), n.value, r.value});
    }
    for (const auto& c : n.children) visit(c);
  }
};

}  // namespace

TEST_CASE("fig-1 meta-query features") {
  const auto fs = features_of(fixtures::kFigure1MetaQuery);
  CHECK(fs.data_sources == std::set<std::string>{"queries", "attributes"});
  CHECK(fs.predicates.count({"attrname", "attributes", "=", "'salinity'"}) == 1);
  CHECK(fs.predicates.count({"attrname", "attributes", "=", "'temp'"}) == 1);
  CHECK(fs.predicates.count({"relname", "attributes", "=", "'WaterSalinity'"}) == 1);
  CHECK(fs.join_pairs == std::set<JoinPair>{JoinPair::of("queries", "attributes")});
  CHECK(fs.attributes.count({"qtext", "queries", AttributeRole::kSelect}) == 1);
}

TEST_CASE("star query has only a data source") {
  const auto fs = features_of("SELECT * FROM t");
  CHECK(fs.data_sources == std::set<std::string>{"t"});
  CHECK(fs.attributes.empty());
  CHECK(fs.predicates.empty());
}

TEST_CASE("schema resolves unqualified attributes; joins come from column equalities") {
  const auto schema = fixtures::lakes_schema();
  const std::string text =
      "SELECT * FROM WaterTemp, WaterSalinity WHERE temp < 18 AND WaterSalinity.lake = "
      "WaterTemp.lake";
  const auto fs = features_of(text, &schema);
  CHECK(fs.predicates == std::set<Predicate>{{"temp", "watertemp", "<", "18"}});
  CHECK(fs.join_pairs == std::set<JoinPair>{JoinPair::of("watersalinity", "watertemp")});

  FlatOracle oracle{&schema, {"watertemp", "watersalinity"}, {}, {}};
  oracle.visit(*canonicalize(parse(text)).clause(NodeKind::kWhereClause));
  CHECK(oracle.predicates == fs.predicates);
  CHECK(oracle.joins == fs.join_pairs);
}

TEST_CASE("ambiguous or unknown owners degrade to '?'") {
  const auto schema = fixtures::lakes_schema();
  const auto fs = features_of("SELECT lake FROM WaterTemp, WaterSalinity WHERE nosuch = 1", &schema);
  CHECK(fs.attributes.count({"lake", "?", AttributeRole::kSelect}) == 1);
  CHECK(fs.predicates.count({"nosuch", "?", "=", "1"}) == 1);
  const auto no_schema = features_of("SELECT * FROM t WHERE temp < 18");
  CHECK(no_schema.predicates.count({"temp", "?", "<", "18"}) == 1);
}

TEST_CASE("aggregates, roles and subqueries") {
  const auto fs = features_of(
      "SELECT lake, max(temp) FROM WaterTemp w WHERE w.depth IN (1, 2) AND EXISTS (SELECT 1 "
      "FROM Stations s WHERE s.lake = w.lake AND s.active = 'y') GROUP BY lake HAVING "
      "count(*) > 3 ORDER BY lake");
  CHECK(fs.has_subquery);
  CHECK(fs.data_sources == std::set<std::string>{"watertemp", "stations"});
  CHECK(fs.aggregates.count({"max", "temp", "?"}) == 1);
  CHECK(fs.aggregates.count({"count", "*", ""}) == 1);
  CHECK(fs.predicates.count({"depth", "watertemp", "IN", "(1, 2)"}) == 1);
  CHECK(fs.predicates.count({"active", "stations", "=", "'y'"}) == 1);
  CHECK(fs.join_pairs.count(JoinPair::of("stations", "watertemp")) == 1);
  CHECK(fs.attributes.count({"lake", "?", AttributeRole::kGroupBy}) == 1);
  CHECK(fs.attributes.count({"lake", "?", AttributeRole::kOrderBy}) == 1);
}

TEST_CASE("extraction is deterministic and every named relation is a source or '?'") {
  const auto schema = fixtures::lakes_schema();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 400; ++i) {
    const std::string text = generators::random_query(rng);
    CAPTURE(text);
    const auto tree = canonicalize(parse(text));
    const auto fs = extract_features(tree, &schema);
    CHECK(fs == extract_features(tree, &schema));
    for (const auto& p : fs.predicates)
      CHECK((p.relation == "?" || fs.data_sources.count(p.relation) == 1));
    for (const auto& a : fs.attributes)
      CHECK((a.relation == "?" || fs.data_sources.count(a.relation) == 1));
  }
}

TEST_CASE("similarity examples") {
  const auto a = features_of("SELECT * FROM WaterTemp WHERE temp < 18");
  CHECK(similarity(a, a) == doctest::Approx(1.0));

  FeatureSet r, rs;
  r.data_sources = {"r"};
  rs.data_sources = {"r", "s"};
  const SimilarityWeights only_sources{1, 0, 0, 0};
  CHECK(similarity(rs, r, only_sources) == doctest::Approx(0.5));

  FeatureSet x, y;
  x.data_sources = {"a"};
  x.attributes = {{"p", "a", AttributeRole::kSelect}};
  x.predicates = {{"p", "a", "=", "1"}};
  x.join_pairs = {JoinPair::of("a", "b")};
  y.data_sources = {"c"};
  y.attributes = {{"q", "c", AttributeRole::kSelect}};
  y.predicates = {{"q", "c", "=", "1"}};
  y.join_pairs = {JoinPair::of("c", "d")};
  CHECK(similarity(x, y) == doctest::Approx(0.0));

  // Constants do not matter.
  const auto b = features_of("SELECT * FROM WaterTemp WHERE temp < 15");
  CHECK(similarity(a, b) == doctest::Approx(1.0));

  CHECK_THROWS_AS(similarity(a, b, SimilarityWeights{0, 0, 0, 0}), cqms::Error);
  CHECK_THROWS_AS(similarity(a, b, SimilarityWeights{1, -1, 0, 0}), cqms::Error);
}

TEST_CASE("similarity is symmetric, bounded and 1 on identity") {
  std::mt19937_64 rng(5);
  const auto schema = fixtures::lakes_schema();
  std::uniform_real_distribution<double> w(0.0, 3.0);
  for (int i = 0; i < 300; ++i) {
    const auto a = features_of(generators::random_query(rng), &schema);
    const auto b = features_of(generators::random_query(rng), &schema);
    const SimilarityWeights weights{w(rng), w(rng), w(rng), w(rng) + 0.01};
    const double ab = similarity(a, b, weights);
    CHECK(ab == similarity(b, a, weights));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(similarity(a, a, weights) == doctest::Approx(1.0));
  }
}

TEST_CASE("ORDER BY on a select-list alias is not an attribute use") {
  const auto s = fixtures::lakes_schema();
  const auto fs = cqms::sql::extract_features(
      cqms::sql::canonicalize(cqms::sql::parse("SELECT lake, count(*) AS n FROM WaterTemp GROUP BY lake ORDER BY n DESC")), &s);
  for (const auto& a : fs.attributes) CHECK(a.attribute != "n");
  CHECK(fs.attributes.count({"lake", "watertemp", cqms::sql::AttributeRole::kGroupBy}) == 1);
}
