#include <cstdlib>
#include <random>

#include "cqms/error.hpp"
#include "cqms/meta/json.hpp"
#include "cqms/meta/meta_query.hpp"
#include "doctest.h"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace cqms;
using namespace cqms::meta;
using store::Principal;
using store::Value;
using oracles::oracle;
using oracles::random_cond;
using oracles::tabulate;
using oracles::Tables;

namespace {

constexpr EpochMs kNow = 10'000'000;
const Principal kRoot = Principal::root();

ExecutorOptions fixed_now() { return {30.0 * 24 * 3600 * 1000, [] { return kNow; }}; }

std::vector<Qid> qids(const std::vector<MatchResult>& rs) {
  std::vector<Qid> out;
  for (const auto& r : rs) out.push_back(r.qid);
  return out;
}

Qid add(profiler::Profiler& p, const std::string& text, EpochMs at = 1,
        std::int64_t exec_ms = 10, std::optional<std::int64_t> card = std::nullopt,
        const Principal& who = {"ann", {"lab"}, false}) {
  return p.ingest({text, "", at, exec_ms, card, {}}, std::nullopt, who);
}

}  // namespace

TEST_CASE("feature conditions match a linear scan of the feature tables") {
  store::Store store;
  support::CorpusOptions o;
  o.queries = 600;
  support::fill_random(store, o);
  const Executor exec(store, fixed_now());
  const auto snap = store.snapshot();
  const Tables tables = tabulate(*snap);
  std::mt19937_64 rng(99);
  std::size_t nonempty = 0;
  for (int i = 0; i < 120; ++i) {
    const Cond cond = random_cond(rng);
    const Principal who = i % 3 == 0 ? kRoot : support::random_principal(rng, o);
    std::vector<Qid> expected;
    snap->for_each([&](const store::StoredQuery& q) {
      if (store::visible_to(q, who) && oracle(tables, q, cond)) expected.push_back(q.qid);
    });
    auto got = qids(exec.execute({FeatureQuery{cond}, std::nullopt, std::nullopt}, who));
    std::sort(got.begin(), got.end());
    CAPTURE(to_json(cond).dump());
    CHECK(got == expected);
    nonempty += !expected.empty();
  }
  CHECK(nonempty > 30);
}

TEST_CASE("conjunction over salinity and temp predicates") {
  store::Store store;
  store.append(store::SchemaAdded{fixtures::lakes_schema(0)});
  profiler::Profiler p(store);
  std::vector<Qid> both;
  for (int i = 1; i <= 10; ++i) {
    const bool touch = i == 3 || i == 7;
    const Qid q = add(p, touch ? "SELECT * FROM WaterTemp, WaterSalinity WHERE salinity > " +
                                     std::to_string(i) + " AND temp < 18 AND WaterTemp.lake = WaterSalinity.lake"
                               : i % 2 ? "SELECT * FROM WaterSalinity WHERE salinity > 3"
                                       : "SELECT * FROM WaterTemp WHERE temp < 20");
    if (touch) both.push_back(q);
  }
  const Executor exec(store, fixed_now());
  const Cond c = Cond::all({Cond::leaf(Atom::has_predicate("salinity", "watersalinity")),
                            Cond::leaf(Atom::has_predicate("temp", "watertemp"))});
  CHECK(qids(exec.execute({FeatureQuery{c}, std::nullopt, std::nullopt}, kRoot)) == both);
}

TEST_CASE("kNN of a stored query returns itself first") {
  store::Store store;
  profiler::Profiler p(store);
  add(p, "SELECT * FROM a WHERE x = 1");
  const Qid target = add(p, "SELECT lake FROM WaterTemp WHERE temp < 18");
  add(p, "SELECT lake FROM WaterTemp, WaterSalinity WHERE temp < 18");
  const Executor exec(store, fixed_now());
  KnnQuery k;
  k.target = target;
  k.k = 1;
  const auto res = exec.execute({k, std::nullopt, std::nullopt}, kRoot);
  REQUIRE(res.size() == 1);
  CHECK(res[0].qid == target);
  CHECK(res[0].score == doctest::Approx(1.0));
  CHECK(res[0].explanation == std::vector<std::string>{"similarity=1.0000"});

  k.target.reset();
  k.text = "SELECT lake FROM WaterTemp, WaterSalinity WHERE temp < 3";
  k.k = 5;
  const auto by_text = exec.execute({k, std::nullopt, std::nullopt}, kRoot);
  CHECK(by_text.size() == 3);
  CHECK(by_text[0].qid == 3);

  k.target = 77;
  CHECK_THROWS_AS(exec.execute({k, std::nullopt, std::nullopt}, kRoot), Error);
}

TEST_CASE("kNN target invisible to the principal is not found") {
  store::Store store;
  profiler::Profiler p(store);
  const Qid secret = add(p, "SELECT * FROM t", 1, 1, std::nullopt, {"ann", {}, false});
  store.append(store::AccessChanged{secret, store::Visibility::kPrivate});
  const Executor exec(store, fixed_now());
  KnnQuery k;
  k.target = secret;
  try {
    exec.execute({k, std::nullopt, std::nullopt}, {"eve", {}, false});
    FAIL("invisible target accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
  }
}

TEST_CASE("match_data decisions") {
  store::OutputSummary full;
  full.mode = store::SummaryMode::kFull;
  full.columns = {"lake"};
  full.tuples = {{Value{std::string("Lake Washington")}}, {Value{std::string("Green Lake")}}};
  DataQuery cond{{Tuple{{Value{std::string("Lake Washington")}}, {}}},
                 {Tuple{{Value{std::string("Lake Union")}}, {}}}};
  CHECK(match_data(&full, cond) == DataMatch::kMatch);
  CHECK(match_data(nullptr, cond) == DataMatch::kPossible);

  store::OutputSummary sample = full;
  sample.mode = store::SummaryMode::kSample;
  CHECK(match_data(&sample, cond) == DataMatch::kPossible);
  sample.tuples.push_back({Value{std::string("Lake Union")}});
  CHECK(match_data(&sample, cond) == DataMatch::kNonMatch);

  // Missing include: a sample cannot decide, the same rows in full mode can.
  store::OutputSummary missing = full;
  missing.mode = store::SummaryMode::kSample;
  missing.tuples = {{Value{std::string("Green Lake")}}};
  CHECK(match_data(&missing, cond) == DataMatch::kPossible);
  missing.mode = store::SummaryMode::kFull;
  CHECK(match_data(&missing, cond) == DataMatch::kNonMatch);

  // Named columns compare only those columns; bare tuples compare multisets.
  store::OutputSummary wide;
  wide.columns = {"lake", "temp"};
  wide.tuples = {{Value{std::string("Lake Union")}, Value{std::int64_t{12}}}};
  CHECK(row_matches(wide.tuples[0], wide.columns, Tuple{{Value{std::string("Lake Union")}}, {"lake"}}));
  CHECK_FALSE(row_matches(wide.tuples[0], wide.columns, Tuple{{Value{std::string("Lake Union")}}, {}}));
  CHECK(row_matches(wide.tuples[0], wide.columns,
                    Tuple{{Value{12.0}, Value{std::string("Lake Union")}}, {}}));
}

TEST_CASE("data conditions over full summaries") {
  store::Store store;
  profiler::Profiler p(store);
  const auto rows = [](std::vector<std::string> lakes) {
    profiler::ResultRows r;
    r.columns = {"lake"};
    for (auto& l : lakes) r.rows.push_back({Value{std::move(l)}});
    return r;
  };
  const Principal who{"ann", {}, false};
  const Qid a = p.ingest({"SELECT lake FROM WaterTemp WHERE temp < 18", "", 1, 5, {}, {}},
                         rows({"Lake Washington", "Green Lake"}), who);
  p.ingest({"SELECT lake FROM WaterTemp WHERE temp < 25", "", 2, 5, {}, {}},
           rows({"Lake Washington", "Lake Union"}), who);
  p.ingest({"SELECT lake FROM WaterTemp WHERE temp < 5", "", 3, 5, {}, {}}, rows({}), who);
  const Executor exec(store, fixed_now());
  const auto res = exec.execute(
      meta_query_from_json(codec::Json::parse(
          R"({"type":"data","include":[["Lake Washington"]],"exclude":[{"lake":"Lake Union"}]})")),
      kRoot);
  REQUIRE(res.size() == 1);
  CHECK(res[0].qid == a);
  CHECK(res[0].certainty == Certainty::kDefinite);

  // A query without a summary is only a possible match, ranked after definite ones.
  add(p, "SELECT lake FROM WaterTemp");
  const auto with_unknown = exec.execute(
      {DataQuery{{Tuple{{Value{std::string("Lake Washington")}}, {}}}, {}}, std::nullopt, std::nullopt},
      kRoot);
  REQUIRE(with_unknown.size() == 3);
  CHECK(with_unknown.back().certainty == Certainty::kPossible);
}

TEST_CASE("from_partial builds the feature condition") {
  const auto fig = from_partial("SELECT FROM WaterSalinity, WaterTemperature,");
  const auto& c = std::get<FeatureQuery>(fig.body).cond;
  CHECK(c == Cond::all({Cond::leaf(Atom::references("watersalinity")),
                        Cond::leaf(Atom::references("watertemperature"))}));

  CHECK(std::get<FeatureQuery>(from_partial("SELECT * FROM t").body).cond ==
        Cond::all({Cond::leaf(Atom::references("t"))}));

  // Hand-derived from the features of the same text.
  const auto pred = from_partial("SELECT * FROM t WHERE temp < 18");
  CHECK(std::get<FeatureQuery>(pred.body).cond ==
        Cond::all({Cond::leaf(Atom::references("t")),
                   Cond::leaf(Atom::has_predicate("temp", "?", "<", "18"))}));

  // An unfinished predicate contributes nothing.
  CHECK(std::get<FeatureQuery>(from_partial("SELECT * FROM t WHERE temp <").body).cond ==
        Cond::all({Cond::leaf(Atom::references("t"))}));
  CHECK_THROWS_AS(from_partial("SELEC x FRO t"), SyntaxError);
}

TEST_CASE("rank examples") {
  store::Store store;
  profiler::Profiler p(store);
  for (int i = 0; i < 5; ++i) add(p, "SELECT * FROM w WHERE temp < " + std::to_string(i));
  for (int i = 0; i < 2; ++i) add(p, "SELECT lake FROM w WHERE depth > " + std::to_string(i));
  const Executor exec(store, fixed_now());
  const auto snap = store.snapshot();

  CHECK(exec.rank(*snap, {6}, {0, 0, 1, 0, 0}).size() == 1);

  const auto pop = exec.rank(*snap, {6, 1}, {0, 1, 0, 0, 0});
  CHECK(qids(pop) == std::vector<Qid>{1, 6});
  CHECK(pop[0].score == doctest::Approx(1.0));
  CHECK(pop[1].score == doctest::Approx(2.0 / 5.0));

  const auto target = snap->get(7).features;
  CHECK(exec.rank(*snap, {1, 2, 7}, {1, 0, 0, 0, 0}, &target).front().qid == 7);

  CHECK_THROWS_AS(exec.rank(*snap, {1}, {0, 0, 0, 0, 0}), Error);
  CHECK_THROWS_AS(exec.rank(*snap, {1}, {1, -1, 0, 0, 0}), Error);
}

TEST_CASE("recency halves every half-life; efficiency and cardinality are corpus relative") {
  store::Store store;
  profiler::Profiler p(store);
  const double day = 24.0 * 3600 * 1000;
  const Qid fresh = add(p, "SELECT * FROM a", kNow, 0, 0);
  const Qid old = add(p, "SELECT * FROM b", kNow - static_cast<EpochMs>(30 * day), 1000, 3);
  const Executor exec(store, fixed_now());
  const auto snap = store.snapshot();
  const auto rec = exec.rank(*snap, {fresh, old}, {0, 0, 1, 0, 0});
  CHECK(rec[0].score == doctest::Approx(1.0));
  CHECK(rec[1].score == doctest::Approx(0.5));
  const auto eff = exec.rank(*snap, {fresh, old}, {0, 0, 0, 1, 0});
  CHECK(eff[1].score == doctest::Approx(0.5));
  const auto card = exec.rank(*snap, {fresh, old}, {0, 0, 0, 0, 1});
  CHECK(card[1].score == doctest::Approx(0.25));
}

TEST_CASE("scaling every weight leaves the order unchanged") {
  store::Store store;
  support::CorpusOptions o;
  o.queries = 300;
  o.shuffle_access = false;
  support::fill_random(store, o);
  const Executor exec(store, fixed_now());
  const auto snap = store.snapshot();
  std::vector<Qid> all;
  snap->for_each([&](const store::StoredQuery& q) { all.push_back(q.qid); });
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(0.0, 2.0);
  for (int i = 0; i < 40; ++i) {
    const RankWeights base{w(rng), w(rng), w(rng), w(rng), w(rng) + 0.01};
    const double c = std::exp(std::uniform_real_distribution<double>(-6, 6)(rng));
    const RankWeights scaled{base.similarity * c, base.popularity * c, base.recency * c,
                             base.efficiency * c, base.small_cardinality * c};
    const auto target = snap->get(all[i]).features;
    CHECK(qids(exec.rank(*snap, all, base, &target)) == qids(exec.rank(*snap, all, scaled, &target)));
  }
}

TEST_CASE("keyword and substring search") {
  store::Store store;
  profiler::Profiler p(store);
  const Qid a = add(p, "SELECT salinity FROM WaterSalinity");
  const Qid w = add(p, "SELECT lake, rank() OVER (ORDER BY temp) FROM WaterTemp");
  const Qid b = add(p, "SELECT temp FROM WaterTemp");
  store.append(store::AnnotationAdded{{b, std::nullopt, "bob", "Compare with salinity later", 0}});
  const Executor exec(store, fixed_now());
  const auto kw = [&](std::vector<std::string> terms) {
    return qids(exec.execute({KeywordQuery{std::move(terms)}, std::nullopt, std::nullopt}, kRoot));
  };
  CHECK(kw({"salinity"}) == std::vector<Qid>{a, b});
  CHECK(kw({"SALINITY", "watersalinity"}) == std::vector<Qid>{a});
  CHECK(kw({"over"}) == std::vector<Qid>{w});  // raw text of an unparsed query
  CHECK(kw({"sal"}).empty());                  // whole tokens only
  CHECK(qids(exec.execute({SubstringQuery{"FROM Water"}, std::nullopt, std::nullopt}, kRoot)) ==
        std::vector<Qid>{a, w, b});
  CHECK(qids(exec.execute({SubstringQuery{"from water"}, std::nullopt, std::nullopt}, kRoot)).empty());
}

TEST_CASE("execute never changes the store and never leaks") {
  store::Store store;
  support::CorpusOptions o;
  o.queries = 250;
  support::fill_random(store, o);
  const Executor exec(store, fixed_now());
  const Seq before = store.seq();
  const auto snap = store.snapshot();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const Principal who = support::random_principal(rng, o);
    std::vector<MetaQuery> mqs;
    mqs.push_back({KeywordQuery{{"lake"}}, std::nullopt, std::nullopt});
    mqs.push_back({FeatureQuery{random_cond(rng)}, RankWeights{0, 1, 1, 0, 0}, std::nullopt});
    KnnQuery k;
    k.text = generators::random_query(rng);
    k.k = 20;
    mqs.push_back({k, std::nullopt, std::nullopt});
    for (const auto& mq : mqs)
      for (const auto& r : exec.execute(mq, who)) CHECK(store::visible_to(*snap->find(r.qid), who));
  }
  CHECK(store.seq() == before);
}

TEST_CASE("meta-query JSON round trip and validation") {
  const char* text =
      R"({"type":"feature","cond":{"and":[{"references":"WaterTemp"},{"not":{"author":"bob"}},)"
      R"({"has_predicate":{"attr":"temp","op":"<","const":18.0}},{"exec_ms":{"max":100}}]},"limit":5})";
  const MetaQuery mq = meta_query_from_json(codec::Json::parse(text));
  const auto& c = std::get<FeatureQuery>(mq.body).cond;
  CHECK(c.children[0].atom.relation == "watertemp");
  CHECK(c.children[2].atom.constant == std::optional<std::string>("18"));
  CHECK(meta_query_from_json(to_json(mq)).body.index() == mq.body.index());
  CHECK(to_json(meta_query_from_json(to_json(mq))) == to_json(mq));

  CHECK(canonical_constant(codec::Json("salinity")) == "'salinity'");
  CHECK(canonical_constant(codec::Json("'x'")) == "'x'");

  for (const char* bad :
       {R"({"type":"knn","k":0,"qid":"1"})", R"({"type":"feature","cond":{"and":[]}})",
        R"({"type":"data","include":[["a"]],"exclude":[["a"]]})", R"({"type":"nope"})",
        R"({"type":"feature","cond":{"frobnicate":1}})", R"([1,2])",
        R"({"type":"knn","qid":"1","weights":{"similarity":0}})"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(meta_query_from_json(codec::Json::parse(bad)), Error);
  }
}
