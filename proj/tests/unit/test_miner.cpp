#include <atomic>
#include <functional>
#include <random>
#include <thread>

#include "cqms/error.hpp"
#include "cqms/miner/miner.hpp"
#include "cqms/sql/similarity.hpp"
#include "doctest.h"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace cqms;
using namespace cqms::miner;
using store::Principal;
using oracles::brute_force_components;
using oracles::brute_force_rules;

namespace {

const Principal kRoot = Principal::root();
constexpr EpochMs kMinute = 60'000;

Qid add(profiler::Profiler& p, const std::string& text, const std::string& user = "ann",
        EpochMs at = 1, std::optional<std::int64_t> card = std::nullopt) {
  return p.ingest({text, user, at, 5, card, {}}, std::nullopt, kRoot);
}

std::vector<std::string> texts(const std::vector<Completion>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.text);
  return out;
}

struct Lakes {
  store::Store store;
  profiler::Profiler profiler{store};
  Lakes() { store.append(store::SchemaAdded{fixtures::lakes_schema(0)}); }
};

}  // namespace

TEST_CASE("six-step exploration forms one session with five modification edges") {
  Lakes l;
  EpochMs at = 0;
  for (const auto& t : fixtures::figure2_session()) add(l.profiler, t, "ann", at += kMinute);
  Miner m(l.store);
  const auto r = m.segment_sessions("ann");
  CHECK(r.sessions == 1);
  CHECK(r.edges_written == 5);
  const auto snap = l.store.snapshot();
  const std::vector<std::string> expected = {
      "AddRelation(watersalinity)", "ChangeConstant(temp, 22, 20)", "ChangeConstant(temp, 20, 18)",
      "AddPredicate(salinity@watersalinity > 30)", "AddPredicate(depth@watertemp < 10)"};
  REQUIRE(snap->edge_count() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& e = snap->edge(i);
    CHECK(e.from == i + 1);
    CHECK(e.to == i + 2);
    CHECK(e.type == store::EdgeType::kModification);
    REQUIRE(e.edit_script);
    REQUIRE(e.edit_script->size() == 1);
    CHECK(e.edit_script->front().label() == expected[i]);
  }
  snap->for_each([](const store::StoredQuery& q) { CHECK(q.session_id == Qid{1}); });

  // Nothing new on a rerun.
  const Seq seq = l.store.seq();
  const auto again = m.segment_all_sessions();
  CHECK(again.assignments_written == 0);
  CHECK(again.edges_written == 0);
  CHECK(l.store.seq() == seq);
}

TEST_CASE("session boundaries: single query, long gaps, dissimilar queries, repeats") {
  Lakes l;
  const Qid solo = add(l.profiler, "SELECT * FROM WaterTemp", "solo", 5);
  const Qid a = add(l.profiler, "SELECT * FROM WaterTemp WHERE temp < 3", "bob", 0);
  const Qid b = add(l.profiler, "SELECT city FROM CityLocations WHERE city = 'x'", "bob", 2 * 3'600'000);
  const Qid c = add(l.profiler, "SELECT lake FROM WaterSalinity", "bob", 2 * 3'600'000 + kMinute);
  const Qid d = add(l.profiler, "SELECT lake FROM WaterSalinity", "bob", 2 * 3'600'000 + 2 * kMinute);
  Miner m(l.store);
  CHECK(m.segment_sessions("solo").sessions == 1);
  CHECK(l.store.snapshot()->edge_count() == 0);
  const auto r = m.segment_sessions("bob");
  CHECK(r.sessions == 3);
  const auto snap = l.store.snapshot();
  CHECK(snap->get(solo).session_id == solo);
  CHECK(snap->get(a).session_id == a);
  CHECK(snap->get(b).session_id == b);
  CHECK(snap->get(c).session_id == c);
  CHECK(snap->get(d).session_id == c);
  REQUIRE(snap->edge_count() == 1);
  CHECK(snap->edge(0).type == store::EdgeType::kTemporal);
  CHECK_FALSE(snap->edge(0).edit_script);
}

TEST_CASE("sessions on a random corpus are paths that cover every query once") {
  store::Store store;
  support::CorpusOptions o;
  o.queries = 300;
  o.shuffle_access = false;
  support::fill_random(store, o);
  Miner m(store, MinerConfig{});
  m.segment_all_sessions();
  const auto snap = store.snapshot();
  std::map<Qid, Qid> session;
  snap->for_each([&](const store::StoredQuery& q) {
    REQUIRE(q.session_id);
    session[q.qid] = *q.session_id;
  });
  std::map<Qid, int> in_degree, out_degree;
  for (std::size_t i = 0; i < snap->edge_count(); ++i) {
    const auto& e = snap->edge(i);
    CHECK(session[e.from] == session[e.to]);
    CHECK(snap->get(e.from).submitted_at <= snap->get(e.to).submitted_at);
    CHECK(++out_degree[e.from] == 1);
    CHECK(++in_degree[e.to] == 1);
  }
  std::set<Qid> sessions;
  for (const auto& [_, s] : session) sessions.insert(s);
  CHECK(snap->edge_count() == session.size() - sessions.size());
}

TEST_CASE("apriori equals power-set enumeration on small alphabets") {
  std::mt19937_64 rng(21);
  const std::vector<Item> alphabet = {"src:a", "src:b", "src:c", "attr:x@a", "attr:y@b",
                                      "pred-template:x@a <", "pred-template:y@b =", "src:d",
                                      "attr:z@d", "attr:w@?", "pred-template:w@? >", "src:e"};
  for (int round = 0; round < 60; ++round) {
    const std::size_t letters = 2 + generators::pick(rng, alphabet.size() - 1);
    std::vector<ItemSet> txs;
    for (std::size_t t = 0, n = 1 + generators::pick(rng, 40); t < n; ++t) {
      std::set<Item> s;
      for (std::size_t i = 0; i < letters; ++i)
        if (generators::coin(rng, 0.45)) s.insert(alphabet[i]);
      txs.emplace_back(s.begin(), s.end());
    }
    const double sup = std::vector<double>{0.05, 0.1, 0.25, 0.5, 1.0}[generators::pick(rng, 5)];
    const double conf = std::vector<double>{0.1, 0.5, 0.8, 1.0}[generators::pick(rng, 4)];
    CAPTURE(round);
    const auto got = association_rules(txs, sup, conf);
    const auto want = brute_force_rules(txs, sup, conf);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].antecedent == want[i].antecedent);
      CHECK(got[i].consequent == want[i].consequent);
      CHECK(got[i].support == doctest::Approx(want[i].support));
      CHECK(got[i].confidence == doctest::Approx(want[i].confidence));
    }
  }
}

TEST_CASE("rule examples") {
  Lakes l;
  for (int i = 0; i < 6; ++i)
    add(l.profiler, "SELECT * FROM WaterTemp, WaterSalinity WHERE temp < " + std::to_string(i));
  for (int i = 0; i < 4; ++i) add(l.profiler, "SELECT * FROM WaterTemp");
  add(l.profiler, "SELECT city FROM CityLocations");
  Miner m(l.store);
  const auto rules = m.mine_association_rules();
  const auto it = std::find_if(rules.begin(), rules.end(), [](const AssociationRule& r) {
    return r.antecedent == ItemSet{"src:watersalinity"} && r.consequent == "src:watertemp";
  });
  REQUIRE(it != rules.end());
  CHECK(it->confidence == 1.0);
  CHECK(it->support == doctest::Approx(6.0 / 11.0));
  for (const auto& r : rules) {
    CHECK(r.support >= 0.05);
    CHECK(r.confidence >= 0.5);
    CHECK(std::find(r.antecedent.begin(), r.antecedent.end(), r.consequent) == r.antecedent.end());
  }

  MinerConfig strict;
  strict.min_support = 1.0;
  CHECK(Miner(l.store, strict).mine_association_rules().empty());
  CHECK(association_rules({}, 0.5, 0.5).empty());
}

TEST_CASE("clusters equal connected components at the threshold") {
  for (double threshold : {0.3, 0.6, 0.8, 1.0}) {
    store::Store store;
    support::CorpusOptions o;
    o.queries = 180;
    o.seed = static_cast<std::uint64_t>(threshold * 100);
    support::fill_random(store, o);
    const auto snap = store.snapshot();
    std::vector<const store::StoredQuery*> all;
    snap->for_each([&](const store::StoredQuery& q) { all.push_back(&q); });
    MinerConfig c;
    c.cluster_link_threshold = threshold;
    CAPTURE(threshold);
    CHECK(Miner(store, c).cluster_queries() == brute_force_components(all, threshold));
  }
}

TEST_CASE("cluster examples") {
  Lakes l;
  const Qid a = add(l.profiler, "SELECT lake FROM WaterTemp WHERE temp < 1");
  const Qid b = add(l.profiler, "SELECT lake FROM WaterTemp WHERE temp < 99");
  const Qid c = add(l.profiler, "SELECT city FROM CityLocations JOIN WaterSalinity ON CityLocations.lake = WaterSalinity.lake");
  const Qid d = add(l.profiler, "SELECT salinity FROM WaterSalinity WHERE salinity > 2 GROUP BY salinity");
  const Qid bad = add(l.profiler, "SELECT rank() OVER (ORDER BY temp) FROM WaterTemp");
  const Qid bad2 = add(l.profiler, "SELECT rank() OVER (ORDER BY temp) FROM WaterTemp");
  const auto clusters = Miner(l.store).cluster_queries();
  CHECK(clusters == std::vector<std::vector<Qid>>{{a, b}, {c}, {d}, {bad}, {bad2}});
}

TEST_CASE("suggestion model contents") {
  store::Store empty;
  Miner m0(empty);
  const auto zero = m0.build_suggestion_model();
  CHECK(zero->transactions == 0);
  CHECK(zero->global_counts.empty());
  CHECK(zero->rules.empty());
  CHECK(zero->version == 1);

  store::Store store;
  support::CorpusOptions o;
  o.queries = 250;
  support::fill_random(store, o);
  Miner m(store);
  const auto first = m.build_suggestion_model();
  const auto second = m.build_suggestion_model();
  CHECK(second->version == first->version + 1);
  CHECK(first->content_json() == second->content_json());
  CHECK(m.model() == second);

  // Conditional counts against a plain rescan of the store.
  const auto snap = store.snapshot();
  for (const ItemSet& ctx : std::vector<ItemSet>{{"src:watersalinity"}, {"src:watertemp"}, {}}) {
    for (const Item& item : {Item("src:watertemp"), Item("src:citylocations"), Item("attr:lake@watertemp")}) {
      std::uint32_t expect = 0;
      snap->for_each([&](const store::StoredQuery& q) {
        const auto items = feature_items(q.features);
        const auto has = [&](const Item& x) { return std::binary_search(items.begin(), items.end(), x); };
        expect += has(item) && std::all_of(ctx.begin(), ctx.end(), has);
      });
      CAPTURE(item);
      CHECK(first->conditional_count(ctx, item) == expect);
    }
  }
}

TEST_CASE("model publication is atomic for concurrent readers") {
  store::Store store;
  support::CorpusOptions o;
  o.queries = 120;
  support::fill_random(store, o);
  Miner m(store);
  const std::string expected = m.build_suggestion_model()->content_json();
  std::atomic<bool> stop{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    std::uint64_t last = 0;
    while (!stop) {
      const auto model = m.model();
      if (model->version < last || model->content_json() != expected) ++bad;
      last = model->version;
    }
  });
  for (int i = 0; i < 20; ++i) m.build_suggestion_model();
  stop = true;
  reader.join();
  CHECK(bad == 0);
  CHECK(m.model()->version == 21);
}

TEST_CASE("completions prefer what co-occurs with the context") {
  Lakes l;
  // CityLocations is the most used relation overall, but next to
  // WaterSalinity people reach for WaterTemp.
  for (int i = 0; i < 12; ++i) add(l.profiler, "SELECT city FROM CityLocations WHERE city = 'c" + std::to_string(i) + "'");
  for (int i = 0; i < 5; ++i) add(l.profiler, "SELECT * FROM WaterSalinity, WaterTemp WHERE temp < " + std::to_string(i));
  add(l.profiler, "SELECT * FROM WaterSalinity, CityLocations");
  Miner m(l.store);
  m.build_suggestion_model();

  const auto ctx = m.suggest_completions("SELECT * FROM WaterSalinity, ", CompletionKind::kRelation);
  REQUIRE(ctx.size() >= 2);
  CHECK(texts(ctx)[0] == "watertemp");
  CHECK(ctx[0].basis == "rule");
  CHECK(std::find(texts(ctx).begin(), texts(ctx).end(), "citylocations") != texts(ctx).end());

  const auto global = m.suggest_completions("SELECT * FROM ", CompletionKind::kAny);
  CHECK(texts(global)[0] == "citylocations");

  const auto typed = m.suggest_completions("SELECT * FROM WaterSalinity, Wat", CompletionKind::kAny);
  CHECK(texts(typed) == std::vector<std::string>{"watertemp"});

  const auto attrs = m.suggest_completions("SELECT * FROM WaterTemp WHERE te", CompletionKind::kAny);
  CHECK(texts(attrs) == std::vector<std::string>{"temp", "temp <"});
  CHECK(attrs[1].kind == CompletionKind::kPredicate);

  const auto first = m.suggest_completions("SELECT * FROM WaterSalinity, ", CompletionKind::kAny, 1);
  CHECK(first.size() == 1);
  CHECK_THROWS_AS(m.suggest_completions("SELECT FROM FROM x", CompletionKind::kAny), SyntaxError);
}

TEST_CASE("completions on a cold start come from the schema") {
  store::Store store;
  sql::SchemaSnapshot s;
  s.relations["t"] = {{"a", "int"}};
  store.append(store::SchemaAdded{s});
  Miner m(store);
  m.build_suggestion_model();
  const auto cs = m.suggest_completions("", CompletionKind::kRelation);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].text == "t");
  CHECK(cs[0].basis == "schema");
  CHECK(texts(m.suggest_completions("SELECT ", CompletionKind::kAny)) == std::vector<std::string>{"a"});
  // Before any build the model is empty and nothing is suggested.
  store::Store fresh;
  CHECK(Miner(fresh).suggest_completions("SELECT * FROM ", CompletionKind::kAny).empty());
}

TEST_CASE("corrections for unknown identifiers") {
  Lakes l;
  add(l.profiler, "SELECT * FROM WaterSalinity");
  Miner m(l.store);
  m.build_suggestion_model();
  const auto fixes = m.suggest_corrections("SELECT salinity FROM WaterSalinty", CorrectionSignal::kUnknownIdentifier);
  REQUIRE(fixes.size() == 1);
  CHECK(fixes[0].original == "watersalinty");
  CHECK(fixes[0].replacement == "watersalinity");
  CHECK(fixes[0].distance == 1);
  CHECK(fixes[0].corrected_text == "SELECT salinity FROM watersalinity");

  const auto attr = m.suggest_corrections("SELECT tmp FROM WaterTemp", CorrectionSignal::kUnknownIdentifier);
  REQUIRE_FALSE(attr.empty());
  CHECK(attr[0].replacement == "temp");

  CHECK(m.suggest_corrections("SELECT * FROM Xyzzyqqq", CorrectionSignal::kUnknownIdentifier).empty());
  CHECK(m.suggest_corrections("SELECT * FROM WaterTemp", CorrectionSignal::kUnknownIdentifier).empty());
  // Short names tolerate one edit only.
  CHECK(m.suggest_corrections("SELECT * FROM WaterTemp WHERE tx < 1", CorrectionSignal::kUnknownIdentifier).empty());
  CHECK_THROWS_AS(m.suggest_corrections("SELEC * FRM t", CorrectionSignal::kUnknownIdentifier), SyntaxError);
  CHECK(edit_distance("kitten", "sitting") == 3);
}

TEST_CASE("corrections for empty results use predicates that returned rows") {
  Lakes l;
  for (int i = 0; i < 3; ++i) add(l.profiler, "SELECT * FROM WaterTemp WHERE temp < 18", "ann", i, 40);
  add(l.profiler, "SELECT * FROM WaterTemp WHERE temp < 25", "ann", 9, 70);
  add(l.profiler, "SELECT * FROM WaterTemp WHERE temp < 1", "ann", 9, 0);
  add(l.profiler, "SELECT * FROM WaterTemp WHERE depth < 1", "ann", 9, 10);
  Miner m(l.store);
  m.build_suggestion_model();
  const auto fixes = m.suggest_corrections("SELECT * FROM WaterTemp WHERE temp < 2", CorrectionSignal::kEmptyResult);
  REQUIRE(fixes.size() == 2);
  CHECK(fixes[0].original == "temp < 2");
  CHECK(fixes[0].replacement == "temp < 18");
  CHECK(fixes[0].popularity == 3);
  CHECK(fixes[1].replacement == "temp < 25");
}

TEST_CASE("recommendations") {
  Lakes l;
  const Principal ann{"ann", {}, false};
  const Qid q = add(l.profiler, "SELECT lake FROM WaterTemp WHERE temp < 10");
  const Qid twin = add(l.profiler, "SELECT lake FROM WaterTemp WHERE temp < 30");
  const Qid third = add(l.profiler, "SELECT lake FROM WaterTemp WHERE temp < 50");
  const Qid other = add(l.profiler, "SELECT city FROM CityLocations");
  const Qid secret = add(l.profiler, "SELECT lake FROM WaterTemp WHERE temp < 11", "zed");
  l.store.append(store::AccessChanged{secret, store::Visibility::kPrivate});
  Miner m(l.store);
  m.build_suggestion_model();

  const auto one = m.recommend({q}, 1, {}, ann);
  REQUIRE(one.size() == 1);
  CHECK(one[0].qid == twin);
  CHECK(one[0].score == doctest::Approx(1.0));

  // twin and third share a cluster, so only one of them is shown.
  const auto all = m.recommend({q}, 50, {}, ann);
  std::vector<Qid> ids;
  for (const auto& r : all) ids.push_back(r.qid);
  CHECK(ids == std::vector<Qid>{twin, other});
  (void)third;

  const auto by_text = m.recommend({std::string("SELECT city FROM CityLocations WHERE city = 'x'")}, 1, {}, ann);
  REQUIRE(by_text.size() == 1);
  CHECK(by_text[0].qid == other);

  CHECK_THROWS_AS(m.recommend({Qid{999}}, 1, {}, ann), Error);
  CHECK_THROWS_AS(m.recommend({secret}, 1, {}, ann), Error);
  CHECK_THROWS_AS(m.recommend({q}, 0, {}, ann), Error);
}

TEST_CASE("recommendations never return inputs or invisible queries") {
  store::Store store;
  support::CorpusOptions o;
  o.queries = 200;
  support::fill_random(store, o);
  Miner m(store);
  m.build_suggestion_model();
  const auto snap = store.snapshot();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 60; ++i) {
    const Principal who = support::random_principal(rng, o);
    const auto visible = snap->scan({}, who);
    if (visible.empty()) continue;
    const Qid input = visible[generators::pick(rng, visible.size())]->qid;
    for (const auto& r : m.recommend({input}, 200, {}, who)) {
      CHECK(r.qid != input);
      CHECK(store::visible_to(*snap->find(r.qid), who));
    }
  }
}

TEST_CASE("miner config validation") {
  store::Store store;
  MinerConfig c;
  c.session_gap_ms = 0;
  CHECK_THROWS_AS(Miner(store, c), Error);
  c = {};
  c.min_support = 0;
  CHECK_THROWS_AS(Miner(store, c), Error);
  c = {};
  c.cluster_link_threshold = 1.5;
  CHECK_THROWS_AS(Miner(store, c), Error);
  CHECK(parse_completion_kind("Relation") == CompletionKind::kRelation);
  CHECK_THROWS_AS(parse_completion_kind("table"), Error);
  CHECK(parse_correction_signal("empty-result") == CorrectionSignal::kEmptyResult);
}
