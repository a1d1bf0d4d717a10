#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.h"
#include "learner.h"
#include "oracles.h"
#include "retriever.h"

using namespace tkgr;
using tkgr::test::GraphBuilder;
using tkgr::test::find_fact;

namespace {

Walk walk_of(std::initializer_list<FactId> ids) {
  Walk w;
  w.facts.assign(ids.begin(), ids.end());
  return w;
}

// Graph holding one instance of the cycle rule (to abstract it from) plus
// a query neighborhood: two r1/r2 facts inside the window and one r1 fact
// at the query timestamp (outside the half-open window).
struct CycleFixture {
  TemporalGraph g;
  Rule rule;
  Query query;

  CycleFixture() {
    g = GraphBuilder()
            .fact("C0", "r3", "A0", 3)
            .fact("A0", "r2", "B0", 2)
            .fact("B0", "r1", "C0", 1)
            .fact("A", "r2", "B", 6)
            .fact("B", "r1", "C", 5)
            .fact("B", "r1", "C", 7)
            .build();
    rule = abstract_rule(g,
                         walk_of({find_fact(g, "C0", "r3", "A0", 3), find_fact(g, "A0", "r2", "B0", 2),
                                  find_fact(g, "B0", "r1", "C0", 1)}),
                         Mode::tlogic);
    rule.confidence = 0.8;
    query.subject = *g.vocabs().entities.find("C");
    query.relation = *g.vocabs().relations.find("r3");
    query.t = g.normalize_query_time(7);
    query.subject_cat = g.category_of(query.subject);
  }
};

}  // namespace

TEST_SUITE_BEGIN("retriever");

TEST_CASE("select_rules filters by relation and category") {
  RuleBank bank;
  auto make = [](RelationId rel, CategoryId cat, double conf) {
    Rule r;
    r.mode = Mode::ctlogic;
    r.length = 1;
    r.head_relation = rel;
    r.head_subject_ph = 0;
    r.head_object_ph = 1;
    r.body_relations = {7};
    r.body_subject_ph = {1};
    r.body_object_ph = {0};
    r.head_subject_cat = cat;
    r.head_object_cat = 0;
    r.body_subject_cat = {0};
    r.body_object_cat = {cat};
    r.confidence = conf;
    r.body_support = 2;
    r.validate();
    return r;
  };
  bank.insert(make(1, 0, 0.5));  // (r1, cA)
  bank.insert(make(1, 1, 0.9));  // (r1, cB)
  bank.insert(make(2, 0, 0.7));  // (r2, cA)

  auto ct = select_rules(bank, 1, 0, Mode::ctlogic);
  REQUIRE(ct.size() == 1);
  CHECK(ct[0]->head_subject_cat == 0);

  auto tl = select_rules(bank, 1, 0, Mode::tlogic);
  REQUIRE(tl.size() == 2);
  CHECK(tl[0]->confidence == 0.9);  // descending confidence across categories

  CHECK(select_rules(bank, 9, 0, Mode::tlogic).empty());
}

TEST_CASE("score formula") {
  CHECK(score(0.8, 5, 5, 0.5, 0.1) == doctest::Approx(0.9).epsilon(1e-12));  // t_q - tau = 0
  CHECK(score(0.8, 0, 10, 0.5, 0.1) == doctest::Approx(0.5839397205857212).epsilon(1e-12));
  CHECK(score(0.6, 1, 9, 1.0, 0.1) == doctest::Approx(0.6).epsilon(1e-15));  // alpha = 1 ignores decay

  SUBCASE("monotone in tau and confidence, always in (0, 1]") {
    double prev = -1.0;
    for (Time tau = 0; tau < 20; ++tau) {
      double s = score(0.3, tau, 20, 0.5, 0.1);
      CHECK(s > prev);
      CHECK(s > 0.0);
      CHECK(s <= 1.0);
      prev = s;
    }
    prev = -1.0;
    for (double conf = 0.02; conf <= 1.0; conf += 0.02) {
      double s = score(conf, 3, 9, 0.5, 0.1);
      CHECK(s > prev);
      CHECK(s <= 1.0);
      prev = s;
    }
  }
}

TEST_CASE("ground_rule anchors the query subject at the earliest body fact's object") {
  CycleFixture fx;
  // window [t_q - 2, t_q) covers raw times {5, 6} only
  WindowView view = fx.g.window(fx.query.t, 2);
  auto got = ground_rule(fx.rule, fx.query, view);

  REQUIRE(got.size() == 1);
  EntityId a = *fx.g.vocabs().entities.find("A");
  REQUIRE(got.count(a) == 1);
  CHECK(fx.g.time_label(got.at(a)) == 5);  // tau = earliest body fact's timestamp

  // the r1 fact at the query timestamp must not be visible
  auto naive = tkgr::test::ground_rule_naive(fx.rule, fx.query, fx.g, fx.query.t - 2, fx.query.t);
  CHECK(got == naive);
}

TEST_CASE("ground_rule respects placeholder equality constraints") {
  // rule with a recurring entity: head (X0,r3,X1) :- (X1,r2,X0), (X0,r1,X0)
  TemporalGraph g = GraphBuilder()
                        .fact("C0", "r3", "A0", 3)
                        .fact("A0", "r2", "C0", 2)
                        .fact("C0", "r1", "C0", 1)
                        .fact("A", "r2", "Q", 6)
                        .fact("B", "r1", "Q", 5)   // distinct subject: must be rejected
                        .build();
  Rule rule = abstract_rule(g,
                            walk_of({find_fact(g, "C0", "r3", "A0", 3), find_fact(g, "A0", "r2", "C0", 2),
                                     find_fact(g, "C0", "r1", "C0", 1)}),
                            Mode::tlogic);
  rule.confidence = 0.5;
  Query q;
  q.subject = *g.vocabs().entities.find("Q");
  q.relation = *g.vocabs().relations.find("r3");
  q.t = g.normalize_query_time(7);
  q.subject_cat = g.category_of(q.subject);

  WindowView view = g.window(q.t, 100);
  CHECK(ground_rule(rule, q, view).empty());
  CHECK(tkgr::test::ground_rule_naive(rule, q, g, q.t - 100, q.t).empty());
}

TEST_CASE("ground_rule with no incident facts is empty") {
  CycleFixture fx;
  Query q = fx.query;
  q.subject = *fx.g.vocabs().entities.find("A0");  // nothing points at A0 inside the window
  WindowView view = fx.g.window(q.t, 2);
  CHECK(ground_rule(fx.rule, q, view).empty());
}

TEST_CASE("ground_rule agrees with the naive matcher on random windows") {
  Rng gen(314);
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    GraphBuilder b;
    int n_entities = 5 + static_cast<int>(gen.bounded(4));
    int n_facts = 15 + static_cast<int>(gen.bounded(25));
    for (int i = 0; i < n_facts; ++i) {
      b.fact("e" + std::to_string(gen.bounded(static_cast<size_t>(n_entities))),
             "r" + std::to_string(gen.bounded(3)),
             "e" + std::to_string(gen.bounded(static_cast<size_t>(n_entities))),
             static_cast<int64_t>(gen.bounded(8)));
    }
    TemporalGraph g = b.build();
    for (int attempt = 0; attempt < 12; ++attempt) {
      RelationId rel = static_cast<RelationId>(gen.bounded(static_cast<size_t>(g.num_relations())));
      int32_t len = 1 + static_cast<int32_t>(gen.bounded(3));
      Rng walk_rng(gen.next_u64());
      auto res = sample_walk(g, rel, len, std::nullopt, walk_rng);
      if (res.status != WalkStatus::ok) continue;
      Rule rule = abstract_rule(g, res.walk, Mode::tlogic);
      Query q;
      q.subject = static_cast<EntityId>(gen.bounded(static_cast<size_t>(g.num_entities())));
      q.relation = rule.head_relation;
      q.t = static_cast<Time>(1 + gen.bounded(static_cast<size_t>(g.num_times())));
      q.subject_cat = g.category_of(q.subject);
      Time w = static_cast<Time>(1 + gen.bounded(8));
      WindowView view = g.window(q.t, w);
      auto fast = ground_rule(rule, q, view);
      auto naive = tkgr::test::ground_rule_naive(rule, q, g, q.t - w, q.t);
      CHECK(fast == naive);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

namespace {

// Three one-step rules with distinct body relations and descending
// confidence, plus query-side facts grounding them.
struct MicroBank {
  TemporalGraph g;
  RuleBank bank;
  Query query;

  MicroBank() {
    GraphBuilder b;
    for (const std::string& rel : {std::string("ra"), std::string("rb"), std::string("rc")}) {
      b.fact("C_" + rel, "rh", "B_" + rel, 2);
      b.fact("B_" + rel, rel, "C_" + rel, 1);
    }
    b.fact("K1", "ra", "Q", 10);
    b.fact("K1", "rb", "Q", 11);
    b.fact("K2", "rc", "Q", 12);
    g = b.build();

    double conf = 0.9;
    for (const std::string& rel : {std::string("ra"), std::string("rb"), std::string("rc")}) {
      Rule rule = abstract_rule(g,
                                walk_of({find_fact(g, "C_" + rel, "rh", "B_" + rel, 2),
                                         find_fact(g, "B_" + rel, rel, "C_" + rel, 1)}),
                                Mode::tlogic);
      rule.confidence = conf;
      rule.body_support = 2;
      conf -= 0.1;
      bank.insert(rule);
    }
    query.subject = *g.vocabs().entities.find("Q");
    query.relation = *g.vocabs().relations.find("rh");
    query.t = g.normalize_query_time(13);
    query.subject_cat = g.category_of(query.subject);
  }
};

}  // namespace

TEST_CASE("retrieve stops once gamma distinct score vectors exist") {
  MicroBank fx;
  ApplyParams params;
  params.window = 100;
  params.mode = Mode::tlogic;

  SUBCASE("gamma=1 stops after the first grounding rule") {
    params.gamma = 1;
    CandidateTable t = retrieve(fx.query, fx.bank, fx.g, params);
    CHECK(t.rules_applied == 1);
    CHECK(t.scores.size() == 1);
  }
  SUBCASE("a shared candidate yields one two-score vector, delaying the stop") {
    params.gamma = 2;
    CandidateTable t = retrieve(fx.query, fx.bank, fx.g, params);
    // rules ra and rb both predict K1 (one distinct vector); rc adds K2
    CHECK(t.rules_applied == 3);
    REQUIRE(t.scores.size() == 2);
    EntityId k1 = *fx.g.vocabs().entities.find("K1");
    CHECK(t.scores.at(k1).size() == 2);
    CHECK(t.predictions == 3);
  }
  SUBCASE("no groundable rule leaves the table empty") {
    Query q = fx.query;
    q.subject = *fx.g.vocabs().entities.find("K2");  // nothing points at K2
    CandidateTable t = retrieve(q, fx.bank, fx.g, params);
    CHECK(t.empty());
    CHECK(t.rules_applied == 3);
  }
  SUBCASE("distinct-candidate counting is the flagged alternative") {
    params.gamma = 2;
    params.stop = ApplyParams::StopCount::distinct_candidates;
    CandidateTable t = retrieve(fx.query, fx.bank, fx.g, params);
    CHECK(t.rules_applied == 3);  // K1 repeats, K2 arrives with rule 3
  }
}

TEST_CASE("retrieve never touches facts at or after the query time") {
  MicroBank fx;
  ApplyParams params;
  params.window = 100;
  params.mode = Mode::tlogic;
  LeakProbe probe;
  CandidateTable t = retrieve(fx.query, fx.bank, fx.g, params, &probe);
  CHECK(!t.empty());
  CHECK(probe.accesses > 0);
  CHECK(probe.violations == 0);
}

TEST_CASE("every retrieved score lies in (0, 1]") {
  MicroBank fx;
  ApplyParams params;
  params.mode = Mode::tlogic;
  CandidateTable t = retrieve(fx.query, fx.bank, fx.g, params);
  REQUIRE(!t.empty());
  for (const auto& [cand, scores] : t.scores) {
    for (double s : scores) {
      CHECK(s > 0.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_SUITE_END();
