#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.h"
#include "learner.h"
#include "oracles.h"

using namespace tkgr;
using tkgr::test::GraphBuilder;
using tkgr::test::find_fact;

namespace {

// Three-fact cycle used throughout: head (C,r3,A,3), body (A,r2,B,2),
// (B,r1,C,1).
TemporalGraph cycle_graph() {
  return GraphBuilder().fact("C", "r3", "A", 3).fact("A", "r2", "B", 2).fact("B", "r1", "C", 1).build();
}

Walk walk_of(std::initializer_list<FactId> ids) {
  Walk w;
  w.facts.assign(ids.begin(), ids.end());
  return w;
}

}  // namespace

TEST_SUITE_BEGIN("learner");

TEST_CASE("transition probabilities") {
  SUBCASE("frozen two-candidate softmax") {
    auto p = transition_probabilities({5, 4}, 5);  // deltas 0, -1
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
    CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-12);
  }
  SUBCASE("equal deltas are uniform") {
    auto p = transition_probabilities({0, 0, 0}, 5);
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("single candidate") {
    auto p = transition_probabilities({3}, 9);
    REQUIRE(p.size() == 1);
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("empty throws") {
    CHECK_THROWS_AS(transition_probabilities({}, 0), std::invalid_argument);
  }
  SUBCASE("invariant under a uniform time shift") {
    std::vector<Time> times{2, 7, 7, 3};
    auto base = transition_probabilities(times, 8);
    for (Time shift : {-100, -1, 5, 1000}) {
      std::vector<Time> shifted;
      for (Time t : times) shifted.push_back(t + shift);
      auto moved = transition_probabilities(shifted, 8 + shift);
      for (size_t i = 0; i < base.size(); ++i) CHECK(moved[i] == doctest::Approx(base[i]).epsilon(1e-15));
    }
  }
  SUBCASE("large gaps stay finite via the max shift") {
    auto p = transition_probabilities({-2000, 0}, 0);
    CHECK(std::isfinite(p[0]));
    CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sample_walk on the three-fact cycle") {
  TemporalGraph g = cycle_graph();
  RelationId r3 = *g.vocabs().relations.find("r3");
  Rng rng(1);

  auto res = sample_walk(g, r3, 2, std::nullopt, rng);
  REQUIRE(res.status == WalkStatus::ok);
  REQUIRE(res.walk.facts.size() == 3);
  CHECK(res.walk.facts[0] == find_fact(g, "C", "r3", "A", 3));
  CHECK(res.walk.facts[1] == find_fact(g, "A", "r2", "B", 2));
  CHECK(res.walk.facts[2] == find_fact(g, "B", "r1", "C", 1));

  // exhaustive enumeration agrees that this is the only length-2 walk
  auto walks = tkgr::test::enumerate_walks(g, r3, 2, std::nullopt);
  REQUIRE(walks.size() == 1);
  CHECK(walks[0] == res.walk.facts);
}

TEST_CASE("length-1 walk must chain and close the cycle") {
  TemporalGraph g = GraphBuilder().fact("A", "r", "B", 2).fact("B", "q", "A", 1).build();
  RelationId r = *g.vocabs().relations.find("r");
  Rng rng(3);
  auto res = sample_walk(g, r, 1, std::nullopt, rng);
  REQUIRE(res.status == WalkStatus::ok);
  CHECK(res.walk.facts[0] == find_fact(g, "A", "r", "B", 2));
  CHECK(res.walk.facts[1] == find_fact(g, "B", "q", "A", 1));

  auto walks = tkgr::test::enumerate_walks(g, r, 1, std::nullopt);
  REQUIRE(walks.size() == 1);
  CHECK(walks[0] == res.walk.facts);
}

TEST_CASE("walk outcomes: dead end and unsampleable") {
  TemporalGraph g = GraphBuilder().fact("A", "r", "B", 2, "X", "Y").build();
  RelationId r = *g.vocabs().relations.find("r");
  Rng rng(5);
  CHECK(sample_walk(g, r, 1, std::nullopt, rng).status == WalkStatus::dead_end);

  CategoryId y = *g.vocabs().categories.find("Y");
  // no fact with relation r has subject category Y
  CHECK(sample_walk(g, r, 1, y, rng).status == WalkStatus::unsampleable);
}

TEST_CASE("sampled walk support equals the enumerated walk set") {
  // Small dense graph with tight timestamps so every admissible walk has
  // non-negligible probability.
  TemporalGraph g = GraphBuilder()
                        .fact("A", "r", "B", 1)
                        .fact("B", "r", "C", 1)
                        .fact("C", "r", "A", 1)
                        .fact("B", "q", "A", 0)
                        .fact("C", "q", "B", 0)
                        .fact("A", "q", "C", 0)
                        .fact("C", "r", "B", 0)
                        .build();
  for (const std::string& rel : {std::string("r"), std::string("q")}) {
    RelationId rid = *g.vocabs().relations.find(rel);
    for (int32_t b = 1; b <= 2; ++b) {
      auto expected_list = tkgr::test::enumerate_walks(g, rid, b, std::nullopt);
      std::set<std::vector<FactId>> expected(expected_list.begin(), expected_list.end());
      std::set<std::vector<FactId>> seen;
      Rng rng(42);
      for (int i = 0; i < 5000; ++i) {
        auto res = sample_walk(g, rid, b, std::nullopt, rng);
        if (res.status == WalkStatus::ok) seen.insert(res.walk.facts);
      }
      CHECK(seen == expected);
    }
  }
}

TEST_CASE("abstract_rule assigns placeholders in first-occurrence order") {
  TemporalGraph g = cycle_graph();
  Walk w = walk_of({find_fact(g, "C", "r3", "A", 3), find_fact(g, "A", "r2", "B", 2),
                    find_fact(g, "B", "r1", "C", 1)});
  Rule rule = abstract_rule(g, w, Mode::tlogic);

  CHECK(rule.length == 2);
  CHECK(rule.head_subject_ph == 0);  // C
  CHECK(rule.head_object_ph == 1);   // A
  CHECK(rule.body_subject_ph == std::vector<int32_t>{1, 2});
  CHECK(rule.body_object_ph == std::vector<int32_t>{2, 0});
  CHECK(rule.body_relations[0] == *g.vocabs().relations.find("r2"));
  CHECK(rule.body_relations[1] == *g.vocabs().relations.find("r1"));
  CHECK(rule.confidence == 0.0);
  CHECK(rule.head_subject_cat == kAnyCategory);

  Rule ct = abstract_rule(g, w, Mode::ctlogic);
  CHECK(ct.head_subject_cat == g.fact(w.facts[0]).subject_cat);
  CHECK(ct.body_subject_cat.size() == 2);
}

TEST_CASE("recurring entities share a placeholder") {
  TemporalGraph g = GraphBuilder()
                        .fact("C", "r3", "A", 3)
                        .fact("A", "r2", "C", 2)
                        .fact("C", "r1", "C", 1)
                        .build();
  Walk w = walk_of({find_fact(g, "C", "r3", "A", 3), find_fact(g, "A", "r2", "C", 2),
                    find_fact(g, "C", "r1", "C", 1)});
  Rule rule = abstract_rule(g, w, Mode::tlogic);
  CHECK(rule.head_subject_ph == 0);
  CHECK(rule.body_object_ph == std::vector<int32_t>{0, 0});  // C reappears
  CHECK(rule.body_subject_ph == std::vector<int32_t>{1, 0});
  CHECK(rule.num_placeholders() == 2);
}

TEST_CASE("same relations with different recurrence patterns are distinct rules") {
  TemporalGraph g1 = cycle_graph();
  Rule plain = abstract_rule(g1,
                             walk_of({find_fact(g1, "C", "r3", "A", 3), find_fact(g1, "A", "r2", "B", 2),
                                      find_fact(g1, "B", "r1", "C", 1)}),
                             Mode::tlogic);
  TemporalGraph g2 = GraphBuilder()
                         .fact("C", "r3", "A", 3)
                         .fact("A", "r2", "C", 2)
                         .fact("C", "r1", "C", 1)
                         .build();
  Rule recurring = abstract_rule(g2,
                                 walk_of({find_fact(g2, "C", "r3", "A", 3), find_fact(g2, "A", "r2", "C", 2),
                                          find_fact(g2, "C", "r1", "C", 1)}),
                                 Mode::tlogic);
  CHECK(plain.body_relations == recurring.body_relations);
  CHECK(!plain.same_pattern(recurring));
}

namespace {

// Four groundings of the b=1 rule head (X0, rh, X1) :- (X1, r1, X0);
// `completed` of them are followed by a matching head fact.
TemporalGraph four_grounding_graph(int completed) {
  GraphBuilder b;
  for (int i = 1; i <= 4; ++i) {
    b.fact("B" + std::to_string(i), "r1", "C" + std::to_string(i), 1);
  }
  for (int i = 1; i <= completed; ++i) {
    b.fact("C" + std::to_string(i), "rh", "B" + std::to_string(i), 2);
  }
  return b.build();
}

Rule rule_from_instance(const TemporalGraph& g) {
  Walk w = walk_of({find_fact(g, "C1", "rh", "B1", 2), find_fact(g, "B1", "r1", "C1", 1)});
  return abstract_rule(g, w, Mode::tlogic);
}

}  // namespace

TEST_CASE("confidence: exhaustive enumeration matches the naive oracle exactly") {
  TemporalGraph g = four_grounding_graph(2);
  Rule rule = rule_from_instance(g);
  Rng rng(0);
  auto est = estimate_confidence(rule, g, 0, rng);
  CHECK(est.confidence == 0.5);
  CHECK(est.body_support == 4);
  auto [oracle_conf, oracle_support] = tkgr::test::confidence_naive(rule, g);
  CHECK(est.confidence == oracle_conf);
  CHECK(est.body_support == oracle_support);
}

TEST_CASE("confidence: sampling with generous budget finds every grounding") {
  TemporalGraph g = four_grounding_graph(2);
  Rule rule = rule_from_instance(g);
  Rng rng(11);
  auto est = estimate_confidence(rule, g, 500, rng);
  CHECK(est.confidence == 0.5);
  CHECK(est.body_support == 4);
}

TEST_CASE("confidence: unmatchable body and fully completed body") {
  SUBCASE("no fact matches a self-loop body") {
    TemporalGraph g = four_grounding_graph(2);
    Rule rule;
    rule.mode = Mode::tlogic;
    rule.length = 1;
    rule.head_relation = *g.vocabs().relations.find("rh");
    rule.head_subject_ph = 0;
    rule.head_object_ph = 0;
    rule.body_relations = {*g.vocabs().relations.find("r1")};
    rule.body_subject_ph = {0};
    rule.body_object_ph = {0};
    rule.body_subject_cat = {kAnyCategory};
    rule.body_object_cat = {kAnyCategory};
    rule.validate();
    Rng rng(0);
    auto est = estimate_confidence(rule, g, 0, rng);
    CHECK(est.confidence == 0.0);
    CHECK(est.body_support == 0);
  }
  SUBCASE("every grounding head-completed gives confidence 1") {
    TemporalGraph g = four_grounding_graph(4);
    Rule rule = rule_from_instance(g);
    Rng rng(0);
    auto est = estimate_confidence(rule, g, 0, rng);
    CHECK(est.confidence == 1.0);
    CHECK(est.body_support == 4);
  }
}

TEST_CASE("confidence: exhaustive mode equals the oracle on random graphs") {
  Rng gen(99);
  int tested = 0;
  for (int trial = 0; trial < 12; ++trial) {
    GraphBuilder b;
    int n_entities = 4 + static_cast<int>(gen.bounded(4));
    int n_facts = 10 + static_cast<int>(gen.bounded(20));
    for (int i = 0; i < n_facts; ++i) {
      std::string s = "e" + std::to_string(gen.bounded(static_cast<size_t>(n_entities)));
      std::string o = "e" + std::to_string(gen.bounded(static_cast<size_t>(n_entities)));
      std::string r = "r" + std::to_string(gen.bounded(3));
      b.fact(s, r, o, static_cast<int64_t>(gen.bounded(6)));
    }
    TemporalGraph g = b.build();
    for (int attempt = 0; attempt < 10; ++attempt) {
      RelationId rel = static_cast<RelationId>(gen.bounded(static_cast<size_t>(g.num_relations())));
      int32_t len = 1 + static_cast<int32_t>(gen.bounded(2));
      Rng walk_rng(gen.next_u64());
      auto res = sample_walk(g, rel, len, std::nullopt, walk_rng);
      if (res.status != WalkStatus::ok) continue;
      Rule rule = abstract_rule(g, res.walk, Mode::tlogic);
      Rng est_rng(7);
      auto est = estimate_confidence(rule, g, 0, est_rng);
      auto [oracle_conf, oracle_support] = tkgr::test::confidence_naive(rule, g);
      CHECK(est.confidence == oracle_conf);
      CHECK(est.body_support == oracle_support);
      ++tested;
    }
  }
  CHECK(tested > 20);
}

TEST_CASE("learn: ctlogic budget is ceil(n/|C|) + 1 per work item") {
  GraphBuilder b;
  for (int i = 0; i < 12; ++i) {
    b.fact("e" + std::to_string(i), "r", "e" + std::to_string((i + 1) % 12), i, "c" + std::to_string(i),
           "c" + std::to_string((i + 1) % 12));
  }
  TemporalGraph g = b.build();
  REQUIRE(g.num_categories() == 12);

  LearnParams params;
  params.mode = Mode::ctlogic;
  params.num_walks = 13;
  params.max_rule_length = 2;
  params.confidence_samples = 5;
  LearnStats stats;
  learn(g, params, &stats);
  REQUIRE(stats.items.size() == static_cast<size_t>(g.num_relations() * 2 * 12));
  for (const auto& item : stats.items) {
    CHECK(item.walks_attempted == 3);  // ceil(13/12) + 1
  }

  SUBCASE("n must exceed the category count") {
    params.num_walks = 12;
    CHECK_THROWS_AS(learn(g, params), ConfigError);
  }
}

TEST_CASE("learn: tlogic budget is n per (relation, length) item") {
  TemporalGraph g = cycle_graph();
  LearnParams params;
  params.num_walks = 7;
  params.max_rule_length = 2;
  params.confidence_samples = 0;
  LearnStats stats;
  learn(g, params, &stats);
  REQUIRE(stats.items.size() == static_cast<size_t>(g.num_relations() * 2));
  for (const auto& item : stats.items) CHECK(item.walks_attempted == 7);
}

TEST_CASE("learn: planted always-completed pattern is recovered with confidence 1") {
  GraphBuilder b;
  for (int i = 0; i < 10; ++i) {
    std::string A = "A" + std::to_string(i), B = "B" + std::to_string(i), C = "C" + std::to_string(i);
    b.fact(B, "r1", C, 3 * i);
    b.fact(A, "r2", B, 3 * i + 1);
    b.fact(C, "rh", A, 3 * i + 2);
  }
  TemporalGraph g = b.build();
  LearnParams params;
  params.num_walks = 30;
  params.max_rule_length = 2;
  params.confidence_samples = 0;
  params.seed = 5;
  RuleBank bank = learn(g, params);

  RelationId rh = *g.vocabs().relations.find("rh");
  auto rules = bank.rules_for_relation(rh);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0]->length == 2);
  CHECK(rules[0]->confidence == 1.0);
  CHECK(rules[0]->body_support == 10);
}

TEST_CASE("learn: single-fact graph yields an empty bank") {
  TemporalGraph g = GraphBuilder().fact("A", "r", "B", 0).build();
  LearnParams params;
  params.num_walks = 5;
  params.max_rule_length = 2;
  RuleBank bank = learn(g, params);
  CHECK(bank.size() == 0);
}

TEST_CASE("learn is deterministic across runs and worker counts") {
  GraphBuilder b;
  for (int i = 0; i < 8; ++i) {
    b.fact("x" + std::to_string(i), "r" + std::to_string(i % 2), "x" + std::to_string((i + 3) % 8), i % 4);
  }
  TemporalGraph g = b.build();
  LearnParams params;
  params.num_walks = 20;
  params.max_rule_length = 3;
  params.confidence_samples = 50;
  params.seed = 123;

  auto snapshot = [](const RuleBank& bank) {
    std::vector<std::tuple<uint64_t, double, int64_t>> rows;
    for (const Rule* r : bank.all_rules()) rows.emplace_back(r->pattern_hash(), r->confidence, r->body_support);
    return rows;
  };
  RuleBank b1 = learn(g, params);
  RuleBank b2 = learn(g, params);
  params.workers = 4;
  RuleBank b4 = learn(g, params);
  CHECK(snapshot(b1) == snapshot(b2));
  CHECK(snapshot(b1) == snapshot(b4));
}

TEST_CASE("every kept rule is groundable at least twice (oracle re-check)") {
  GraphBuilder b;
  Rng gen(4242);
  for (int i = 0; i < 30; ++i) {
    b.fact("e" + std::to_string(gen.bounded(6)), "r" + std::to_string(gen.bounded(2)),
           "e" + std::to_string(gen.bounded(6)), static_cast<int64_t>(gen.bounded(5)));
  }
  TemporalGraph g = b.build();
  LearnParams params;
  params.num_walks = 25;
  params.max_rule_length = 2;
  params.confidence_samples = 0;
  RuleBank bank = learn(g, params);
  for (const Rule* rule : bank.all_rules()) {
    auto groundings = tkgr::test::enumerate_groundings_naive(*rule, g, tkgr::test::all_fact_ids(g));
    CHECK(groundings.size() >= 2);
    CHECK(rule->confidence > 0.01);
  }
}

TEST_SUITE_END();
