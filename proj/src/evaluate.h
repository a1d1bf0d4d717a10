#pragma once

#include <cstdint>
#include <vector>

#include "aggregate.h"
#include "graph.h"
#include "retriever.h"
#include "rule.h"
#include "types.h"

namespace tkgr {

// One query per distinct (subject, relation, timestamp) key in the test
// split; the truth set holds every object seen under that key. Object
// queries come from base-relation facts, subject queries from the
// inverse-relation facts. Deterministic (key-sorted) order.
std::vector<Query> make_queries(const TemporalGraph& test, Direction direction);

// 1-based position of the best-ranked truth member; candidate_space
// (the worst rank) when no truth member appears in the ranking.
int32_t rank_of_truth(const Ranking& ranking, const std::vector<EntityId>& truth, int32_t candidate_space);

// Object-frequency rankings over the training split, used when retrieval
// produces no candidates. Per-relation rankings cover the objects seen
// with that relation (global frequency fallback for unseen relations);
// category rankings are completed over all categories.
class BaselineModel {
 public:
  explicit BaselineModel(const TemporalGraph& train);
  const std::vector<EntityId>& entity_ranking(RelationId r) const;
  const std::vector<CategoryId>& category_ranking(RelationId r) const;

 private:
  std::vector<std::vector<EntityId>> per_relation_;
  std::vector<EntityId> global_;
  std::vector<std::vector<CategoryId>> per_relation_cat_;
  std::vector<CategoryId> global_cat_;
};

struct QueryLog {
  Query query;
  bool nc = false;
  int32_t rank = 0;
  int64_t rules_applied = 0;
  int64_t predictions = 0;
};

struct EvalReport {
  Task task = Task::entity;
  Aggregation aggregation = Aggregation::noisy_or;
  int32_t walks = 0;  // n the bank was trained with
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  double nc_ratio = 0.0;
  int64_t query_count = 0;
  std::vector<QueryLog> per_query;
};

// Runs retrieval + aggregation for every test query, falling back to the
// baseline ranking when no candidates exist (counted in nc_ratio).
// history must share vocabularies with test. When a probe is supplied
// the per-query access counts are accumulated into it.
EvalReport evaluate(const TemporalGraph& history, const RuleBank& bank, const TemporalGraph& test,
                    const ApplyParams& params, Task task, Aggregation aggregation, const BaselineModel& baseline,
                    Direction direction = Direction::both, int workers = 1, LeakProbe* probe = nullptr);

}  // namespace tkgr
