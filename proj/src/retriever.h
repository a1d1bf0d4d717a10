#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "graph.h"
#include "rule.h"
#include "types.h"

namespace tkgr {

struct ApplyParams {
  Time window = 100;      // w
  double alpha = 0.5;     // confidence vs. time-decay weight
  double lambda = 0.1;    // decay rate
  int32_t gamma = 30;     // stopping threshold
  Mode mode = Mode::tlogic;
  // How candidates are counted against gamma: the number of distinct
  // descending-sorted score vectors (literal reading) or the number of
  // distinct candidates.
  enum class StopCount { distinct_score_vectors, distinct_candidates };
  StopCount stop = StopCount::distinct_score_vectors;
};

// Scores produced for one query. Each candidate's list holds at most one
// score per applied rule (the tau-maximizing grounding of that rule).
struct CandidateTable {
  std::map<EntityId, std::vector<double>> scores;
  int64_t rules_applied = 0;
  int64_t predictions = 0;  // (rule, candidate) contributions
  bool empty() const { return scores.empty(); }
};

// Rules matching a query: in ctlogic mode the (head relation, subject
// category) group, in tlogic mode every rule with the head relation.
// Ordered by descending confidence (deterministic tie-breaks).
std::vector<const Rule*> select_rules(const RuleBank& bank, RelationId relation, CategoryId subject_cat, Mode mode);

// Eq-style candidate score: alpha * conf + (1 - alpha) * exp(-lambda * (t_q - tau)).
double score(double confidence, Time tau, Time t_q, double alpha, double lambda);

// Memoized (entity, relation, min time) -> admissible fact lists, shared
// across the rules applied to one query.
using GroundingMemo = std::unordered_map<uint64_t, std::vector<FactId>>;

// All body groundings of `rule` within the view whose head-subject
// placeholder binds the query subject. Returns candidate (the entity at
// the head-object placeholder, i.e. the latest body fact's subject) ->
// latest earliest-fact timestamp tau over that candidate's groundings.
std::map<EntityId, Time> ground_rule(const Rule& rule, const Query& query, const WindowView& view,
                                     GroundingMemo* memo = nullptr);

// Applies matching rules in confidence order over the window
// [t_q - w, t_q) of `history`, stopping once gamma candidates (per
// params.stop) are collected. An empty table means no candidate (N.C.).
CandidateTable retrieve(const Query& query, const RuleBank& bank, const TemporalGraph& history,
                        const ApplyParams& params, LeakProbe* probe = nullptr);

}  // namespace tkgr
