#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "graph.h"
#include "rng.h"
#include "rule.h"
#include "types.h"

namespace tkgr {

struct LearnParams {
  int32_t num_walks = 200;        // n
  int32_t max_rule_length = 3;    // b_max
  int32_t confidence_samples = 500;  // sigma; 0 enumerates every grounding
  uint64_t seed = 0;
  Mode mode = Mode::tlogic;
  int32_t workers = 1;
};

// Facts in walk order: facts[0] is the head, facts[1] the latest body
// fact (sequence position b), facts[b] the earliest (sequence position 1).
struct Walk {
  std::vector<FactId> facts;
};

enum class WalkStatus { ok, dead_end, unsampleable };

struct WalkResult {
  WalkStatus status = WalkStatus::dead_end;
  Walk walk;
};

// Softmax of (t_v - t_u) over the candidate timestamps, computed with a
// max shift. Sums to 1 within 1e-12.
std::vector<double> transition_probabilities(const std::vector<Time>& candidate_times, Time t_u);

// One reverse-chronological random walk of the given length starting from
// a uniformly drawn head fact with this relation (and, when given, this
// head subject category). The first step back is strictly earlier than
// the head, later steps are non-strict, each step excludes the inverse of
// the fact it leaves, and the final step only considers facts whose
// object closes the cycle on the head subject. Returns dead_end when some
// step has no candidates and unsampleable when no head fact exists.
WalkResult sample_walk(const TemporalGraph& g, RelationId head_relation, int32_t length,
                       std::optional<CategoryId> head_category, Rng& rng);

// Replaces walk entities by placeholder indices assigned in
// first-occurrence order (head subject, head object, then body facts in
// walk order). Confidence is left unset.
Rule abstract_rule(const TemporalGraph& g, const Walk& walk, Mode mode);

struct ConfidenceEstimate {
  double confidence = 0.0;
  int64_t body_support = 0;
};

// Estimates rule confidence by body-grounding samples: each sample draws
// a uniform anchor fact for the earliest body position and extends
// step-by-step with uniform choices among admissible facts. body_support
// counts distinct successful groundings; confidence is the fraction of
// them followed by a matching head fact strictly after the latest body
// timestamp. samples == 0 switches to exhaustive enumeration of all
// groundings (exact; intended for small graphs).
ConfidenceEstimate estimate_confidence(const Rule& rule, const TemporalGraph& g, int32_t samples, Rng& rng);

struct WorkItemStats {
  RelationId relation = -1;
  int32_t length = 0;
  CategoryId category = kAnyCategory;
  int64_t walks_attempted = 0;
  int64_t rules_kept = 0;
};

struct LearnStats {
  std::vector<WorkItemStats> items;
  std::map<int32_t, int64_t> rules_per_length;
  std::map<int64_t, int64_t> support_histogram;
  int64_t rules_total = 0;
};

// Mines rules over every relation (base and inverse), every length in
// [1, b_max] and, in ctlogic mode, every head subject category. In
// ctlogic mode each (relation, length, category) work item runs exactly
// ceil(n/|C|) + 1 walk attempts (requires n > |C|); in tlogic mode each
// (relation, length) item runs n attempts. Rules with confidence > 0.01
// and body support >= 2 are kept; duplicates keep the first estimate.
// Deterministic for a fixed seed regardless of worker count: each work
// item owns a generator seeded from (seed, relation, length, category).
RuleBank learn(const TemporalGraph& g, const LearnParams& params, LearnStats* stats = nullptr);

}  // namespace tkgr
