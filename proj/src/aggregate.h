#pragma once

#include <cstdint>
#include <vector>

#include "retriever.h"
#include "types.h"

namespace tkgr {

struct RankedCandidate {
  EntityId id = -1;        // entity or category id depending on the task
  double final_score = 0.0;
  int64_t prediction_count = 0;
};

// Rank position i+1 holds ranking[i].
using Ranking = std::vector<RankedCandidate>;

// Noisy-OR aggregation: final = 1 - prod(1 - s), computed in log space;
// scores of exactly 1 are clamped to 1 - 1e-12 so the prediction-count
// tie-break stays meaningful. Order: final desc, count desc, id asc.
Ranking noisy_or(const CandidateTable& table);

// Max+ aggregation: candidates ordered lexicographically by their
// descending-sorted score vectors; a vector that is a strict prefix of
// another ranks below it. Reported final score is the top score.
Ranking max_plus(const CandidateTable& table);

// Collapses an entity-level table to a category-level table by
// concatenating the score lists of entities sharing a category.
CandidateTable to_categories(const CandidateTable& table, const std::vector<CategoryId>& entity_category);

}  // namespace tkgr
