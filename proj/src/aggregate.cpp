#include "aggregate.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tkgr {

namespace {

constexpr double kScoreCeiling = 1.0 - 1e-12;

void require_non_empty(const CandidateTable& table, const char* op) {
  if (table.empty()) throw std::invalid_argument(std::string(op) + ": candidate table is empty");
}

}  // namespace

Ranking noisy_or(const CandidateTable& table) {
  require_non_empty(table, "noisy_or");
  Ranking ranking;
  ranking.reserve(table.scores.size());
  for (const auto& [cand, scores] : table.scores) {
    double log_fail = 0.0;
    for (double s : scores) log_fail += std::log1p(-std::min(s, kScoreCeiling));
    ranking.push_back({cand, -std::expm1(log_fail), static_cast<int64_t>(scores.size())});
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    if (a.prediction_count != b.prediction_count) return a.prediction_count > b.prediction_count;
    return a.id < b.id;
  });
  return ranking;
}

Ranking max_plus(const CandidateTable& table) {
  require_non_empty(table, "max_plus");
  std::vector<std::pair<EntityId, std::vector<double>>> sorted;
  sorted.reserve(table.scores.size());
  for (const auto& [cand, scores] : table.scores) {
    std::vector<double> desc(scores);
    std::sort(desc.begin(), desc.end(), std::greater<>());
    sorted.emplace_back(cand, std::move(desc));
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    size_t n = std::min(a.second.size(), b.second.size());
    for (size_t i = 0; i < n; ++i) {
      if (a.second[i] != b.second[i]) return a.second[i] > b.second[i];
    }
    if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
    return a.first < b.first;
  });
  Ranking ranking;
  ranking.reserve(sorted.size());
  for (auto& [cand, desc] : sorted) {
    ranking.push_back({cand, desc.front(), static_cast<int64_t>(desc.size())});
  }
  return ranking;
}

CandidateTable to_categories(const CandidateTable& table, const std::vector<CategoryId>& entity_category) {
  CandidateTable out;
  out.rules_applied = table.rules_applied;
  out.predictions = table.predictions;
  for (const auto& [cand, scores] : table.scores) {
    if (cand < 0 || static_cast<size_t>(cand) >= entity_category.size() || entity_category[cand] < 0) {
      throw std::invalid_argument("to_categories: candidate " + std::to_string(cand) + " has no category");
    }
    auto& list = out.scores[entity_category[static_cast<size_t>(cand)]];
    list.insert(list.end(), scores.begin(), scores.end());
  }
  return out;
}

}  // namespace tkgr
