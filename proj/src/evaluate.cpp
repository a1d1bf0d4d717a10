#include "evaluate.h"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "parallel.h"

namespace tkgr {

std::vector<Query> make_queries(const TemporalGraph& test, Direction direction) {
  const int32_t nb = test.num_base_relations();
  std::map<std::tuple<EntityId, RelationId, Time>, std::set<EntityId>> grouped;
  for (size_t i = 0; i < test.num_facts(); ++i) {
    const Fact& f = test.fact(static_cast<FactId>(i));
    bool is_object_query = f.relation < nb;
    if (direction == Direction::object && !is_object_query) continue;
    if (direction == Direction::subject && is_object_query) continue;
    grouped[{f.subject, f.relation, f.t}].insert(f.object);
  }
  std::vector<Query> queries;
  queries.reserve(grouped.size());
  for (const auto& [key, truth] : grouped) {
    Query q;
    q.subject = std::get<0>(key);
    q.relation = std::get<1>(key);
    q.t = std::get<2>(key);
    q.subject_cat = test.category_of(q.subject);
    q.truth.assign(truth.begin(), truth.end());
    queries.push_back(std::move(q));
  }
  return queries;
}

int32_t rank_of_truth(const Ranking& ranking, const std::vector<EntityId>& truth, int32_t candidate_space) {
  if (truth.empty()) throw std::invalid_argument("rank_of_truth: empty truth set");
  std::set<EntityId> wanted(truth.begin(), truth.end());
  for (size_t i = 0; i < ranking.size(); ++i) {
    if (wanted.count(ranking[i].id)) return static_cast<int32_t>(i) + 1;
  }
  return candidate_space;
}

namespace {

template <typename Id>
std::vector<Id> frequency_ranking(const std::map<Id, int64_t>& counts, int32_t complete_to) {
  std::vector<std::pair<Id, int64_t>> items(counts.begin(), counts.end());
  if (complete_to > 0) {
    for (Id id = 0; id < complete_to; ++id) {
      if (!counts.count(id)) items.emplace_back(id, 0);
    }
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<Id> out;
  out.reserve(items.size());
  for (const auto& [id, count] : items) out.push_back(id);
  return out;
}

Ranking to_ranking(const std::vector<EntityId>& ordered) {
  Ranking r;
  r.reserve(ordered.size());
  for (size_t i = 0; i < ordered.size(); ++i) r.push_back({ordered[i], 0.0, 0});
  return r;
}

}  // namespace

BaselineModel::BaselineModel(const TemporalGraph& train) {
  const int32_t num_relations = train.num_relations();
  std::vector<std::map<EntityId, int64_t>> obj_counts(static_cast<size_t>(num_relations));
  std::vector<std::map<CategoryId, int64_t>> cat_counts(static_cast<size_t>(num_relations));
  std::map<EntityId, int64_t> global_obj;
  std::map<CategoryId, int64_t> global_cat;
  for (size_t i = 0; i < train.num_facts(); ++i) {
    const Fact& f = train.fact(static_cast<FactId>(i));
    ++obj_counts[static_cast<size_t>(f.relation)][f.object];
    ++cat_counts[static_cast<size_t>(f.relation)][f.object_cat];
    ++global_obj[f.object];
    ++global_cat[f.object_cat];
  }
  per_relation_.resize(static_cast<size_t>(num_relations));
  per_relation_cat_.resize(static_cast<size_t>(num_relations));
  for (int32_t r = 0; r < num_relations; ++r) {
    per_relation_[static_cast<size_t>(r)] = frequency_ranking(obj_counts[static_cast<size_t>(r)], 0);
    per_relation_cat_[static_cast<size_t>(r)] =
        frequency_ranking(cat_counts[static_cast<size_t>(r)], train.num_categories());
  }
  global_ = frequency_ranking(global_obj, 0);
  global_cat_ = frequency_ranking(global_cat, train.num_categories());
}

const std::vector<EntityId>& BaselineModel::entity_ranking(RelationId r) const {
  if (r >= 0 && static_cast<size_t>(r) < per_relation_.size() && !per_relation_[static_cast<size_t>(r)].empty()) {
    return per_relation_[static_cast<size_t>(r)];
  }
  return global_;
}

const std::vector<CategoryId>& BaselineModel::category_ranking(RelationId r) const {
  // A completed ranking is never empty; fall back on out-of-range ids only.
  if (r >= 0 && static_cast<size_t>(r) < per_relation_cat_.size()) {
    const auto& ranking = per_relation_cat_[static_cast<size_t>(r)];
    if (!ranking.empty()) return ranking;
  }
  return global_cat_;
}

EvalReport evaluate(const TemporalGraph& history, const RuleBank& bank, const TemporalGraph& test,
                    const ApplyParams& params, Task task, Aggregation aggregation, const BaselineModel& baseline,
                    Direction direction, int workers, LeakProbe* probe) {
  if (history.vocabs_ptr() != test.vocabs_ptr()) {
    throw std::invalid_argument("evaluate: history and test splits do not share vocabularies");
  }
  const std::vector<CategoryId>& entity_category = history.vocabs().entity_category;
  const int32_t entity_space = history.num_entities();
  const int32_t category_space = history.num_categories();

  std::vector<Query> queries = make_queries(test, direction);
  EvalReport report;
  report.task = task;
  report.aggregation = aggregation;
  report.walks = bank.meta().num_walks;
  report.query_count = static_cast<int64_t>(queries.size());
  report.per_query.resize(queries.size());
  std::vector<LeakProbe> probes(probe ? queries.size() : 0);

  parallel_for(queries.size(), workers, [&](size_t qi) {
    const Query& q = queries[qi];
    QueryLog& log = report.per_query[qi];
    log.query = q;
    CandidateTable table = retrieve(q, bank, history, params, probe ? &probes[qi] : nullptr);
    log.rules_applied = table.rules_applied;
    log.predictions = table.predictions;

    std::vector<EntityId> truth;
    if (task == Task::entity) {
      truth = q.truth;
    } else {
      std::set<CategoryId> cats;
      for (EntityId e : q.truth) cats.insert(entity_category[static_cast<size_t>(e)]);
      truth.assign(cats.begin(), cats.end());
    }
    const int32_t space = task == Task::entity ? entity_space : category_space;

    Ranking ranking;
    if (table.empty()) {
      log.nc = true;
      ranking = to_ranking(task == Task::entity ? baseline.entity_ranking(q.relation)
                                                : baseline.category_ranking(q.relation));
    } else {
      const CandidateTable& final_table = table;
      if (task == Task::category) {
        CandidateTable cat_table = to_categories(table, entity_category);
        ranking = aggregation == Aggregation::noisy_or ? noisy_or(cat_table) : max_plus(cat_table);
      } else {
        ranking = aggregation == Aggregation::noisy_or ? noisy_or(final_table) : max_plus(final_table);
      }
    }
    log.rank = rank_of_truth(ranking, truth, space);
  });

  int64_t nc_count = 0;
  double mrr_sum = 0.0;
  int64_t h1 = 0, h3 = 0, h10 = 0;
  for (const QueryLog& log : report.per_query) {
    if (log.nc) ++nc_count;
    mrr_sum += 1.0 / static_cast<double>(log.rank);
    if (log.rank <= 1) ++h1;
    if (log.rank <= 3) ++h3;
    if (log.rank <= 10) ++h10;
  }
  if (!queries.empty()) {
    const double n = static_cast<double>(queries.size());
    report.mrr = mrr_sum / n;
    report.hits1 = static_cast<double>(h1) / n;
    report.hits3 = static_cast<double>(h3) / n;
    report.hits10 = static_cast<double>(h10) / n;
    report.nc_ratio = static_cast<double>(nc_count) / n;
  }
  if (probe) {
    for (const LeakProbe& p : probes) {
      probe->accesses += p.accesses;
      probe->violations += p.violations;
    }
  }
  return report;
}

}  // namespace tkgr
