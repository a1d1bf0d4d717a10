#include "retriever.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "grounding.h"
#include "rng.h"

namespace tkgr {

std::vector<const Rule*> select_rules(const RuleBank& bank, RelationId relation, CategoryId subject_cat, Mode mode) {
  if (mode == Mode::ctlogic) return bank.rules_for(relation, subject_cat);
  return bank.rules_for_relation(relation);
}

double score(double confidence, Time tau, Time t_q, double alpha, double lambda) {
  return alpha * confidence + (1.0 - alpha) * std::exp(-lambda * static_cast<double>(t_q - tau));
}

namespace {

uint64_t memo_key(EntityId e, RelationId r, Time min_t) {
  uint64_t h = hash_mix(0x9d312fca3e8b17c5ull, static_cast<uint64_t>(static_cast<uint32_t>(e)));
  h = hash_mix(h, static_cast<uint64_t>(static_cast<uint32_t>(r)));
  return hash_mix(h, static_cast<uint64_t>(static_cast<uint32_t>(min_t)));
}

const std::vector<FactId>& lookup_to(const WindowView& view, EntityId e, RelationId r, Time min_t,
                                     GroundingMemo* memo, std::vector<FactId>& scratch) {
  if (!memo) {
    scratch = view.facts_to(e, r, min_t);
    return scratch;
  }
  uint64_t key = memo_key(e, r, min_t);
  auto it = memo->find(key);
  if (it != memo->end()) return it->second;
  return memo->emplace(key, view.facts_to(e, r, min_t)).first->second;
}

struct GroundingSearch {
  const Rule& rule;
  const WindowView& view;
  GroundingMemo* memo;
  Binding binding;
  std::map<EntityId, Time>& out;

  void run(int32_t pos, Time t_prev, Time t_anchor) {
    size_t j = rule.walk_index(pos);
    EntityId from = binding.get(rule.body_object_ph[j]);
    Time min_t = pos == 0 ? view.lo() : t_prev;
    std::vector<FactId> scratch;
    const std::vector<FactId>& cands =
        lookup_to(view, from, rule.body_relations[j], min_t, memo, scratch);
    for (FactId id : cands) {
      const Fact& f = view.fact(id);
      size_t mark = binding.mark();
      if (!bind_fact(rule, pos, f, binding)) continue;
      Time anchor_t = pos == 0 ? f.t : t_anchor;
      if (pos + 1 == rule.length) {
        EntityId candidate = binding.get(rule.head_object_ph);
        auto [it, fresh] = out.try_emplace(candidate, anchor_t);
        if (!fresh && anchor_t > it->second) it->second = anchor_t;
      } else {
        run(pos + 1, f.t, anchor_t);
      }
      binding.rewind(mark);
    }
  }
};

bool stop_reached(const CandidateTable& table, const ApplyParams& params) {
  if (params.stop == ApplyParams::StopCount::distinct_candidates) {
    return static_cast<int64_t>(table.scores.size()) >= params.gamma;
  }
  std::set<std::vector<double>> distinct;
  for (const auto& [cand, scores] : table.scores) {
    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    distinct.insert(std::move(sorted));
    if (static_cast<int64_t>(distinct.size()) >= params.gamma) return true;
  }
  return static_cast<int64_t>(distinct.size()) >= params.gamma;
}

}  // namespace

std::map<EntityId, Time> ground_rule(const Rule& rule, const Query& query, const WindowView& view,
                                     GroundingMemo* memo) {
  std::map<EntityId, Time> out;
  Binding binding(rule.num_placeholders());
  binding.bind(rule.head_subject_ph, query.subject);
  GroundingSearch search{rule, view, memo, std::move(binding), out};
  search.run(0, 0, 0);
  return out;
}

CandidateTable retrieve(const Query& query, const RuleBank& bank, const TemporalGraph& history,
                        const ApplyParams& params, LeakProbe* probe) {
  CandidateTable table;
  std::vector<const Rule*> rules = select_rules(bank, query.relation, query.subject_cat, params.mode);
  if (rules.empty()) return table;
  if (probe) probe->t_q = query.t;
  WindowView view = history.window(query.t, params.window, probe);
  GroundingMemo memo;
  for (const Rule* rule : rules) {
    ++table.rules_applied;
    std::map<EntityId, Time> grounded = ground_rule(*rule, query, view, &memo);
    for (const auto& [candidate, tau] : grounded) {
      table.scores[candidate].push_back(score(rule->confidence, tau, query.t, params.alpha, params.lambda));
      ++table.predictions;
    }
    if (!grounded.empty() && stop_reached(table, params)) break;
  }
  return table;
}

}  // namespace tkgr
