#include "learner.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "grounding.h"
#include "parallel.h"

namespace tkgr {

std::vector<double> transition_probabilities(const std::vector<Time>& candidate_times, Time t_u) {
  if (candidate_times.empty()) throw std::invalid_argument("transition_probabilities: no candidates");
  Time max_t = *std::max_element(candidate_times.begin(), candidate_times.end());
  std::vector<double> probs(candidate_times.size());
  double sum = 0.0;
  for (size_t i = 0; i < candidate_times.size(); ++i) {
    probs[i] = std::exp(static_cast<double>(candidate_times[i] - max_t));
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

WalkResult sample_walk(const TemporalGraph& g, RelationId head_relation, int32_t length,
                       std::optional<CategoryId> head_category, Rng& rng) {
  std::span<const FactId> pool = head_category ? g.facts_with_relation(head_relation, *head_category)
                                               : g.facts_with_relation(head_relation);
  if (pool.empty()) return {WalkStatus::unsampleable, {}};

  WalkResult result;
  result.walk.facts.reserve(static_cast<size_t>(length) + 1);
  FactId current = pool[rng.bounded(pool.size())];
  result.walk.facts.push_back(current);
  const EntityId head_subject = g.fact(current).subject;

  for (int32_t m = length; m >= 1; --m) {
    const Fact& u = g.fact(current);
    bool strict = (m == length);
    std::vector<FactId> cands = g.candidate_facts(u.object, u.t, strict, g.inverse_fact(current));
    if (m == 1) {
      std::erase_if(cands, [&](FactId id) { return g.fact(id).object != head_subject; });
    }
    if (cands.empty()) return {WalkStatus::dead_end, {}};
    std::vector<Time> times(cands.size());
    for (size_t i = 0; i < cands.size(); ++i) times[i] = g.fact(cands[i]).t;
    current = cands[rng.weighted(transition_probabilities(times, u.t))];
    result.walk.facts.push_back(current);
  }
  result.status = WalkStatus::ok;
  return result;
}

Rule abstract_rule(const TemporalGraph& g, const Walk& walk, Mode mode) {
  std::unordered_map<EntityId, int32_t> placeholder;
  auto ph = [&placeholder](EntityId e) {
    auto it = placeholder.find(e);
    if (it != placeholder.end()) return it->second;
    int32_t id = static_cast<int32_t>(placeholder.size());
    placeholder.emplace(e, id);
    return id;
  };

  Rule rule;
  rule.mode = mode;
  rule.length = static_cast<int32_t>(walk.facts.size()) - 1;
  const Fact& head = g.fact(walk.facts[0]);
  rule.head_relation = head.relation;
  rule.head_subject_ph = ph(head.subject);
  rule.head_object_ph = ph(head.object);
  bool cats = mode == Mode::ctlogic;
  rule.head_subject_cat = cats ? head.subject_cat : kAnyCategory;
  rule.head_object_cat = cats ? head.object_cat : kAnyCategory;
  for (size_t i = 1; i < walk.facts.size(); ++i) {
    const Fact& f = g.fact(walk.facts[i]);
    rule.body_relations.push_back(f.relation);
    rule.body_subject_ph.push_back(ph(f.subject));
    rule.body_object_ph.push_back(ph(f.object));
    rule.body_subject_cat.push_back(cats ? f.subject_cat : kAnyCategory);
    rule.body_object_cat.push_back(cats ? f.object_cat : kAnyCategory);
  }
  rule.validate();
  return rule;
}

namespace {

// Facts with object e, relation r and t >= min_t, resolved through the
// inverse-edge index, ordered deterministically.
std::vector<FactId> facts_to_after(const TemporalGraph& g, EntityId e, RelationId r, Time min_t) {
  auto span = g.facts_from(e, g.inverse_relation(r));
  std::vector<FactId> out;
  for (FactId id : span) {
    if (g.fact(id).t >= min_t) out.push_back(g.inverse_fact(id));
  }
  return out;
}

// Anchor candidates for the earliest body fact: relation and categories
// must match, and the subject/object placeholder pattern must be
// satisfiable (self-loop placeholders require s == o, distinct ones s != o).
std::vector<FactId> anchor_candidates(const Rule& rule, const TemporalGraph& g) {
  size_t j = rule.walk_index(0);
  RelationId r1 = rule.body_relations[j];
  CategoryId scat = rule.body_subject_cat[j];
  std::span<const FactId> pool =
      scat == kAnyCategory ? g.facts_with_relation(r1) : g.facts_with_relation(r1, scat);
  bool self_loop = rule.body_subject_ph[j] == rule.body_object_ph[j];
  std::vector<FactId> out;
  for (FactId id : pool) {
    const Fact& f = g.fact(id);
    if (!categories_match(rule, j, f)) continue;
    if ((f.subject == f.object) != self_loop) continue;
    out.push_back(id);
  }
  return out;
}

bool head_completed(const Rule& rule, const TemporalGraph& g, const Binding& binding, Time t_last) {
  EntityId hs = binding.get(rule.head_subject_ph);
  EntityId ho = binding.get(rule.head_object_ph);
  auto span = g.facts_from(hs, rule.head_relation);
  for (FactId id : span) {
    const Fact& f = g.fact(id);
    if (f.t > t_last && f.object == ho) return true;
  }
  return false;
}

struct ExhaustiveCounter {
  int64_t support = 0;
  int64_t completed = 0;
};

void enumerate_groundings(const Rule& rule, const TemporalGraph& g, int32_t pos, Time t_prev, Binding& binding,
                          ExhaustiveCounter& counter) {
  size_t j = rule.walk_index(pos);
  std::vector<FactId> cands;
  if (pos == 0) {
    cands = anchor_candidates(rule, g);
  } else {
    cands = facts_to_after(g, binding.get(rule.body_object_ph[j]), rule.body_relations[j], t_prev);
  }
  for (FactId id : cands) {
    const Fact& f = g.fact(id);
    size_t mark = binding.mark();
    if (!bind_fact(rule, pos, f, binding)) continue;
    if (pos + 1 == rule.length) {
      ++counter.support;
      if (head_completed(rule, g, binding, f.t)) ++counter.completed;
    } else {
      enumerate_groundings(rule, g, pos + 1, f.t, binding, counter);
    }
    binding.rewind(mark);
  }
}

}  // namespace

ConfidenceEstimate estimate_confidence(const Rule& rule, const TemporalGraph& g, int32_t samples, Rng& rng) {
  if (samples < 0) throw std::invalid_argument("confidence sample count must be >= 0");

  if (samples == 0) {
    Binding binding(rule.num_placeholders());
    ExhaustiveCounter counter;
    enumerate_groundings(rule, g, 0, 0, binding, counter);
    if (counter.support == 0) return {0.0, 0};
    return {static_cast<double>(counter.completed) / static_cast<double>(counter.support), counter.support};
  }

  std::vector<FactId> anchors = anchor_candidates(rule, g);
  if (anchors.empty()) return {0.0, 0};

  std::set<std::vector<FactId>> groundings;
  int64_t completed = 0;
  std::vector<FactId> path(static_cast<size_t>(rule.length));
  for (int32_t s = 0; s < samples; ++s) {
    Binding binding(rule.num_placeholders());
    FactId anchor = anchors[rng.bounded(anchors.size())];
    if (!bind_fact(rule, 0, g.fact(anchor), binding)) continue;
    path[0] = anchor;
    Time t_prev = g.fact(anchor).t;
    bool ok = true;
    for (int32_t pos = 1; pos < rule.length && ok; ++pos) {
      size_t j = rule.walk_index(pos);
      std::vector<FactId> cands =
          facts_to_after(g, binding.get(rule.body_object_ph[j]), rule.body_relations[j], t_prev);
      // uniform choice among facts passing every constraint
      std::vector<FactId> admissible;
      for (FactId id : cands) {
        size_t mark = binding.mark();
        if (bind_fact(rule, pos, g.fact(id), binding)) {
          admissible.push_back(id);
          binding.rewind(mark);
        }
      }
      if (admissible.empty()) {
        ok = false;
        break;
      }
      FactId chosen = admissible[rng.bounded(admissible.size())];
      bind_fact(rule, pos, g.fact(chosen), binding);
      path[static_cast<size_t>(pos)] = chosen;
      t_prev = g.fact(chosen).t;
    }
    if (!ok) continue;
    if (groundings.insert(path).second) {
      if (head_completed(rule, g, binding, t_prev)) ++completed;
    }
  }
  if (groundings.empty()) return {0.0, 0};
  return {static_cast<double>(completed) / static_cast<double>(groundings.size()),
          static_cast<int64_t>(groundings.size())};
}

RuleBank learn(const TemporalGraph& g, const LearnParams& params, LearnStats* stats) {
  if (params.num_walks < 1) throw ConfigError("number of walks must be positive");
  if (params.max_rule_length < 1) throw ConfigError("max rule length must be positive");
  if (params.confidence_samples < 0) throw ConfigError("confidence sample count must be >= 0");
  const int32_t num_categories = g.num_categories();
  const bool cat_mode = params.mode == Mode::ctlogic;
  if (cat_mode && params.num_walks <= num_categories) {
    throw ConfigError("ctlogic mode requires num_walks > number of categories (" +
                      std::to_string(num_categories) + ")");
  }
  const int64_t budget = cat_mode ? (params.num_walks + num_categories - 1) / num_categories + 1 : params.num_walks;

  struct Item {
    RelationId relation;
    int32_t length;
    CategoryId category;
  };
  std::vector<Item> items;
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    for (int32_t b = 1; b <= params.max_rule_length; ++b) {
      if (cat_mode) {
        for (CategoryId c = 0; c < num_categories; ++c) items.push_back({r, b, c});
      } else {
        items.push_back({r, b, kAnyCategory});
      }
    }
  }

  struct ItemResult {
    std::vector<Rule> kept;
    int64_t walks_attempted = 0;
  };
  std::vector<ItemResult> results(items.size());

  parallel_for(items.size(), params.workers, [&](size_t i) {
    const Item& item = items[i];
    ItemResult& res = results[i];
    Rng rng(hash_mix(hash_mix(hash_mix(params.seed, static_cast<uint64_t>(item.relation)),
                              static_cast<uint64_t>(item.length)),
                     static_cast<uint64_t>(item.category) + 1));
    std::unordered_map<uint64_t, std::vector<size_t>> seen;
    std::vector<Rule> estimated;
    for (int64_t w = 0; w < budget; ++w) {
      ++res.walks_attempted;
      WalkResult wr = sample_walk(g, item.relation, item.length,
                                  cat_mode ? std::optional<CategoryId>(item.category) : std::nullopt, rng);
      if (wr.status != WalkStatus::ok) continue;
      Rule rule = abstract_rule(g, wr.walk, params.mode);
      uint64_t h = rule.pattern_hash();
      auto& slot = seen[h];
      bool duplicate = false;
      for (size_t idx : slot) {
        if (estimated[idx].same_pattern(rule)) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
      ConfidenceEstimate est = estimate_confidence(rule, g, params.confidence_samples, rng);
      rule.confidence = est.confidence;
      rule.body_support = est.body_support;
      slot.push_back(estimated.size());
      estimated.push_back(std::move(rule));
    }
    for (Rule& rule : estimated) {
      if (rule.confidence > 0.01 && rule.body_support >= 2) res.kept.push_back(std::move(rule));
    }
  });

  RuleBank bank;
  bank.meta().mode = params.mode;
  bank.meta().num_walks = params.num_walks;
  bank.meta().max_rule_length = params.max_rule_length;
  bank.meta().confidence_samples = params.confidence_samples;
  bank.meta().seed = params.seed;
  if (stats) stats->items.reserve(items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    if (stats) {
      stats->items.push_back({items[i].relation, items[i].length, items[i].category, results[i].walks_attempted,
                              static_cast<int64_t>(results[i].kept.size())});
    }
    for (Rule& rule : results[i].kept) {
      if (stats) {
        ++stats->rules_per_length[rule.length];
        ++stats->support_histogram[rule.body_support];
        ++stats->rules_total;
      }
      bank.insert(std::move(rule));
    }
  }
  return bank;
}

}  // namespace tkgr
