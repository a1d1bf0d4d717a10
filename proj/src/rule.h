#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graph.h"
#include "types.h"

namespace tkgr {

// A temporal logic rule abstracted from one random walk.
//
// Body facts are stored in walk order: index 0 is the temporally latest
// body fact (sequence position b) and index b-1 the earliest (sequence
// position 1). Placeholders were assigned in first-occurrence order over
// the walk with the head visited first, so head_subject_ph is always 0.
//
// Structural invariants, checked by validate():
//   head_object_ph  == body_subject_ph.front()   (head object = s_b)
//   head_subject_ph == body_object_ph.back()     (head subject = o_1)
//   body_object_ph[j] == body_subject_ph[j+1]    (chaining o_{i+1} = s_i)
//
// In tlogic mode every category slot holds kAnyCategory and category
// checks are skipped during grounding.
struct Rule {
  Mode mode = Mode::tlogic;
  int32_t length = 0;  // b
  RelationId head_relation = -1;
  int32_t head_subject_ph = 0;
  int32_t head_object_ph = 0;
  std::vector<RelationId> body_relations;
  std::vector<int32_t> body_subject_ph;
  std::vector<int32_t> body_object_ph;
  CategoryId head_subject_cat = kAnyCategory;
  CategoryId head_object_cat = kAnyCategory;
  std::vector<CategoryId> body_subject_cat;
  std::vector<CategoryId> body_object_cat;
  double confidence = 0.0;
  int64_t body_support = 0;

  int32_t num_placeholders() const;
  // Maps a body sequence position (0 = earliest fact) to the stored walk
  // index.
  size_t walk_index(int32_t seq_pos) const { return static_cast<size_t>(length - 1 - seq_pos); }

  // Identity over everything except confidence and body_support.
  bool same_pattern(const Rule& other) const;
  uint64_t pattern_hash() const;
  void validate() const;

  std::string render(const Vocabs& v) const;
};

// Deterministic bank ordering: confidence desc, then pattern hash, then a
// full field comparison.
bool rule_order(const Rule& a, const Rule& b);

struct BankMeta {
  Mode mode = Mode::tlogic;
  int32_t num_walks = 0;
  int32_t max_rule_length = 0;
  int32_t confidence_samples = 0;
  uint64_t seed = 0;
  uint64_t dataset_hash = 0;
};

// Learned rules grouped by (head relation, head subject category); in
// tlogic mode the category key is kAnyCategory. Within a group rules are
// kept in rule_order; duplicate patterns keep the first inserted estimate.
class RuleBank {
 public:
  void insert(Rule rule);

  // Rules whose head relation matches, regardless of category, in
  // rule_order (tlogic selection).
  std::vector<const Rule*> rules_for_relation(RelationId r) const;
  // Rules for one (head relation, head subject category) group.
  std::vector<const Rule*> rules_for(RelationId r, CategoryId subject_cat) const;
  std::vector<const Rule*> all_rules() const;

  size_t size() const { return count_; }
  BankMeta& meta() { return meta_; }
  const BankMeta& meta() const { return meta_; }

  void save(const std::string& path) const;
  static RuleBank load(const std::string& path);

 private:
  using GroupKey = std::pair<RelationId, CategoryId>;
  std::map<GroupKey, std::vector<Rule>> groups_;
  BankMeta meta_;
  size_t count_ = 0;
};

}  // namespace tkgr
