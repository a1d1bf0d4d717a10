#pragma once

#include <vector>

#include "rule.h"
#include "types.h"

namespace tkgr {

// Incremental placeholder-binding state used when matching a rule body
// against facts. Binding is injective: distinct placeholders must hold
// distinct entities, so a grounding's recurrence pattern equals the
// rule's placeholder pattern exactly.
class Binding {
 public:
  explicit Binding(int32_t num_placeholders) : bound_(static_cast<size_t>(num_placeholders), -1) {}

  EntityId get(int32_t ph) const { return bound_[static_cast<size_t>(ph)]; }

  bool bind(int32_t ph, EntityId e) {
    EntityId& slot = bound_[static_cast<size_t>(ph)];
    if (slot != -1) return slot == e;
    for (EntityId x : bound_) {
      if (x == e) return false;
    }
    slot = e;
    trail_.push_back(ph);
    return true;
  }

  size_t mark() const { return trail_.size(); }

  void rewind(size_t mark) {
    while (trail_.size() > mark) {
      bound_[static_cast<size_t>(trail_.back())] = -1;
      trail_.pop_back();
    }
  }

 private:
  std::vector<EntityId> bound_;
  std::vector<int32_t> trail_;
};

inline bool categories_match(const Rule& rule, size_t walk_idx, const Fact& f) {
  return (rule.body_subject_cat[walk_idx] == kAnyCategory || f.subject_cat == rule.body_subject_cat[walk_idx]) &&
         (rule.body_object_cat[walk_idx] == kAnyCategory || f.object_cat == rule.body_object_cat[walk_idx]);
}

// Tries to place fact f at body sequence position pos (0 = earliest).
// On success the new bindings stay committed; on failure the binding is
// left exactly as it was.
inline bool bind_fact(const Rule& rule, int32_t pos, const Fact& f, Binding& binding) {
  size_t j = rule.walk_index(pos);
  if (!categories_match(rule, j, f)) return false;
  size_t m = binding.mark();
  if (!binding.bind(rule.body_object_ph[j], f.object) || !binding.bind(rule.body_subject_ph[j], f.subject)) {
    binding.rewind(m);
    return false;
  }
  return true;
}

}  // namespace tkgr
