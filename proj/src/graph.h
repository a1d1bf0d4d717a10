#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "types.h"
#include "vocab.h"

namespace tkgr {

// Vocabularies and the entity->category assignment shared by every split
// of a dataset. Relation ids 0..num_base_relations-1 are the relations as
// read from file; id r + num_base_relations is the inverse of r.
// time_labels maps normalized timestamps (consecutive integers in
// chronological order) back to the raw values found in the files.
struct Vocabs {
  Vocab entities;
  Vocab relations;  // base relations only
  Vocab categories;
  std::vector<CategoryId> entity_category;
  std::vector<int64_t> time_labels;

  int32_t num_base_relations() const { return relations.size(); }
  int32_t num_relations() const { return 2 * relations.size(); }
  std::string relation_name(RelationId r) const;
};

struct LoadOptions {
  Format format = Format::quadruple;
  // Optional entity<TAB>category file. Required for quadruple data unless
  // default_all_category is set; for sextuple data it overrides the
  // category of every entity it names.
  std::string category_map_path;
  bool default_all_category = false;
};

// Counts fact accesses made through a WindowView and flags any served
// fact with t >= t_q (which would leak future information into retrieval).
struct LeakProbe {
  Time t_q = 0;
  uint64_t accesses = 0;
  uint64_t violations = 0;
};

class TemporalGraph;

// Read-only restriction of a graph to timestamps in [lo, hi). All fact
// lookups made during rule application go through a view, so the probe
// sees every fact retrieval touches.
class WindowView {
 public:
  WindowView(const TemporalGraph& g, Time lo, Time hi, LeakProbe* probe = nullptr)
      : g_(&g), lo_(lo), hi_(hi), probe_(probe) {}

  Time lo() const { return lo_; }
  Time hi() const { return hi_; }
  const TemporalGraph& graph() const { return *g_; }
  const Fact& fact(FactId id) const;

  size_t fact_count() const;
  std::vector<FactId> all_facts() const;

  // Facts with subject e and relation r, timestamp in [max(lo, min_t), hi),
  // ordered by (t, fact id).
  std::vector<FactId> facts_from(EntityId e, RelationId r, Time min_t) const;
  // Facts with object e and relation r, same bounds; resolved through the
  // inverse-edge index.
  std::vector<FactId> facts_to(EntityId e, RelationId r, Time min_t) const;

 private:
  std::vector<FactId> serve(std::vector<FactId> ids) const;

  const TemporalGraph* g_;
  Time lo_, hi_;
  LeakProbe* probe_;
};

// Immutable indexed fact store with inverse-edge augmentation. Base fact
// k from the input occupies id 2k and its inverse id 2k+1, so partner
// lookup is id ^ 1. Per-subject lists are sorted by (timestamp, fact id);
// equal timestamps keep file insertion order.
class TemporalGraph {
 public:
  TemporalGraph() = default;

  // `base` holds the facts as read from file (no inverses), already in
  // integer-id form with normalized timestamps.
  static TemporalGraph from_base_facts(std::vector<Fact> base, std::shared_ptr<const Vocabs> vocabs);

  size_t num_facts() const { return facts_.size(); }
  const Fact& fact(FactId id) const { return facts_[static_cast<size_t>(id)]; }
  const std::vector<Fact>& facts() const { return facts_; }

  const Vocabs& vocabs() const { return *vocabs_; }
  std::shared_ptr<const Vocabs> vocabs_ptr() const { return vocabs_; }
  int32_t num_entities() const { return vocabs_->entities.size(); }
  int32_t num_categories() const { return vocabs_->categories.size(); }
  int32_t num_base_relations() const { return vocabs_->num_base_relations(); }
  int32_t num_relations() const { return vocabs_->num_relations(); }

  Time t_min() const { return t_min_; }
  Time t_max() const { return t_max_; }
  // Number of normalized timestamps in the shared vocabulary (union of
  // all splits), not just those present in this split.
  int32_t num_times() const { return static_cast<int32_t>(vocabs_->time_labels.size()); }

  RelationId inverse_relation(RelationId r) const {
    int32_t nb = num_base_relations();
    return r < nb ? r + nb : r - nb;
  }
  FactId inverse_fact(FactId id) const { return id ^ 1; }
  CategoryId category_of(EntityId e) const;

  // Raw timestamp value for a normalized time.
  int64_t time_label(Time t) const { return vocabs_->time_labels[static_cast<size_t>(t)]; }
  // Normalized position for a raw query timestamp: its index if present,
  // otherwise the number of known timestamps strictly before it.
  Time normalize_query_time(int64_t raw) const;

  // All facts with subject `from` and t < bound (strict) or t <= bound,
  // optionally minus one excluded fact; ordered by (t, fact id).
  std::vector<FactId> candidate_facts(EntityId from, Time bound, bool strict,
                                      std::optional<FactId> exclude = std::nullopt) const;

  std::span<const FactId> facts_from(EntityId e) const;
  std::span<const FactId> facts_from(EntityId e, RelationId r) const;
  std::span<const FactId> facts_with_relation(RelationId r) const;
  std::span<const FactId> facts_with_relation(RelationId r, CategoryId subject_cat) const;
  // All fact ids ordered by (t, id).
  std::span<const FactId> facts_by_time() const { return by_time_; }

  WindowView window(Time t_q, Time w, LeakProbe* probe = nullptr) const;

 private:
  friend class WindowView;

  std::shared_ptr<const Vocabs> vocabs_;
  std::vector<Fact> facts_;
  std::vector<std::vector<FactId>> by_subject_;
  std::unordered_map<uint64_t, std::vector<FactId>> by_subject_rel_;
  std::vector<std::vector<FactId>> by_relation_;
  std::unordered_map<uint64_t, std::vector<FactId>> by_rel_scat_;
  std::vector<FactId> by_time_;
  Time t_min_ = 0;
  Time t_max_ = -1;
};

TemporalGraph load_dataset(const std::string& path, const LoadOptions& opts);

struct Splits {
  TemporalGraph train;
  TemporalGraph valid;
  TemporalGraph test;
  uint64_t dataset_hash = 0;
};

// Loads three splits with vocabularies and time normalization built over
// their union. dataset_hash fingerprints the input bytes so rule banks
// can be checked against the data they were learned on.
Splits load_splits(const std::string& train_path, const std::string& valid_path,
                   const std::string& test_path, const LoadOptions& opts);

// Union of the base facts of several graphs sharing one Vocabs instance,
// re-indexed as a single graph (used to build the retrieval history).
TemporalGraph merge_graphs(const std::vector<const TemporalGraph*>& parts);

// Writes base facts back to TSV with names and raw timestamps, in
// insertion order; sextuple format includes the category columns.
void write_dataset(const TemporalGraph& g, const std::string& path, Format format);

uint64_t hash_file(const std::string& path);

}  // namespace tkgr
