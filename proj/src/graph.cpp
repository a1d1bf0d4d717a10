#include "graph.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tkgr {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv1a(uint64_t h, const char* data, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= kFnvPrime;
  }
  return h;
}

uint64_t subject_rel_key(EntityId e, RelationId r) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(e)) << 32) | static_cast<uint32_t>(r);
}

uint64_t rel_scat_key(RelationId r, CategoryId c) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(r)) << 32) | static_cast<uint32_t>(c);
}

const std::vector<FactId>& empty_list() {
  static const std::vector<FactId> empty;
  return empty;
}

struct RawRow {
  std::string subject, relation, object;
  int64_t t = 0;
  std::string subject_cat, object_cat;  // empty in quadruple format
  size_t line = 0;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  for (;;) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

int64_t parse_int64(const std::string& s, const std::string& path, size_t line) {
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": bad timestamp '" + s + "'");
  }
  return value;
}

std::vector<RawRow> parse_fact_file(const std::string& path, Format format) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  const size_t want = format == Format::sextuple ? 6 : 4;
  std::vector<RawRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != want) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(want) +
                               " tab-separated columns, got " + std::to_string(cols.size()));
    }
    RawRow row;
    row.subject = cols[0];
    row.relation = cols[1];
    row.object = cols[2];
    row.t = parse_int64(cols[3], path, line_no);
    if (format == Format::sextuple) {
      row.subject_cat = cols[4];
      row.object_cat = cols[5];
    }
    row.line = line_no;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("dataset file is empty: " + path);
  return rows;
}

std::unordered_map<std::string, std::string> parse_category_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open category map: " + path);
  std::unordered_map<std::string, std::string> map;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected entity<TAB>category, got " +
                               std::to_string(cols.size()) + " columns");
    }
    auto it = map.find(cols[0]);
    if (it != map.end() && it->second != cols[1]) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": entity '" + cols[0] +
                               "' mapped to both '" + it->second + "' and '" + cols[1] + "'");
    }
    map.emplace(std::move(cols[0]), std::move(cols[1]));
  }
  return map;
}

struct DatasetBuilder {
  LoadOptions opts;
  std::unordered_map<std::string, std::string> category_map;
  std::shared_ptr<Vocabs> vocabs = std::make_shared<Vocabs>();
  std::set<int64_t> raw_times;
  // file path -> parsed rows, kept until all files are scanned so that
  // timestamps can be normalized over the union.
  std::vector<std::pair<std::string, std::vector<RawRow>>> files;

  explicit DatasetBuilder(const LoadOptions& o) : opts(o) {
    if (opts.format == Format::quadruple && opts.category_map_path.empty() && !opts.default_all_category) {
      throw ConfigError("quadruple format requires a category map (or the default 'ALL' category)");
    }
    if (!opts.category_map_path.empty()) category_map = parse_category_map(opts.category_map_path);
  }

  // Category name for one entity occurrence; the map overrides row
  // categories, the row value applies otherwise.
  const std::string& resolve_category(const std::string& entity, const std::string& row_cat,
                                      const std::string& path, size_t line) {
    static const std::string all = "ALL";
    auto it = category_map.find(entity);
    if (it != category_map.end()) return it->second;
    if (opts.format == Format::sextuple) return row_cat;
    if (opts.default_all_category) return all;
    throw std::runtime_error(path + ":" + std::to_string(line) + ": entity '" + entity +
                             "' missing from category map");
  }

  void note_entity(const std::string& entity, const std::string& row_cat, const std::string& path, size_t line) {
    EntityId e = vocabs->entities.intern(entity);
    const std::string& cat_name = resolve_category(entity, row_cat, path, line);
    CategoryId c = vocabs->categories.intern(cat_name);
    if (static_cast<size_t>(e) == vocabs->entity_category.size()) {
      vocabs->entity_category.push_back(c);
    } else if (vocabs->entity_category[static_cast<size_t>(e)] != c) {
      throw std::runtime_error(path + ":" + std::to_string(line) + ": entity '" + entity +
                               "' already has category '" +
                               vocabs->categories.name(vocabs->entity_category[static_cast<size_t>(e)]) +
                               "', saw '" + cat_name + "'");
    }
  }

  void scan_file(const std::string& path) {
    auto rows = parse_fact_file(path, opts.format);
    for (const auto& row : rows) {
      note_entity(row.subject, row.subject_cat, path, row.line);
      note_entity(row.object, row.object_cat, path, row.line);
      vocabs->relations.intern(row.relation);
      raw_times.insert(row.t);
    }
    files.emplace_back(path, std::move(rows));
  }

  std::vector<TemporalGraph> build() {
    vocabs->time_labels.assign(raw_times.begin(), raw_times.end());
    std::unordered_map<int64_t, Time> time_index;
    for (size_t i = 0; i < vocabs->time_labels.size(); ++i) {
      time_index[vocabs->time_labels[i]] = static_cast<Time>(i);
    }
    std::shared_ptr<const Vocabs> frozen = vocabs;
    std::vector<TemporalGraph> graphs;
    for (auto& [path, rows] : files) {
      std::vector<Fact> base;
      base.reserve(rows.size());
      for (const auto& row : rows) {
        Fact f;
        f.subject = *frozen->entities.find(row.subject);
        f.relation = *frozen->relations.find(row.relation);
        f.object = *frozen->entities.find(row.object);
        f.t = time_index.at(row.t);
        f.subject_cat = frozen->entity_category[static_cast<size_t>(f.subject)];
        f.object_cat = frozen->entity_category[static_cast<size_t>(f.object)];
        base.push_back(f);
      }
      graphs.push_back(TemporalGraph::from_base_facts(std::move(base), frozen));
    }
    return graphs;
  }
};

}  // namespace

std::string Vocabs::relation_name(RelationId r) const {
  int32_t nb = num_base_relations();
  if (r < nb) return relations.name(r);
  return relations.name(r - nb) + "^-1";
}

TemporalGraph TemporalGraph::from_base_facts(std::vector<Fact> base, std::shared_ptr<const Vocabs> vocabs) {
  TemporalGraph g;
  g.vocabs_ = std::move(vocabs);
  const int32_t nb = g.vocabs_->num_base_relations();
  g.facts_.reserve(base.size() * 2);
  for (const Fact& f : base) {
    g.facts_.push_back(f);
    Fact inv;
    inv.subject = f.object;
    inv.relation = f.relation + nb;
    inv.object = f.subject;
    inv.t = f.t;
    inv.subject_cat = f.object_cat;
    inv.object_cat = f.subject_cat;
    g.facts_.push_back(inv);
  }

  g.by_subject_.resize(static_cast<size_t>(g.vocabs_->entities.size()));
  g.by_relation_.resize(static_cast<size_t>(g.vocabs_->num_relations()));
  g.by_time_.resize(g.facts_.size());
  for (size_t i = 0; i < g.facts_.size(); ++i) {
    const Fact& f = g.facts_[i];
    FactId id = static_cast<FactId>(i);
    g.by_subject_[static_cast<size_t>(f.subject)].push_back(id);
    g.by_subject_rel_[subject_rel_key(f.subject, f.relation)].push_back(id);
    g.by_relation_[static_cast<size_t>(f.relation)].push_back(id);
    g.by_rel_scat_[rel_scat_key(f.relation, f.subject_cat)].push_back(id);
    g.by_time_[i] = id;
    g.t_min_ = i == 0 ? f.t : std::min(g.t_min_, f.t);
    g.t_max_ = i == 0 ? f.t : std::max(g.t_max_, f.t);
  }

  auto by_time = [&g](FactId a, FactId b) {
    Time ta = g.facts_[static_cast<size_t>(a)].t;
    Time tb = g.facts_[static_cast<size_t>(b)].t;
    return ta != tb ? ta < tb : a < b;
  };
  for (auto& list : g.by_subject_) std::sort(list.begin(), list.end(), by_time);
  for (auto& [key, list] : g.by_subject_rel_) std::sort(list.begin(), list.end(), by_time);
  for (auto& list : g.by_relation_) std::sort(list.begin(), list.end(), by_time);
  for (auto& [key, list] : g.by_rel_scat_) std::sort(list.begin(), list.end(), by_time);
  std::sort(g.by_time_.begin(), g.by_time_.end(), by_time);
  return g;
}

CategoryId TemporalGraph::category_of(EntityId e) const {
  if (e < 0 || static_cast<size_t>(e) >= vocabs_->entity_category.size()) {
    throw std::out_of_range("unknown entity id " + std::to_string(e));
  }
  return vocabs_->entity_category[static_cast<size_t>(e)];
}

Time TemporalGraph::normalize_query_time(int64_t raw) const {
  const auto& labels = vocabs_->time_labels;
  auto it = std::lower_bound(labels.begin(), labels.end(), raw);
  return static_cast<Time>(it - labels.begin());
}

namespace {

// First position in a (t, id)-sorted fact list with t >= bound.
size_t lower_by_time(const std::vector<Fact>& facts, const std::vector<FactId>& list, Time bound) {
  return static_cast<size_t>(std::partition_point(list.begin(), list.end(),
                                                  [&](FactId id) {
                                                    return facts[static_cast<size_t>(id)].t < bound;
                                                  }) -
                             list.begin());
}

}  // namespace

std::vector<FactId> TemporalGraph::candidate_facts(EntityId from, Time bound, bool strict,
                                                   std::optional<FactId> exclude) const {
  if (from < 0 || static_cast<size_t>(from) >= by_subject_.size()) {
    throw std::out_of_range("unknown entity id " + std::to_string(from));
  }
  const auto& list = by_subject_[static_cast<size_t>(from)];
  size_t end = lower_by_time(facts_, list, strict ? bound : bound + 1);
  std::vector<FactId> out;
  out.reserve(end);
  for (size_t i = 0; i < end; ++i) {
    if (exclude && list[i] == *exclude) continue;
    out.push_back(list[i]);
  }
  return out;
}

std::span<const FactId> TemporalGraph::facts_from(EntityId e) const {
  if (e < 0 || static_cast<size_t>(e) >= by_subject_.size()) {
    throw std::out_of_range("unknown entity id " + std::to_string(e));
  }
  return by_subject_[static_cast<size_t>(e)];
}

std::span<const FactId> TemporalGraph::facts_from(EntityId e, RelationId r) const {
  auto it = by_subject_rel_.find(subject_rel_key(e, r));
  return it == by_subject_rel_.end() ? empty_list() : it->second;
}

std::span<const FactId> TemporalGraph::facts_with_relation(RelationId r) const {
  if (r < 0 || static_cast<size_t>(r) >= by_relation_.size()) {
    throw std::out_of_range("unknown relation id " + std::to_string(r));
  }
  return by_relation_[static_cast<size_t>(r)];
}

std::span<const FactId> TemporalGraph::facts_with_relation(RelationId r, CategoryId subject_cat) const {
  auto it = by_rel_scat_.find(rel_scat_key(r, subject_cat));
  return it == by_rel_scat_.end() ? empty_list() : it->second;
}

WindowView TemporalGraph::window(Time t_q, Time w, LeakProbe* probe) const {
  if (w <= 0) throw std::invalid_argument("window size must be positive");
  return WindowView(*this, t_q - w, t_q, probe);
}

const Fact& WindowView::fact(FactId id) const { return g_->fact(id); }

std::vector<FactId> WindowView::serve(std::vector<FactId> ids) const {
  if (probe_) {
    probe_->accesses += ids.size();
    for (FactId id : ids) {
      if (g_->fact(id).t >= probe_->t_q) ++probe_->violations;
    }
  }
  return ids;
}

size_t WindowView::fact_count() const {
  const auto& order = g_->by_time_;
  size_t begin = lower_by_time(g_->facts_, order, lo_);
  size_t end = lower_by_time(g_->facts_, order, hi_);
  return end - begin;
}

std::vector<FactId> WindowView::all_facts() const {
  const auto& order = g_->by_time_;
  size_t begin = lower_by_time(g_->facts_, order, lo_);
  size_t end = lower_by_time(g_->facts_, order, hi_);
  return serve(std::vector<FactId>(order.begin() + begin, order.begin() + end));
}

std::vector<FactId> WindowView::facts_from(EntityId e, RelationId r, Time min_t) const {
  auto list = g_->facts_from(e, r);
  Time lo = std::max(lo_, min_t);
  std::vector<FactId> out;
  for (FactId id : list) {
    Time t = g_->fact(id).t;
    if (t >= lo && t < hi_) out.push_back(id);
  }
  return serve(std::move(out));
}

std::vector<FactId> WindowView::facts_to(EntityId e, RelationId r, Time min_t) const {
  auto list = g_->facts_from(e, g_->inverse_relation(r));
  Time lo = std::max(lo_, min_t);
  std::vector<FactId> out;
  for (FactId id : list) {
    Time t = g_->fact(id).t;
    if (t >= lo && t < hi_) out.push_back(g_->inverse_fact(id));
  }
  return serve(std::move(out));
}

TemporalGraph load_dataset(const std::string& path, const LoadOptions& opts) {
  DatasetBuilder builder(opts);
  builder.scan_file(path);
  return std::move(builder.build().front());
}

Splits load_splits(const std::string& train_path, const std::string& valid_path, const std::string& test_path,
                   const LoadOptions& opts) {
  DatasetBuilder builder(opts);
  builder.scan_file(train_path);
  builder.scan_file(valid_path);
  builder.scan_file(test_path);
  auto graphs = builder.build();
  Splits splits;
  splits.train = std::move(graphs[0]);
  splits.valid = std::move(graphs[1]);
  splits.test = std::move(graphs[2]);
  uint64_t h = kFnvOffset;
  for (const auto* p : {&train_path, &valid_path, &test_path}) {
    uint64_t fh = hash_file(*p);
    h = fnv1a(h, reinterpret_cast<const char*>(&fh), sizeof(fh));
  }
  if (!opts.category_map_path.empty()) {
    uint64_t fh = hash_file(opts.category_map_path);
    h = fnv1a(h, reinterpret_cast<const char*>(&fh), sizeof(fh));
  }
  char fmt = opts.format == Format::sextuple ? 's' : 'q';
  h = fnv1a(h, &fmt, 1);
  splits.dataset_hash = h;
  return splits;
}

TemporalGraph merge_graphs(const std::vector<const TemporalGraph*>& parts) {
  if (parts.empty()) throw std::invalid_argument("merge_graphs needs at least one graph");
  auto vocabs = parts.front()->vocabs_ptr();
  std::vector<Fact> base;
  for (const TemporalGraph* g : parts) {
    if (g->vocabs_ptr() != vocabs) throw std::invalid_argument("merge_graphs requires shared vocabularies");
    for (size_t i = 0; i < g->num_facts(); i += 2) {
      base.push_back(g->fact(static_cast<FactId>(i)));
    }
  }
  return TemporalGraph::from_base_facts(std::move(base), vocabs);
}

void write_dataset(const TemporalGraph& g, const std::string& path, Format format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  const Vocabs& v = g.vocabs();
  for (size_t i = 0; i < g.num_facts(); i += 2) {
    const Fact& f = g.fact(static_cast<FactId>(i));
    out << v.entities.name(f.subject) << '\t' << v.relations.name(f.relation) << '\t' << v.entities.name(f.object)
        << '\t' << g.time_label(f.t);
    if (format == Format::sextuple) {
      out << '\t' << v.categories.name(f.subject_cat) << '\t' << v.categories.name(f.object_cat);
    }
    out << '\n';
  }
}

uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file for hashing: " + path);
  uint64_t h = kFnvOffset;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a(h, buf, static_cast<size_t>(in.gcount()));
  }
  return h;
}

}  // namespace tkgr
