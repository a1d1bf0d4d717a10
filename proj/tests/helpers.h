#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "graph.h"
#include "types.h"

namespace tkgr::test {

// Builds a small graph from name-level facts without touching the
// filesystem. Timestamps are normalized exactly like the loader does.
class GraphBuilder {
 public:
  GraphBuilder& fact(const std::string& s, const std::string& r, const std::string& o, int64_t t,
                     const std::string& cs = "ALL", const std::string& co = "ALL") {
    rows_.push_back({s, r, o, t, cs, co});
    return *this;
  }

  TemporalGraph build() {
    auto vocabs = std::make_shared<Vocabs>();
    std::set<int64_t> raw_times;
    for (const Row& row : rows_) {
      note(*vocabs, row.s, row.cs);
      note(*vocabs, row.o, row.co);
      vocabs->relations.intern(row.r);
      raw_times.insert(row.t);
    }
    vocabs->time_labels.assign(raw_times.begin(), raw_times.end());
    std::map<int64_t, Time> index;
    for (size_t i = 0; i < vocabs->time_labels.size(); ++i) index[vocabs->time_labels[i]] = static_cast<Time>(i);
    std::vector<Fact> base;
    for (const Row& row : rows_) {
      Fact f;
      f.subject = *vocabs->entities.find(row.s);
      f.relation = *vocabs->relations.find(row.r);
      f.object = *vocabs->entities.find(row.o);
      f.t = index.at(row.t);
      f.subject_cat = vocabs->entity_category[static_cast<size_t>(f.subject)];
      f.object_cat = vocabs->entity_category[static_cast<size_t>(f.object)];
      base.push_back(f);
    }
    return TemporalGraph::from_base_facts(std::move(base), std::move(vocabs));
  }

 private:
  struct Row {
    std::string s, r, o;
    int64_t t;
    std::string cs, co;
  };

  static void note(Vocabs& v, const std::string& entity, const std::string& cat) {
    EntityId e = v.entities.intern(entity);
    CategoryId c = v.categories.intern(cat);
    if (static_cast<size_t>(e) == v.entity_category.size()) {
      v.entity_category.push_back(c);
    } else if (v.entity_category[static_cast<size_t>(e)] != c) {
      throw std::logic_error("test fixture: entity '" + entity + "' given two categories");
    }
  }

  std::vector<Row> rows_;
};

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tkgr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// Fact id for a name-level (s, r, o, raw t) quadruple; fails the test
// fixture loudly when absent.
inline FactId find_fact(const TemporalGraph& g, const std::string& s, const std::string& r, const std::string& o,
                        int64_t raw_t) {
  const Vocabs& v = g.vocabs();
  for (size_t i = 0; i < g.num_facts(); ++i) {
    const Fact& f = g.fact(static_cast<FactId>(i));
    if (f.relation >= v.num_base_relations()) continue;
    if (v.entities.name(f.subject) == s && v.relations.name(f.relation) == r && v.entities.name(f.object) == o &&
        g.time_label(f.t) == raw_t) {
      return static_cast<FactId>(i);
    }
  }
  throw std::logic_error("fixture fact not found: " + s + " " + r + " " + o);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace tkgr::test
