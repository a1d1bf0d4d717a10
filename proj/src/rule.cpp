#include "rule.h"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rng.h"

namespace tkgr {

namespace {

std::string join_ints(const std::vector<int32_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int32_t> split_ints(const std::string& s, size_t expect, const std::string& what, size_t record) {
  std::vector<int32_t> out;
  if (!s.empty()) {
    size_t start = 0;
    while (start <= s.size()) {
      size_t pos = s.find(',', start);
      std::string tok = pos == std::string::npos ? s.substr(start) : s.substr(start, pos - start);
      int32_t v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        throw std::runtime_error("rule record " + std::to_string(record) + ": bad " + what + " list '" + s + "'");
      }
      out.push_back(v);
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  }
  if (out.size() != expect) {
    throw std::runtime_error("rule record " + std::to_string(record) + ": " + what + " list has " +
                             std::to_string(out.size()) + " entries, expected " + std::to_string(expect));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int compare_pattern(const Rule& a, const Rule& b) {
  auto cmp = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
  if (int c = cmp(static_cast<int>(a.mode), static_cast<int>(b.mode))) return c;
  if (int c = cmp(a.length, b.length)) return c;
  if (int c = cmp(a.head_relation, b.head_relation)) return c;
  if (int c = cmp(a.head_subject_ph, b.head_subject_ph)) return c;
  if (int c = cmp(a.head_object_ph, b.head_object_ph)) return c;
  if (int c = cmp(a.head_subject_cat, b.head_subject_cat)) return c;
  if (int c = cmp(a.head_object_cat, b.head_object_cat)) return c;
  if (int c = cmp(a.body_relations, b.body_relations)) return c;
  if (int c = cmp(a.body_subject_ph, b.body_subject_ph)) return c;
  if (int c = cmp(a.body_object_ph, b.body_object_ph)) return c;
  if (int c = cmp(a.body_subject_cat, b.body_subject_cat)) return c;
  if (int c = cmp(a.body_object_cat, b.body_object_cat)) return c;
  return 0;
}

}  // namespace

int32_t Rule::num_placeholders() const {
  int32_t m = std::max(head_subject_ph, head_object_ph);
  for (int32_t p : body_subject_ph) m = std::max(m, p);
  for (int32_t p : body_object_ph) m = std::max(m, p);
  return m + 1;
}

bool Rule::same_pattern(const Rule& other) const { return compare_pattern(*this, other) == 0; }

uint64_t Rule::pattern_hash() const {
  uint64_t h = 0x2b3c4d5e6f708192ull;
  auto mix = [&h](int64_t v) { h = hash_mix(h, static_cast<uint64_t>(v)); };
  mix(static_cast<int64_t>(mode));
  mix(length);
  mix(head_relation);
  mix(head_subject_ph);
  mix(head_object_ph);
  mix(head_subject_cat);
  mix(head_object_cat);
  for (auto v : body_relations) mix(v);
  for (auto v : body_subject_ph) mix(v);
  for (auto v : body_object_ph) mix(v);
  for (auto v : body_subject_cat) mix(v);
  for (auto v : body_object_cat) mix(v);
  return h;
}

void Rule::validate() const {
  auto fail = [](const std::string& msg) { throw std::runtime_error("invalid rule: " + msg); };
  if (length < 1) fail("length must be >= 1");
  size_t b = static_cast<size_t>(length);
  if (body_relations.size() != b || body_subject_ph.size() != b || body_object_ph.size() != b ||
      body_subject_cat.size() != b || body_object_cat.size() != b) {
    fail("body field lengths disagree with rule length");
  }
  if (head_object_ph != body_subject_ph.front()) fail("head object placeholder must equal s_b");
  if (head_subject_ph != body_object_ph.back()) fail("head subject placeholder must equal o_1");
  for (size_t j = 0; j + 1 < b; ++j) {
    if (body_object_ph[j] != body_subject_ph[j + 1]) fail("body chaining broken at walk index " + std::to_string(j));
  }
  if (confidence < 0.0 || confidence > 1.0) fail("confidence outside [0,1]");
  if (body_support < 0) fail("negative body support");
}

std::string Rule::render(const Vocabs& v) const {
  auto atom = [&](int32_t sph, RelationId r, int32_t oph, CategoryId sc, CategoryId oc) {
    std::string s = "(X" + std::to_string(sph);
    if (sc != kAnyCategory) s += ":" + v.categories.name(sc);
    s += ", " + v.relation_name(r) + ", X" + std::to_string(oph);
    if (oc != kAnyCategory) s += ":" + v.categories.name(oc);
    s += ")";
    return s;
  };
  std::ostringstream out;
  out << atom(head_subject_ph, head_relation, head_object_ph, head_subject_cat, head_object_cat) << " @ T"
      << (length + 1) << " :- ";
  for (int32_t j = 0; j < length; ++j) {
    if (j) out << ", ";
    out << atom(body_subject_ph[j], body_relations[j], body_object_ph[j], body_subject_cat[j], body_object_cat[j])
        << " @ T" << (length - j);
  }
  out << "  [conf " << confidence << ", support " << body_support << "]";
  return out.str();
}

bool rule_order(const Rule& a, const Rule& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  uint64_t ha = a.pattern_hash(), hb = b.pattern_hash();
  if (ha != hb) return ha < hb;
  return compare_pattern(a, b) < 0;
}

void RuleBank::insert(Rule rule) {
  auto& group = groups_[{rule.head_relation, rule.head_subject_cat}];
  for (const Rule& existing : group) {
    if (existing.same_pattern(rule)) return;  // first estimate wins
  }
  group.insert(std::upper_bound(group.begin(), group.end(), rule, rule_order), std::move(rule));
  ++count_;
}

std::vector<const Rule*> RuleBank::rules_for_relation(RelationId r) const {
  std::vector<const Rule*> out;
  for (auto it = groups_.lower_bound({r, INT32_MIN}); it != groups_.end() && it->first.first == r; ++it) {
    for (const Rule& rule : it->second) out.push_back(&rule);
  }
  std::sort(out.begin(), out.end(), [](const Rule* a, const Rule* b) { return rule_order(*a, *b); });
  return out;
}

std::vector<const Rule*> RuleBank::rules_for(RelationId r, CategoryId subject_cat) const {
  std::vector<const Rule*> out;
  auto it = groups_.find({r, subject_cat});
  if (it == groups_.end()) return out;
  for (const Rule& rule : it->second) out.push_back(&rule);
  return out;
}

std::vector<const Rule*> RuleBank::all_rules() const {
  std::vector<const Rule*> out;
  for (const auto& [key, group] : groups_) {
    for (const Rule& rule : group) out.push_back(&rule);
  }
  return out;
}

void RuleBank::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write rule bank: " + path);
  out << "#tkgr-rulebank\tv1\n";
  out << "#meta\tmode=" << to_string(meta_.mode) << "\tn=" << meta_.num_walks << "\tb_max=" << meta_.max_rule_length
      << "\tsamples=" << meta_.confidence_samples << "\tseed=" << meta_.seed << "\tdataset_hash=" << meta_.dataset_hash
      << "\n";
  for (const Rule* r : all_rules()) {
    out << to_string(r->mode) << '\t' << r->length << '\t' << r->head_relation << '\t' << r->head_subject_ph << '\t'
        << r->head_object_ph << '\t' << join_ints(r->body_relations) << '\t' << join_ints(r->body_subject_ph) << '\t'
        << join_ints(r->body_object_ph) << '\t' << r->head_subject_cat << '\t' << r->head_object_cat << '\t'
        << join_ints(r->body_subject_cat) << '\t' << join_ints(r->body_object_cat) << '\t'
        << format_double(r->confidence) << '\t' << r->body_support << '\n';
  }
}

RuleBank RuleBank::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rule bank: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("rule bank is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "#tkgr-rulebank\tv1") {
    throw std::runtime_error("unsupported rule bank schema in " + path + ": '" + line + "' (expected #tkgr-rulebank v1)");
  }
  RuleBank bank;
  if (!std::getline(in, line)) throw std::runtime_error("rule bank missing meta line: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::istringstream meta(line);
    std::string tag, field;
    meta >> tag;
    if (tag != "#meta") throw std::runtime_error("rule bank missing meta line: " + path);
    while (meta >> field) {
      size_t eq = field.find('=');
      if (eq == std::string::npos) continue;
      std::string key = field.substr(0, eq), value = field.substr(eq + 1);
      if (key == "mode") bank.meta_.mode = parse_mode(value);
      else if (key == "n") bank.meta_.num_walks = std::stoi(value);
      else if (key == "b_max") bank.meta_.max_rule_length = std::stoi(value);
      else if (key == "samples") bank.meta_.confidence_samples = std::stoi(value);
      else if (key == "seed") bank.meta_.seed = std::stoull(value);
      else if (key == "dataset_hash") bank.meta_.dataset_hash = std::stoull(value);
    }
  }
  size_t record = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++record;
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
    if (cols.size() != 14) {
      throw std::runtime_error("rule record " + std::to_string(record) + ": expected 14 fields, got " +
                               std::to_string(cols.size()));
    }
    try {
      Rule r;
      r.mode = parse_mode(cols[0]);
      r.length = std::stoi(cols[1]);
      size_t b = static_cast<size_t>(std::max(r.length, 0));
      r.head_relation = std::stoi(cols[2]);
      r.head_subject_ph = std::stoi(cols[3]);
      r.head_object_ph = std::stoi(cols[4]);
      r.body_relations = split_ints(cols[5], b, "relation", record);
      r.body_subject_ph = split_ints(cols[6], b, "subject placeholder", record);
      r.body_object_ph = split_ints(cols[7], b, "object placeholder", record);
      r.head_subject_cat = std::stoi(cols[8]);
      r.head_object_cat = std::stoi(cols[9]);
      r.body_subject_cat = split_ints(cols[10], b, "subject category", record);
      r.body_object_cat = split_ints(cols[11], b, "object category", record);
      r.confidence = std::stod(cols[12]);
      r.body_support = std::stoll(cols[13]);
      r.validate();
      bank.insert(std::move(r));
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("rule record " + std::to_string(record) + ": " + e.what());
    }
  }
  return bank;
}

}  // namespace tkgr
