#include "commands.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

namespace tkgr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " file not given");
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " file does not exist: " + path);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("output directory not given");
  fs::create_directories(dir);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

json data_json(const DataConfig& data) {
  return json{{"train", data.train},
              {"valid", data.valid},
              {"test", data.test},
              {"category_map", data.category_map},
              {"format", data.format == Format::sextuple ? "sextuple" : "quadruple"},
              {"default_all_category", data.default_all_category}};
}

json apply_json(const ApplyParams& p) {
  return json{{"window", p.window},
              {"alpha", p.alpha},
              {"lambda", p.lambda},
              {"gamma", p.gamma},
              {"mode", to_string(p.mode)},
              {"stop", p.stop == ApplyParams::StopCount::distinct_score_vectors ? "distinct_score_vectors"
                                                                                : "distinct_candidates"}};
}

Splits load_data(const DataConfig& data) {
  require_file(data.train, "train");
  require_file(data.valid, "valid");
  require_file(data.test, "test");
  if (!data.category_map.empty()) require_file(data.category_map, "category map");
  return load_splits(data.train, data.valid, data.test, data.load_options());
}

TemporalGraph history_graph(const Splits& splits, History history) {
  switch (history) {
    case History::train:
      return merge_graphs({&splits.train});
    case History::train_valid:
      return merge_graphs({&splits.train, &splits.valid});
    case History::full:
      return merge_graphs({&splits.train, &splits.valid, &splits.test});
  }
  throw std::logic_error("unreachable");
}

std::string history_name(History h) {
  switch (h) {
    case History::train: return "train";
    case History::train_valid: return "train_valid";
    case History::full: return "full";
  }
  return "?";
}

RuleBank load_bank_checked(const std::string& path, uint64_t dataset_hash) {
  require_file(path, "rule bank");
  RuleBank bank = RuleBank::load(path);
  if (bank.meta().dataset_hash != 0 && bank.meta().dataset_hash != dataset_hash) {
    throw ConfigError("rule bank was learned on different data (vocabulary mismatch); dataset hash " +
                      std::to_string(dataset_hash) + " != bank hash " + std::to_string(bank.meta().dataset_hash));
  }
  return bank;
}

void write_per_query_log(const std::string& path, const EvalReport& report, const TemporalGraph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const Vocabs& v = g.vocabs();
  out << "subject\trelation\ttimestamp\tsubject_category\tnc\trank\treciprocal_rank\trules_applied\tpredictions\ttruth\n";
  for (const QueryLog& log : report.per_query) {
    const Query& q = log.query;
    out << v.entities.name(q.subject) << '\t' << v.relation_name(q.relation) << '\t' << g.time_label(q.t) << '\t'
        << v.categories.name(q.subject_cat) << '\t' << (log.nc ? 1 : 0) << '\t' << log.rank << '\t'
        << fmt(1.0 / static_cast<double>(log.rank)) << '\t' << log.rules_applied << '\t' << log.predictions << '\t';
    for (size_t i = 0; i < q.truth.size(); ++i) {
      if (i) out << '|';
      out << v.entities.name(q.truth[i]);
    }
    out << '\n';
  }
}

}  // namespace

LoadOptions DataConfig::load_options() const {
  LoadOptions opts;
  opts.format = format;
  opts.category_map_path = category_map;
  opts.default_all_category = default_all_category;
  return opts;
}

History parse_history(const std::string& s) {
  if (s == "train") return History::train;
  if (s == "train_valid" || s == "train+valid") return History::train_valid;
  if (s == "full") return History::full;
  throw ConfigError("unknown history '" + s + "' (expected train, train_valid, or full)");
}

void cmd_learn(const LearnConfig& config) {
  Splits splits = load_data(config.data);
  ensure_dir(config.out_dir);

  LearnStats stats;
  RuleBank bank = learn(splits.train, config.params, &stats);
  bank.meta().dataset_hash = splits.dataset_hash;
  bank.save(config.out_dir + "/rules.tsv");

  {
    std::ofstream out(config.out_dir + "/learn_stats.csv");
    out << "length,rules\n";
    for (int32_t b = 1; b <= config.params.max_rule_length; ++b) {
      auto it = stats.rules_per_length.find(b);
      out << b << ',' << (it == stats.rules_per_length.end() ? 0 : it->second) << '\n';
    }
  }
  {
    std::ofstream out(config.out_dir + "/support_histogram.csv");
    out << "body_support,rules\n";
    for (const auto& [support, count] : stats.support_histogram) {
      out << support << ',' << count << '\n';
    }
  }

  json meta{{"command", "learn"},
            {"version", kVersion},
            {"data", data_json(config.data)},
            {"dataset_hash", splits.dataset_hash},
            {"mode", to_string(config.params.mode)},
            {"num_walks", config.params.num_walks},
            {"max_rule_length", config.params.max_rule_length},
            {"confidence_samples", config.params.confidence_samples},
            {"seed", config.params.seed},
            {"workers", config.params.workers},
            {"rules", bank.size()}};
  write_json(config.out_dir + "/metadata.json", meta);
}

void cmd_evaluate(const EvalConfig& config) {
  Splits splits = load_data(config.data);
  ensure_dir(config.out_dir);
  RuleBank bank = load_bank_checked(config.bank_path, splits.dataset_hash);

  ApplyParams apply = config.apply;
  apply.mode = config.mode_override.value_or(bank.meta().mode);

  TemporalGraph history = history_graph(splits, config.history);
  BaselineModel baseline(splits.train);

  std::ofstream report_csv(config.out_dir + "/report.csv");
  if (!report_csv) throw std::runtime_error("cannot write report.csv");
  report_csv << "task,aggregation,walks,nc,mrr,h1,h3,h10,queries\n";
  for (Task task : config.tasks) {
    for (Aggregation agg : config.aggregations) {
      EvalReport report =
          evaluate(history, bank, splits.test, apply, task, agg, baseline, config.direction, config.workers);
      report_csv << to_string(task) << ',' << to_string(agg) << ',' << report.walks << ',' << fmt(report.nc_ratio)
                 << ',' << fmt(report.mrr) << ',' << fmt(report.hits1) << ',' << fmt(report.hits3) << ','
                 << fmt(report.hits10) << ',' << report.query_count << '\n';
      write_per_query_log(config.out_dir + "/per_query_" + to_string(task) + "_" + to_string(agg) + ".tsv", report,
                          history);
    }
  }

  json tasks = json::array();
  for (Task t : config.tasks) tasks.push_back(to_string(t));
  json aggs = json::array();
  for (Aggregation a : config.aggregations) aggs.push_back(to_string(a));
  json meta{{"command", "evaluate"},
            {"version", kVersion},
            {"data", data_json(config.data)},
            {"dataset_hash", splits.dataset_hash},
            {"bank", config.bank_path},
            {"bank_seed", bank.meta().seed},
            {"walks", bank.meta().num_walks},
            {"apply", apply_json(apply)},
            {"tasks", tasks},
            {"aggregations", aggs},
            {"direction", config.direction == Direction::both ? "both"
                          : config.direction == Direction::object ? "object"
                                                                  : "subject"},
            {"history", history_name(config.history)},
            {"baseline", "object_frequency"},
            {"workers", config.workers}};
  write_json(config.out_dir + "/metadata.json", meta);
}

void cmd_explain(const ExplainConfig& config, std::ostream& out) {
  Splits splits = load_data(config.data);
  RuleBank bank = load_bank_checked(config.bank_path, splits.dataset_hash);
  TemporalGraph history = history_graph(splits, config.history);
  const Vocabs& v = history.vocabs();

  auto subject = v.entities.find(config.subject);
  if (!subject) throw ConfigError("unknown entity '" + config.subject + "'");
  auto base_relation = v.relations.find(config.relation);
  if (!base_relation) throw ConfigError("unknown relation '" + config.relation + "'");

  ApplyParams apply = config.apply;
  apply.mode = config.mode_override.value_or(bank.meta().mode);

  Query query;
  query.subject = *subject;
  query.relation = config.inverse ? history.inverse_relation(*base_relation) : *base_relation;
  query.t = history.normalize_query_time(config.timestamp);
  query.subject_cat = history.category_of(query.subject);

  out << "query: (" << config.subject << ", " << v.relation_name(query.relation) << ", ?, " << config.timestamp
      << ", " << v.categories.name(query.subject_cat) << ", ?)\n";
  out << "mode: " << to_string(apply.mode) << ", window " << apply.window << ", history " << history_name(config.history)
      << "\n\n";

  CandidateTable table = retrieve(query, bank, history, apply);
  std::vector<const Rule*> rules = select_rules(bank, query.relation, query.subject_cat, apply.mode);

  // Re-walk the same rule order for the trace; retrieve() applied exactly
  // table.rules_applied of them.
  WindowView view = history.window(query.t, apply.window);
  int64_t shown = 0;
  for (const Rule* rule : rules) {
    if (shown == table.rules_applied) break;
    ++shown;
    auto grounded = ground_rule(*rule, query, view);
    out << "rule " << shown << ": " << rule->render(v) << '\n';
    if (grounded.empty()) {
      out << "  no grounding in window\n";
      continue;
    }
    for (const auto& [candidate, tau] : grounded) {
      out << "  -> " << v.entities.name(candidate) << " (category " << v.categories.name(history.category_of(candidate))
          << "), tau=" << history.time_label(tau)
          << ", score=" << fmt(score(rule->confidence, tau, query.t, apply.alpha, apply.lambda)) << '\n';
    }
  }
  if (rules.empty()) out << "no rules match the query relation" << (apply.mode == Mode::ctlogic ? " and category" : "")
                         << '\n';

  out << '\n';
  if (table.empty()) {
    out << "no candidates (N.C.): baseline fallback would be used\n";
    BaselineModel baseline(splits.train);
    const auto& ranking = config.task == Task::category ? std::vector<EntityId>() : baseline.entity_ranking(query.relation);
    if (!ranking.empty()) {
      out << "baseline top " << std::min<size_t>(ranking.size(), static_cast<size_t>(config.max_candidates)) << ":\n";
      for (size_t i = 0; i < ranking.size() && i < static_cast<size_t>(config.max_candidates); ++i) {
        out << "  " << (i + 1) << ". " << v.entities.name(ranking[i]) << '\n';
      }
    }
    return;
  }

  CandidateTable final_table = table;
  if (config.task == Task::category) final_table = to_categories(table, v.entity_category);
  Ranking ranking = config.aggregation == Aggregation::noisy_or ? noisy_or(final_table) : max_plus(final_table);
  out << "ranking (" << to_string(config.task) << ", " << to_string(config.aggregation) << "):\n";
  for (size_t i = 0; i < ranking.size() && i < static_cast<size_t>(config.max_candidates); ++i) {
    const auto& rc = ranking[i];
    const std::string name = config.task == Task::category ? v.categories.name(rc.id) : v.entities.name(rc.id);
    out << "  " << (i + 1) << ". " << name << "  score=" << fmt(rc.final_score) << "  predictions="
        << rc.prediction_count << '\n';
  }
}

void cmd_stats(const StatsConfig& config, std::ostream& out) {
  require_file(config.bank_path, "rule bank");
  RuleBank bank = RuleBank::load(config.bank_path);
  const BankMeta& meta = bank.meta();
  out << "rule bank: " << config.bank_path << '\n';
  out << "mode: " << to_string(meta.mode) << ", walks: " << meta.num_walks << ", b_max: " << meta.max_rule_length
      << ", samples: " << meta.confidence_samples << ", seed: " << meta.seed << '\n';
  out << "rules: " << bank.size() << '\n';

  std::map<int32_t, int64_t> per_length;
  std::map<int64_t, int64_t> support_hist;
  for (const Rule* r : bank.all_rules()) {
    ++per_length[r->length];
    ++support_hist[r->body_support];
  }
  out << "rules per length:";
  for (const auto& [b, count] : per_length) out << "  b=" << b << ": " << count;
  out << '\n';
  out << "body support histogram:";
  for (const auto& [s, count] : support_hist) out << "  " << s << ": " << count;
  out << '\n';

  if (config.print_rules > 0) {
    if (!config.data) throw ConfigError("printing rules with names requires the dataset flags");
    Splits splits = load_data(*config.data);
    const Vocabs& v = splits.train.vocabs();
    std::vector<const Rule*> rules = bank.all_rules();
    std::sort(rules.begin(), rules.end(), [](const Rule* a, const Rule* b) { return rule_order(*a, *b); });
    out << '\n';
    for (size_t i = 0; i < rules.size() && i < static_cast<size_t>(config.print_rules); ++i) {
      out << rules[i]->render(v) << '\n';
    }
  }
}

void cmd_categorize(const CategorizeConfig& config) {
  require_file(config.embeddings, "embedding");
  ensure_dir(config.out_dir);
  EmbeddingMatrix embeddings = load_embeddings(config.embeddings);

  GmmOptions opts;
  opts.covariance = config.covariance;
  opts.max_iters = config.max_iters;
  opts.tol = config.tol;
  ModelSelection sel = select_model(embeddings.data, config.dims_grid, config.k_grid, config.seed, opts,
                                    config.restarts, config.workers, config.force);
  std::vector<int32_t> labels = assign_categories(sel.model, sel.projection, embeddings);
  write_category_map(config.out_dir + "/entity_categories.tsv", embeddings.names, labels);

  {
    std::ofstream out(config.out_dir + "/model_scores.csv");
    out << "dims,k,bic,aic,log_likelihood,failed\n";
    for (const CellScore& c : sel.table) {
      out << c.dims << ',' << c.k << ',' << fmt(c.bic) << ',' << fmt(c.aic) << ',' << fmt(c.log_likelihood) << ','
          << (c.failed ? 1 : 0) << '\n';
    }
  }

  double agreement = -1.0;
  if (config.kmeans_check) {
    Rng rng(hash_mix(config.seed, 0x6b6d65616e73ull));
    Eigen::MatrixXd reduced = sel.projection.transform(embeddings.data);
    KmeansResult km = kmeans(reduced, sel.k, rng);
    agreement = co_assignment_agreement(labels, km.labels);
  }

  json meta{{"command", "categorize"},
            {"version", kVersion},
            {"embeddings", config.embeddings},
            {"selected_dims", sel.dims},
            {"selected_k", sel.k},
            {"forced", config.force.has_value()},
            {"covariance", config.covariance == Covariance::diagonal ? "diagonal" : "full"},
            {"restarts", config.restarts},
            {"max_iters", config.max_iters},
            {"tol", config.tol},
            {"seed", config.seed},
            {"log_likelihood", sel.model.log_likelihood},
            {"kmeans_co_assignment", agreement},
            {"entities", embeddings.names.size()}};
  write_json(config.out_dir + "/metadata.json", meta);
}

}  // namespace tkgr
