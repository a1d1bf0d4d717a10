#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.h"

namespace {

using namespace tkgr;

void add_data_flags(CLI::App* cmd, DataConfig& data, std::string& format) {
  cmd->add_option("--train", data.train, "training split TSV")->required();
  cmd->add_option("--valid", data.valid, "validation split TSV")->required();
  cmd->add_option("--test", data.test, "test split TSV")->required();
  cmd->add_option("--format", format, "dataset format: quadruple|sextuple");
  cmd->add_option("--categories", data.category_map, "entity<TAB>category map file");
  cmd->add_flag("--default-category", data.default_all_category,
                "give every entity the single category ALL (quadruple data without a map)");
}

int run(int argc, char** argv) {
  CLI::App app{"Temporal knowledge graph forecasting with mined temporal logic rules"};
  app.require_subcommand(1);
  app.set_config("--config");

  // learn
  LearnConfig learn_cfg;
  std::string learn_format = "quadruple", learn_mode = "tlogic";
  auto* learn_cmd = app.add_subcommand("learn", "mine a rule bank from the training split");
  add_data_flags(learn_cmd, learn_cfg.data, learn_format);
  learn_cmd->add_option("--mode", learn_mode, "rule format: tlogic|ctlogic");
  learn_cmd->add_option("-n,--walks", learn_cfg.params.num_walks, "random walks per relation (n)");
  learn_cmd->add_option("--b-max", learn_cfg.params.max_rule_length, "maximum rule length");
  learn_cmd->add_option("--samples", learn_cfg.params.confidence_samples,
                        "confidence grounding samples (0 = exhaustive)");
  learn_cmd->add_option("--seed", learn_cfg.params.seed, "random seed");
  learn_cmd->add_option("--workers", learn_cfg.params.workers, "worker threads");
  learn_cmd->add_option("-o,--out", learn_cfg.out_dir, "output directory")->required();

  // evaluate
  EvalConfig eval_cfg;
  std::string eval_format = "quadruple", eval_mode, eval_dir = "both", eval_history = "full";
  std::vector<std::string> eval_tasks{"entity"}, eval_aggs{"noisy_or"};
  std::string eval_stop = "distinct_score_vectors";
  auto* eval_cmd = app.add_subcommand("evaluate", "answer test queries and report MRR / Hits@k / N.C.");
  add_data_flags(eval_cmd, eval_cfg.data, eval_format);
  eval_cmd->add_option("--bank", eval_cfg.bank_path, "rule bank file")->required();
  eval_cmd->add_option("--mode", eval_mode, "override the bank's rule format");
  eval_cmd->add_option("-w,--window", eval_cfg.apply.window, "history window size");
  eval_cmd->add_option("--alpha", eval_cfg.apply.alpha, "score mix weight");
  eval_cmd->add_option("--lambda", eval_cfg.apply.lambda, "time-decay rate");
  eval_cmd->add_option("--gamma", eval_cfg.apply.gamma, "candidate stopping threshold");
  eval_cmd->add_option("--stop", eval_stop, "gamma counts: distinct_score_vectors|distinct_candidates");
  eval_cmd->add_option("--task", eval_tasks, "entity|category (repeatable)");
  eval_cmd->add_option("--agg", eval_aggs, "noisy_or|max_plus (repeatable)");
  eval_cmd->add_option("--direction", eval_dir, "query direction: object|subject|both");
  eval_cmd->add_option("--history", eval_history, "grounding history: train|train_valid|full");
  eval_cmd->add_option("--workers", eval_cfg.workers, "worker threads");
  eval_cmd->add_option("-o,--out", eval_cfg.out_dir, "output directory")->required();

  // explain
  ExplainConfig explain_cfg;
  std::string explain_format = "quadruple", explain_mode, explain_history = "full", explain_agg = "noisy_or",
              explain_task = "entity";
  auto* explain_cmd = app.add_subcommand("explain", "trace the rules and groundings behind one query");
  add_data_flags(explain_cmd, explain_cfg.data, explain_format);
  explain_cmd->add_option("--bank", explain_cfg.bank_path, "rule bank file")->required();
  explain_cmd->add_option("--subject", explain_cfg.subject, "query subject entity name")->required();
  explain_cmd->add_option("--relation", explain_cfg.relation, "query relation name")->required();
  explain_cmd->add_option("--timestamp", explain_cfg.timestamp, "raw query timestamp")->required();
  explain_cmd->add_flag("--inverse", explain_cfg.inverse, "query the inverse relation (subject prediction)");
  explain_cmd->add_option("--mode", explain_mode, "override the bank's rule format");
  explain_cmd->add_option("-w,--window", explain_cfg.apply.window, "history window size");
  explain_cmd->add_option("--alpha", explain_cfg.apply.alpha, "score mix weight");
  explain_cmd->add_option("--lambda", explain_cfg.apply.lambda, "time-decay rate");
  explain_cmd->add_option("--gamma", explain_cfg.apply.gamma, "candidate stopping threshold");
  explain_cmd->add_option("--history", explain_history, "grounding history: train|train_valid|full");
  explain_cmd->add_option("--agg", explain_agg, "ranking aggregation: noisy_or|max_plus");
  explain_cmd->add_option("--task", explain_task, "entity|category");
  explain_cmd->add_option("--top", explain_cfg.max_candidates, "candidates to print");

  // stats
  StatsConfig stats_cfg;
  DataConfig stats_data;
  std::string stats_format = "quadruple";
  auto* stats_cmd = app.add_subcommand("stats", "summarize a rule bank");
  stats_cmd->add_option("--bank", stats_cfg.bank_path, "rule bank file")->required();
  stats_cmd->add_option("--print-rules", stats_cfg.print_rules, "render the top N rules with names");
  stats_cmd->add_option("--train", stats_data.train, "training split TSV (for names)");
  stats_cmd->add_option("--valid", stats_data.valid, "validation split TSV");
  stats_cmd->add_option("--test", stats_data.test, "test split TSV");
  stats_cmd->add_option("--format", stats_format, "dataset format: quadruple|sextuple");
  stats_cmd->add_option("--categories", stats_data.category_map, "entity<TAB>category map file");
  stats_cmd->add_flag("--default-category", stats_data.default_all_category, "single ALL category");

  // categorize
  CategorizeConfig cat_cfg;
  std::string cat_cov = "diagonal";
  std::vector<int32_t> force_pair;
  auto* cat_cmd = app.add_subcommand("categorize", "cluster entity-name embeddings into categories");
  cat_cmd->add_option("--embeddings", cat_cfg.embeddings, "entity<TAB>v1,v2,... embedding TSV")->required();
  cat_cmd->add_option("--dims", cat_cfg.dims_grid, "PCA dimension grid");
  cat_cmd->add_option("--clusters", cat_cfg.k_grid, "GMM component grid");
  cat_cmd->add_option("--force", force_pair, "force a (dims, k) pair regardless of BIC")->expected(2);
  cat_cmd->add_option("--covariance", cat_cov, "diagonal|full");
  cat_cmd->add_option("--restarts", cat_cfg.restarts, "EM restarts per grid cell");
  cat_cmd->add_option("--max-iters", cat_cfg.max_iters, "EM iteration cap");
  cat_cmd->add_option("--tol", cat_cfg.tol, "EM log-likelihood tolerance");
  cat_cmd->add_option("--seed", cat_cfg.seed, "random seed");
  cat_cmd->add_option("--workers", cat_cfg.workers, "worker threads");
  cat_cmd->add_flag("!--no-kmeans-check", cat_cfg.kmeans_check, "skip the K-means agreement cross-check");
  cat_cmd->add_option("-o,--out", cat_cfg.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*learn_cmd) {
      learn_cfg.data.format = parse_format(learn_format);
      learn_cfg.params.mode = parse_mode(learn_mode);
      cmd_learn(learn_cfg);
      std::cout << "wrote rule bank to " << learn_cfg.out_dir << "/rules.tsv\n";
    } else if (*eval_cmd) {
      eval_cfg.data.format = parse_format(eval_format);
      if (!eval_mode.empty()) eval_cfg.mode_override = parse_mode(eval_mode);
      eval_cfg.direction = parse_direction(eval_dir);
      eval_cfg.history = parse_history(eval_history);
      if (eval_stop == "distinct_candidates") {
        eval_cfg.apply.stop = ApplyParams::StopCount::distinct_candidates;
      } else if (eval_stop != "distinct_score_vectors") {
        throw ConfigError("unknown stop mode '" + eval_stop + "'");
      }
      eval_cfg.tasks.clear();
      for (const auto& t : eval_tasks) eval_cfg.tasks.push_back(parse_task(t));
      eval_cfg.aggregations.clear();
      for (const auto& a : eval_aggs) eval_cfg.aggregations.push_back(parse_aggregation(a));
      cmd_evaluate(eval_cfg);
      std::cout << "wrote report to " << eval_cfg.out_dir << "/report.csv\n";
    } else if (*explain_cmd) {
      explain_cfg.data.format = parse_format(explain_format);
      if (!explain_mode.empty()) explain_cfg.mode_override = parse_mode(explain_mode);
      explain_cfg.history = parse_history(explain_history);
      explain_cfg.aggregation = parse_aggregation(explain_agg);
      explain_cfg.task = parse_task(explain_task);
      cmd_explain(explain_cfg, std::cout);
    } else if (*stats_cmd) {
      if (!stats_data.train.empty()) {
        stats_data.format = parse_format(stats_format);
        stats_cfg.data = stats_data;
      }
      cmd_stats(stats_cfg, std::cout);
    } else if (*cat_cmd) {
      if (cat_cov == "full") {
        cat_cfg.covariance = Covariance::full;
      } else if (cat_cov != "diagonal") {
        throw ConfigError("unknown covariance '" + cat_cov + "'");
      }
      if (!force_pair.empty()) cat_cfg.force = std::make_pair(force_pair[0], force_pair[1]);
      cmd_categorize(cat_cfg);
      std::cout << "wrote categories to " << cat_cfg.out_dir << "/entity_categories.tsv\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
