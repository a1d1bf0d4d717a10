#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cluster.h"
#include "evaluate.h"
#include "learner.h"
#include "retriever.h"
#include "types.h"

namespace tkgr {

inline constexpr const char* kVersion = "tkgr 0.1.0";

struct DataConfig {
  std::string train, valid, test;
  std::string category_map;
  Format format = Format::quadruple;
  bool default_all_category = false;

  LoadOptions load_options() const;
};

// Which facts the retriever may ground in (always clipped to t < t_q by
// the window).
enum class History { train, train_valid, full };
History parse_history(const std::string& s);

struct LearnConfig {
  DataConfig data;
  LearnParams params;
  std::string out_dir;
};

struct EvalConfig {
  DataConfig data;
  std::string bank_path;
  ApplyParams apply;  // apply.mode is overridden by the bank's mode unless mode_override is set
  std::optional<Mode> mode_override;
  std::vector<Task> tasks{Task::entity};
  std::vector<Aggregation> aggregations{Aggregation::noisy_or};
  Direction direction = Direction::both;
  History history = History::full;
  int workers = 1;
  std::string out_dir;
};

struct ExplainConfig {
  DataConfig data;
  std::string bank_path;
  std::string subject;
  std::string relation;
  int64_t timestamp = 0;
  bool inverse = false;  // explain the subject query (o, r^-1, ?)
  ApplyParams apply;
  std::optional<Mode> mode_override;
  History history = History::full;
  Aggregation aggregation = Aggregation::noisy_or;
  Task task = Task::entity;
  int32_t max_candidates = 10;
};

struct StatsConfig {
  std::string bank_path;
  std::optional<DataConfig> data;  // needed to render rules with names
  int32_t print_rules = 0;
};

struct CategorizeConfig {
  std::string embeddings;
  std::string out_dir;
  std::vector<int32_t> dims_grid{50};
  std::vector<int32_t> k_grid{12};
  std::optional<std::pair<int32_t, int32_t>> force;
  Covariance covariance = Covariance::diagonal;
  int32_t restarts = 5;
  int32_t max_iters = 200;
  double tol = 1e-6;
  uint64_t seed = 0;
  int workers = 1;
  bool kmeans_check = true;
};

void cmd_learn(const LearnConfig& config);
void cmd_evaluate(const EvalConfig& config);
void cmd_explain(const ExplainConfig& config, std::ostream& out);
void cmd_stats(const StatsConfig& config, std::ostream& out);
void cmd_categorize(const CategorizeConfig& config);

}  // namespace tkgr
