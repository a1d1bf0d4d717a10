#include "types.h"

namespace tkgr {

std::string to_string(Mode m) { return m == Mode::tlogic ? "tlogic" : "ctlogic"; }
std::string to_string(Task t) { return t == Task::entity ? "entity" : "category"; }
std::string to_string(Aggregation a) { return a == Aggregation::noisy_or ? "noisy_or" : "max_plus"; }

Mode parse_mode(const std::string& s) {
  if (s == "tlogic") return Mode::tlogic;
  if (s == "ctlogic") return Mode::ctlogic;
  throw ConfigError("unknown mode '" + s + "' (expected tlogic or ctlogic)");
}

Format parse_format(const std::string& s) {
  if (s == "quadruple" || s == "quad") return Format::quadruple;
  if (s == "sextuple" || s == "sext") return Format::sextuple;
  throw ConfigError("unknown format '" + s + "' (expected quadruple or sextuple)");
}

Task parse_task(const std::string& s) {
  if (s == "entity") return Task::entity;
  if (s == "category") return Task::category;
  throw ConfigError("unknown task '" + s + "' (expected entity or category)");
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "noisy_or" || s == "noisy-or") return Aggregation::noisy_or;
  if (s == "max_plus" || s == "max+") return Aggregation::max_plus;
  throw ConfigError("unknown aggregation '" + s + "' (expected noisy_or or max_plus)");
}

Direction parse_direction(const std::string& s) {
  if (s == "object") return Direction::object;
  if (s == "subject") return Direction::subject;
  if (s == "both") return Direction::both;
  throw ConfigError("unknown direction '" + s + "' (expected object, subject, or both)");
}

}  // namespace tkgr
