#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tkgr {

using EntityId = int32_t;
using RelationId = int32_t;
using CategoryId = int32_t;
using Time = int32_t;
using FactId = int32_t;

// Wildcard used in rule category slots when running in tlogic mode.
constexpr CategoryId kAnyCategory = -1;

enum class Mode { tlogic, ctlogic };
enum class Format { quadruple, sextuple };
enum class Task { entity, category };
enum class Aggregation { noisy_or, max_plus };
enum class Direction { object, subject, both };

// One timestamped, categorized edge in integer-id form.
struct Fact {
  EntityId subject = -1;
  RelationId relation = -1;
  EntityId object = -1;
  Time t = 0;
  CategoryId subject_cat = -1;
  CategoryId object_cat = -1;

  bool operator==(const Fact&) const = default;
};

// A link-forecasting query (s, r, ?, t). truth is only populated in
// evaluation mode and holds every correct object at that timestamp.
struct Query {
  EntityId subject = -1;
  RelationId relation = -1;
  Time t = 0;
  CategoryId subject_cat = -1;
  std::vector<EntityId> truth;
};

// Configuration mistakes (bad flags, missing files); the CLI maps this
// to exit code 2, everything else to 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string to_string(Mode m);
std::string to_string(Task t);
std::string to_string(Aggregation a);
Mode parse_mode(const std::string& s);
Format parse_format(const std::string& s);
Task parse_task(const std::string& s);
Aggregation parse_aggregation(const std::string& s);
Direction parse_direction(const std::string& s);

}  // namespace tkgr
