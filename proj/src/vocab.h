#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tkgr {

// Bidirectional string <-> id map; ids are assigned in first-seen order.
class Vocab {
 public:
  int32_t intern(const std::string& name);
  std::optional<int32_t> find(const std::string& name) const;
  const std::string& name(int32_t id) const;
  int32_t size() const { return static_cast<int32_t>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int32_t> ids_;
};

}  // namespace tkgr
