#include "vocab.h"

#include <stdexcept>

namespace tkgr {

int32_t Vocab::intern(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  int32_t id = static_cast<int32_t>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

std::optional<int32_t> Vocab::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocab::name(int32_t id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocab id " + std::to_string(id) + " out of range");
  return names_[static_cast<size_t>(id)];
}

}  // namespace tkgr
