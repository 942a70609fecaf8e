#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "msf/error.hpp"
#include "msf/semantic/fusion.hpp"

namespace msf {

// Disjoint seen/unseen class sets.
struct SplitSpec {
  std::set<ClassId> seen;
  std::set<ClassId> unseen;
  std::string name;

  bool is_seen(ClassId id) const { return seen.contains(id); }
  bool is_unseen(ClassId id) const { return unseen.contains(id); }

  std::vector<ClassId> seen_ids() const { return {seen.begin(), seen.end()}; }
  std::vector<ClassId> unseen_ids() const { return {unseen.begin(), unseen.end()}; }

  std::set<ClassId> all_ids() const {
    std::set<ClassId> all = seen;
    all.insert(unseen.begin(), unseen.end());
    return all;
  }
};

// Seen/unseen class counts of the standard benchmark splits.
inline const std::map<std::string, std::pair<std::size_t, std::size_t>>& known_split_sizes() {
  static const std::map<std::string, std::pair<std::size_t, std::size_t>> sizes = {
      {"ntu60-55-5", {55, 5}},
      {"ntu60-48-12", {48, 12}},
      {"ntu120-110-10", {110, 10}},
      {"ntu120-96-24", {96, 24}},
  };
  return sizes;
}

// Checks disjointness, non-emptiness, coverage of `all_classes` when given,
// and the class counts of a named benchmark split.
inline void validate_split(const SplitSpec& split, const std::set<ClassId>* all_classes = nullptr) {
  if (split.seen.empty() || split.unseen.empty()) throw ConfigError("split needs seen and unseen classes");
  for (ClassId id : split.unseen) {
    if (split.seen.contains(id)) throw ConfigError("class " + std::to_string(id) + " is both seen and unseen");
  }
  if (all_classes && split.all_ids() != *all_classes) {
    throw ConfigError("split does not cover exactly the dataset's classes");
  }
  const auto& known = known_split_sizes();
  if (auto it = known.find(split.name); it != known.end()) {
    if (split.seen.size() != it->second.first || split.unseen.size() != it->second.second) {
      throw ConfigError("split " + split.name + " must have " + std::to_string(it->second.first) + " seen and " +
                        std::to_string(it->second.second) + " unseen classes");
    }
  }
}

}  // namespace msf
