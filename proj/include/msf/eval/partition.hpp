#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "msf/error.hpp"
#include "msf/eval/split.hpp"

namespace msf {

struct ValidationPartition {
  std::vector<ClassId> pseudo_unseen;       // seen classes held out as stand-in unseen classes
  std::vector<std::size_t> inner_train;     // row ids used to fit the inner models
  std::vector<std::size_t> gate_val;        // row ids used to fit the gate
  std::vector<int> gate_val_is_unseen;      // 1 for rows of pseudo-unseen classes
};

// Splits seen training rows for gate fitting: |unseen| seen classes are drawn
// as pseudo-unseen and all their rows go to the gate set; from each remaining
// class a `holdout_fraction` slice also goes to the gate set (at least one row
// when the class has two or more). Everything else is inner training data.
inline ValidationPartition partition_validation(std::span<const ClassId> labels, const SplitSpec& split,
                                                std::uint64_t seed, double holdout_fraction = 0.1) {
  if (split.seen.size() <= split.unseen.size()) {
    throw PartitionError("need more seen classes than unseen classes to draw pseudo-unseen classes");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout_fraction must be in [0, 1)");
  std::map<ClassId, std::vector<std::size_t>> rows_by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!split.is_seen(labels[i])) {
      throw PartitionError("partition_validation: row " + std::to_string(i) + " is not a seen-class sample");
    }
    rows_by_class[labels[i]].push_back(i);
  }
  std::vector<ClassId> classes;
  for (const auto& [id, rows] : rows_by_class) classes.push_back(id);
  if (classes.size() <= split.unseen.size()) {
    throw PartitionError("training data covers too few seen classes for the validation partition");
  }

  std::mt19937_64 rng(seed);
  std::vector<ClassId> drawn = classes;
  std::shuffle(drawn.begin(), drawn.end(), rng);
  drawn.resize(split.unseen.size());
  std::sort(drawn.begin(), drawn.end());
  const std::set<ClassId> pseudo(drawn.begin(), drawn.end());

  ValidationPartition part;
  part.pseudo_unseen = drawn;
  std::vector<std::pair<std::size_t, int>> gate;
  for (const auto& [id, rows] : rows_by_class) {
    if (pseudo.contains(id)) {
      for (std::size_t r : rows) gate.emplace_back(r, 1);
      continue;
    }
    std::vector<std::size_t> shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::size_t hold = static_cast<std::size_t>(std::ceil(holdout_fraction * static_cast<double>(rows.size())));
    if (holdout_fraction > 0.0 && rows.size() >= 2) hold = std::max<std::size_t>(hold, 1);
    hold = std::min(hold, rows.size() - 1);
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      if (i < hold) {
        gate.emplace_back(shuffled[i], 0);
      } else {
        part.inner_train.push_back(shuffled[i]);
      }
    }
  }
  std::sort(gate.begin(), gate.end());
  std::sort(part.inner_train.begin(), part.inner_train.end());
  for (const auto& [row, flag] : gate) {
    part.gate_val.push_back(row);
    part.gate_val_is_unseen.push_back(flag);
  }
  return part;
}

}  // namespace msf
