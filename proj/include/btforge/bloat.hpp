#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "btforge/behavior_tree.hpp"

namespace btforge {

struct RemovedSubtree {
  std::string description;  // outline of the removed subtree
  std::size_t nodes_saved = 0;
};

struct PruneReport {
  std::vector<RemovedSubtree> removed;
  std::size_t initial_nodes = 0;
  std::size_t final_nodes = 0;
  double initial_fitness = 0.0;
  double final_fitness = 0.0;
  std::size_t oracle_calls = 0;  // distinct trees evaluated

  std::string to_json() const;
};

using FitnessOracle = std::function<double(const BehaviorTree&)>;

/// Breadth-first removal of subtrees that do not lower the oracle's fitness,
/// restarting the scan after every accepted removal. Single-child selectors,
/// sequences and 1-of-1 parallels left behind are then spliced out, and the
/// two passes alternate until neither changes the tree.
std::pair<BehaviorTree, PruneReport> prune(const BehaviorTree& tree, const FitnessOracle& oracle);

}  // namespace btforge
