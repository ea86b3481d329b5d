#include "btforge/bloat.hpp"

#include <unordered_map>

#include "btforge/text.hpp"
#include "json.hpp"

namespace btforge {

std::string PruneReport::to_json() const {
  nlohmann::json j;
  j["initialNodes"] = initial_nodes;
  j["finalNodes"] = final_nodes;
  j["initialFitness"] = initial_fitness;
  j["finalFitness"] = final_fitness;
  j["oracleCalls"] = oracle_calls;
  j["removedSubtrees"] = nlohmann::json::array();
  for (const RemovedSubtree& r : removed) {
    j["removedSubtrees"].push_back({{"subtree", r.description}, {"nodesSaved", r.nodes_saved}});
  }
  return j.dump(2);
}

namespace {

class MemoOracle {
 public:
  explicit MemoOracle(const FitnessOracle& oracle) : oracle_(oracle) {}

  double operator()(const BehaviorTree& t) {
    auto key = print(t);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const double g = oracle_(t);
    cache_.emplace(std::move(key), g);
    return g;
  }
  std::size_t calls() const { return cache_.size(); }

 private:
  const FitnessOracle& oracle_;
  std::unordered_map<std::string, double> cache_;
};

bool spliceable(const NodeKind& k, std::size_t arity) {
  if (arity != 1) return false;
  if (std::holds_alternative<Selector>(k) || std::holds_alternative<Sequence>(k)) return true;
  const auto* par = std::get_if<Parallel>(&k);
  return par && par->threshold == 1;
}

// One full removal pass; returns true if anything was committed.
bool removal_pass(BehaviorTree& current, double& fitness, MemoOracle& oracle, PruneReport& report) {
  bool changed = false;
  bool committed = true;
  while (committed) {
    committed = false;
    const auto order = enumerate_subtrees(current);
    for (std::size_t i = 1; i < order.size(); ++i) {
      const NodeIndex n = order[i];
      if (!removable(current, n)) continue;
      BehaviorTree candidate = remove_subtree(current, n);
      const double g = oracle(candidate);
      if (g >= fitness) {
        report.removed.push_back({to_outline(extract_subtree(current, n)), current.size() - candidate.size()});
        current = std::move(candidate);
        fitness = g;
        committed = changed = true;
        break;  // restart from the first index
      }
    }
  }
  return changed;
}

bool splice_pass(BehaviorTree& current, double& fitness, MemoOracle& oracle, PruneReport& report) {
  bool changed = false;
  bool committed = true;
  while (committed) {
    committed = false;
    for (NodeIndex n : enumerate_subtrees(current)) {
      const Node& node = current.node(n);
      if (!spliceable(node.kind, node.children.size())) continue;
      BehaviorTree candidate = replace_subtree(current, n, extract_subtree(current, node.children.front()));
      const double g = oracle(candidate);
      if (g >= fitness) {
        report.removed.push_back({label(node.kind), current.size() - candidate.size()});
        current = std::move(candidate);
        fitness = g;
        committed = changed = true;
        break;
      }
    }
  }
  return changed;
}

}  // namespace

std::pair<BehaviorTree, PruneReport> prune(const BehaviorTree& tree, const FitnessOracle& oracle) {
  MemoOracle memo(oracle);
  PruneReport report;
  BehaviorTree current = tree;
  double fitness = memo(current);
  report.initial_nodes = tree.size();
  report.initial_fitness = fitness;

  bool changed = true;
  while (changed) {
    changed = removal_pass(current, fitness, memo, report);
    changed = splice_pass(current, fitness, memo, report) || changed;
  }

  report.final_nodes = current.size();
  report.final_fitness = fitness;
  report.oracle_calls = memo.calls();
  return {std::move(current), std::move(report)};
}

}  // namespace btforge
