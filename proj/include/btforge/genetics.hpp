#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "btforge/behavior_tree.hpp"
#include "btforge/random.hpp"

namespace btforge {

/// Node kinds the GP operators may create.
struct NodePool {
  bool selector = true;
  bool sequence = true;
  bool parallel = false;
  bool decorator = false;
  bool action = true;
  bool condition = true;

  static NodePool all() { return {true, true, true, true, true, true}; }
  bool has_execution() const { return action || condition; }
  bool has_control() const { return selector || sequence || parallel || decorator; }
};

enum class SelectionMethod { Naive, RankSpace, DiversityRank };

const char* to_string(SelectionMethod m) noexcept;

struct GpConfig {
  std::size_t population_size = 24;
  std::size_t max_generations = 20;
  double crossover_probability = 0.7;
  std::size_t anneal_initial_mutations = 4;  // k0
  double anneal_decay = 0.7;
  SelectionMethod selection = SelectionMethod::RankSpace;
  double rank_pc = 2.0 / 3.0;  // probability of the top-ranked individual
  std::size_t elitism = 1;
  std::uint64_t rng_seed = 0;
  NodePool pool;
  bool strict_mutation = false;  // Action<->Action and Condition<->Condition only
  bool mutation = true;          // false forces k = 0
  std::size_t max_tree_nodes = 200;
  std::size_t crossover_retries = 10;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void check() const;
};

struct Individual {
  BehaviorTree tree;
  std::optional<double> fitness;
  std::optional<double> survival;
};

struct Population {
  std::vector<Individual> individuals;
  std::size_t generation = 0;

  std::size_t size() const noexcept { return individuals.size(); }
};

// ---------------------------------------------------------------------------
// Variation
// ---------------------------------------------------------------------------

/// Swaps uniformly chosen subtrees (roots allowed). If an offspring would
/// exceed `max_nodes`, node choice is retried up to `retries` times before
/// the parents are returned unchanged.
std::pair<BehaviorTree, BehaviorTree> crossover(const BehaviorTree& a, const BehaviorTree& b, Rng& rng,
                                                std::size_t max_nodes = 200, std::size_t retries = 10);

/// Replaces min(k, size) distinct nodes by random nodes of the same category
/// (execution or control). Control replacements keep their children.
BehaviorTree mutate(const BehaviorTree& tree, std::size_t k, Rng& rng, const NodePool& pool, bool strict = false);

/// k = max(1, round(k0 * decay^generation)).
std::size_t anneal_schedule(std::size_t generation, const GpConfig& config);

BehaviorTree random_leaf(Rng& rng, const NodePool& pool);
/// Random valid tree with 1..max_nodes nodes.
BehaviorTree random_tree(Rng& rng, std::size_t max_nodes, const NodePool& pool);

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

struct SelectionResult {
  std::vector<double> probabilities;
  /// Naive selection with zero total fitness degrades to uniform.
  bool uniform_fallback = false;
};

/// Normalized distance between node-label multisets, in [0, 1].
double tree_distance(const BehaviorTree& a, const BehaviorTree& b);

/// Mean distance of each individual to all the others. Singletons score 0.
std::vector<double> diversity_scores(const Population& population);

/// Indices sorted by descending fitness; ties go to the smaller tree, then
/// to the lower index.
std::vector<std::size_t> rank_order(const Population& population);

/// Survival probabilities for every individual (all fitness values must be set).
/// `rank_pc` is used by RankSpace; `diversity` by DiversityRank (computed
/// from the population when absent).
SelectionResult selection_probabilities(const Population& population, SelectionMethod method, double rank_pc = 2.0 / 3.0,
                                        const std::vector<double>* diversity = nullptr);

/// Elites are carried over unchanged; the rest are sampled with replacement,
/// paired, crossed over with the configured probability and mutated with
/// k = anneal_schedule(generation). `mutation_rng` is a separate stream.
Population select_next_population(const Population& population, const std::vector<double>& probabilities,
                                  const GpConfig& config, Rng& rng, Rng& mutation_rng);

// ---------------------------------------------------------------------------
// Generational loop
// ---------------------------------------------------------------------------

using FitnessFn = std::function<double(const BehaviorTree&)>;
using StopFn = std::function<bool(const Individual& best)>;

struct EvolutionResult {
  Individual best;
  Population final_population;
  std::size_t generations = 0;  // generations evaluated
  bool stopped = false;          // the stop predicate fired
};

/// Evaluates, checks `stop` on the generation's best, and breeds, until the
/// predicate fires or max_generations have been evaluated. The best
/// individual ever evaluated is returned.
EvolutionResult evolve(Population initial, const GpConfig& config, const FitnessFn& fitness, const StopFn& stop);

}  // namespace btforge
