#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "btforge/behavior_tree.hpp"
#include "btforge/genetics.hpp"
#include "btforge/platform.hpp"

namespace btforge {

struct LearnerConfig {
  std::size_t tau = 60;  // moving window, ticks
  double greedy_improvement_epsilon = 1e-3;
  std::size_t max_phases = 64;
  GpConfig gp;
  std::uint64_t rng_seed = 0;
  FitnessWeights weights;
  bool prune = true;

  void check() const;
};

struct ConditionDelta {
  std::vector<ConditionId> became_true;   // sorted
  std::vector<ConditionId> became_false;  // sorted
  std::size_t window_start = 0;
  std::size_t window_end = 0;

  bool empty() const noexcept { return became_true.empty() && became_false.empty(); }
  bool same_flips(const ConditionDelta& o) const {
    return became_true == o.became_true && became_false == o.became_false;
  }
};

struct WindowVerdict {
  bool improving = false;
  ConditionDelta delta;
};

/// Judges the last min(tau, length) steps of an episode prefix holding
/// `steps` steps (defaults to the whole episode). Conditions are compared
/// at the two window endpoints only.
WindowVerdict monitor_window(const Episode& episode, std::size_t tau, double epsilon,
                             std::optional<std::size_t> steps = std::nullopt);

/// seq(cond c for c in C_T, inv(cond c) for c in C_F). Throws
/// std::invalid_argument on an empty delta.
BehaviorTree compose_condition_tree(const ConditionDelta& delta);

/// The tree a candidate is judged in. With no context the candidate is the
/// whole tree; otherwise it becomes the action part of a new increment:
/// sel(seq(guard, candidate), context).
struct Insertion {
  std::optional<BehaviorTree> context;
  std::optional<BehaviorTree> guard;
  std::size_t stall_tick = 0;   // steps after which the context stopped improving
  double baseline_gamma = 0.0;  // context γ at stall_tick
  double baseline_final = 0.0;  // context γ at the end of its episode

  BehaviorTree install(const BehaviorTree& candidate) const;
};

/// Runs the installed candidate and compares it against the insertion's
/// baseline: γ must rise by more than epsilon within tau steps of the stall
/// tick and must not end lower than the context.
bool improves(const Episode& candidate, const Insertion& at, const LearnerConfig& config);

/// Tries each action in the order right, jump, shoot, left, crouch and
/// returns the first one that improves.
std::optional<BehaviorTree> learn_single_action(const Insertion& at, std::shared_ptr<const Level> level,
                                                const LearnerConfig& config);

struct GpOutcome {
  BehaviorTree tree;
  double gamma = 0.0;
  bool improved = false;  // false: budget exhausted, tree is best-so-far
  std::size_t generations = 0;
};

/// Evolves sel/seq pairs of random leaves. `initial` overrides the random
/// starting population. `stream` selects the sub-stream of config.rng_seed.
GpOutcome learn_bt_gp(const Insertion& at, std::shared_ptr<const Level> level, const LearnerConfig& config,
                      std::uint64_t stream = 0, std::optional<Population> initial = std::nullopt);

struct PhaseRecord {
  std::size_t phase = 0;
  std::string method;  // "greedy" or "gp"
  double gamma = 0.0;  // final γ of the committed tree
  std::size_t nodes = 0;
};

struct LearnResult {
  explicit LearnResult(BehaviorTree t) : tree(t), unpruned_tree(std::move(t)) {}

  BehaviorTree tree;           // pruned unless pruning is disabled
  BehaviorTree unpruned_tree;  // the composed tree before anti-bloat
  double gamma = 0.0;          // final γ of `tree`
  double unpruned_gamma = 0.0;
  bool reached_goal = false;
  bool budget_exhausted = false;
  std::size_t phases_used = 0;       // attempts, committed or not
  std::size_t increments = 0;        // committed phases after T0
  std::size_t gp_invocations = 0;
  bool gp_warning = false;           // some GP run ended without improvement
  std::vector<PhaseRecord> phases;   // committed phases
  std::vector<BehaviorTree> history; // T0, T1, ... as committed
  std::string prune_report_json;     // empty when pruning is disabled
};

/// Grows a tree phase by phase until it finishes the level or the phase
/// budget runs out, then prunes it. If no candidate improves in phase 0 the
/// best GP tree becomes T0 and gp_warning is set.
LearnResult learn(std::shared_ptr<const Level> level, const LearnerConfig& config);

std::string phase_log_jsonl(const std::vector<PhaseRecord>& phases);

}  // namespace btforge
