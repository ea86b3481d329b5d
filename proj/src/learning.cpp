#include "btforge/learning.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "btforge/bloat.hpp"
#include "btforge/log.hpp"
#include "btforge/text.hpp"
#include "json.hpp"

namespace btforge {

void LearnerConfig::check() const {
  if (tau < 1) throw std::invalid_argument("tau must be at least 1");
  if (max_phases < 1) throw std::invalid_argument("max phases must be at least 1");
  if (!(greedy_improvement_epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  gp.check();
}

WindowVerdict monitor_window(const Episode& episode, std::size_t tau, double epsilon,
                             std::optional<std::size_t> steps) {
  const std::size_t end = std::min(steps.value_or(episode.trace.size()), episode.trace.size());
  const std::size_t start = end - std::min(tau, end);
  WindowVerdict v;
  v.improving = episode.gamma_at(end) - episode.gamma_at(start) > epsilon;
  v.delta.window_start = start;
  v.delta.window_end = end;
  const ConditionSet& before = episode.conditions_at(start);
  const ConditionSet& after = episode.conditions_at(end);
  // ConditionId::index() follows (row, col, predicate) order.
  for (std::size_t i = 0; i < kConditionCount; ++i) {
    if (before.test(i) == after.test(i)) continue;
    (after.test(i) ? v.delta.became_true : v.delta.became_false).push_back(ConditionId::from_index(i));
  }
  return v;
}

BehaviorTree compose_condition_tree(const ConditionDelta& delta) {
  if (delta.empty()) throw std::invalid_argument("empty condition delta");
  std::vector<BehaviorTree> children;
  for (const ConditionId& c : delta.became_true) children.push_back(condition(c));
  for (const ConditionId& c : delta.became_false) children.push_back(invert(condition(c)));
  return sequence(std::move(children));
}

BehaviorTree Insertion::install(const BehaviorTree& candidate) const {
  if (!context) return candidate;
  if (!guard) throw std::logic_error("insertion with a context needs a guard");
  return selector({sequence({*guard, candidate}), *context});
}

bool improves(const Episode& candidate, const Insertion& at, const LearnerConfig& config) {
  const double later = candidate.gamma_at(at.stall_tick + config.tau);
  return later - at.baseline_gamma > config.greedy_improvement_epsilon &&
         candidate.final_gamma() >= at.baseline_final;
}

std::optional<BehaviorTree> learn_single_action(const Insertion& at, std::shared_ptr<const Level> level,
                                                const LearnerConfig& config) {
  static constexpr ActionId kOrder[] = {ActionId::WalkRight, ActionId::Jump, ActionId::Shoot, ActionId::WalkLeft,
                                        ActionId::Crouch};
  for (ActionId a : kOrder) {
    const BehaviorTree candidate = action(a);
    const Episode ep = run_episode(at.install(candidate), level, config.rng_seed, config.weights);
    if (improves(ep, at, config)) {
      log::debug("greedy: {} improves", to_string(a));
      return candidate;
    }
  }
  return std::nullopt;
}

GpOutcome learn_bt_gp(const Insertion& at, std::shared_ptr<const Level> level, const LearnerConfig& config,
                      std::uint64_t stream, std::optional<Population> initial) {
  GpConfig gp = config.gp;
  gp.rng_seed = derive_seed(config.rng_seed, "gp", stream);

  Population pop;
  if (initial) {
    pop = std::move(*initial);
  } else {
    Rng rng = make_stream(config.rng_seed, "gp-init", stream);
    for (std::size_t i = 0; i < gp.population_size; ++i) {
      std::vector<BehaviorTree> pair;
      pair.push_back(random_leaf(rng, gp.pool));
      pair.push_back(random_leaf(rng, gp.pool));
      pop.individuals.push_back({coin(rng, 0.5) ? sequence(std::move(pair)) : selector(std::move(pair)), {}, {}});
    }
  }

  struct Judged {
    double gamma;
    bool improving;
  };
  std::unordered_map<std::string, Judged> memo;
  auto judge = [&](const BehaviorTree& t) -> const Judged& {
    std::string key = print(t);
    auto it = memo.find(key);
    if (it == memo.end()) {
      const Episode ep = run_episode(at.install(t), level, config.rng_seed, config.weights);
      it = memo.emplace(std::move(key), Judged{ep.final_gamma(), improves(ep, at, config)}).first;
    }
    return it->second;
  };

  const auto result = evolve(
      std::move(pop), gp, [&](const BehaviorTree& t) { return judge(t).gamma; },
      [&](const Individual& best) { return judge(best.tree).improving; });

  GpOutcome out{result.best.tree, result.best.fitness.value_or(0.0), judge(result.best.tree).improving,
                result.generations};
  log::debug("gp: {} generations, gamma {:.4f}, improved {}", out.generations, out.gamma, out.improved);
  return out;
}

namespace {

// First step count t after which γ stops rising by more than epsilon within
// the following tau steps.
std::size_t stall_tick(const Episode& ep, std::size_t tau, double epsilon) {
  const std::size_t n = ep.trace.size();
  for (std::size_t t = 0; t < n; ++t) {
    if (ep.gamma_at(std::min(t + tau, n)) - ep.gamma_at(t) <= epsilon) return t;
  }
  return n;
}

}  // namespace

LearnResult learn(std::shared_ptr<const Level> level, const LearnerConfig& config) {
  config.check();
  auto run = [&](const BehaviorTree& t) { return run_episode(t, level, config.rng_seed, config.weights); };
  std::size_t gp_stream = 0;

  // Phase 0: the candidate is the whole tree, judged against doing nothing.
  Insertion root;
  std::optional<BehaviorTree> tree = learn_single_action(root, level, config);
  std::string method = "greedy";
  bool t0_warning = false;
  if (!tree) {
    GpOutcome gp = learn_bt_gp(root, level, config, gp_stream++);
    t0_warning = !gp.improved;
    tree = std::move(gp.tree);  // T0 is kept even without improvement
    method = "gp";
  }
  LearnResult out(*tree);
  out.gp_invocations = gp_stream;
  out.gp_warning = t0_warning;
  out.phases_used = 1;
  Episode episode = run(*tree);
  out.history.push_back(*tree);
  out.phases.push_back({0, method, episode.final_gamma(), tree->size()});
  log::info("phase 0 ({}): gamma {:.4f}, {} nodes", method, episode.final_gamma(), tree->size());

  std::vector<ConditionDelta> tried;
  while (episode.final_gamma() < 1.0) {
    if (out.phases_used >= config.max_phases) {
      out.budget_exhausted = true;
      break;
    }
    const std::size_t stall = stall_tick(episode, config.tau, config.greedy_improvement_epsilon);

    // Window ending at the stall; step back one tick at a time past empty or
    // already tried deltas.
    std::optional<ConditionDelta> delta;
    for (std::size_t back = 0; back <= stall && !delta; ++back) {
      WindowVerdict v = monitor_window(episode, config.tau, config.greedy_improvement_epsilon, stall - back);
      if (v.delta.empty()) continue;
      const bool seen =
          std::any_of(tried.begin(), tried.end(), [&](const ConditionDelta& d) { return d.same_flips(v.delta); });
      if (!seen) delta = std::move(v.delta);
    }
    if (!delta) {
      out.budget_exhausted = true;
      log::info("no untried condition delta left at tick {}", stall);
      break;
    }
    tried.push_back(*delta);
    const std::size_t phase = out.phases_used++;

    Insertion at;
    at.context = *tree;
    at.guard = compose_condition_tree(*delta);
    at.stall_tick = stall;
    at.baseline_gamma = episode.gamma_at(stall);
    at.baseline_final = episode.final_gamma();

    std::optional<BehaviorTree> acts = learn_single_action(at, level, config);
    method = "greedy";
    if (!acts) {
      ++out.gp_invocations;
      GpOutcome gp = learn_bt_gp(at, level, config, gp_stream++);
      if (gp.improved) {
        acts = std::move(gp.tree);
      } else {
        out.gp_warning = true;
      }
      method = "gp";
    }
    if (!acts) {
      log::info("phase {}: no improvement, discarded", phase);
      continue;
    }

    tree = at.install(*acts);
    episode = run(*tree);
    tried.clear();
    ++out.increments;
    out.history.push_back(*tree);
    out.phases.push_back({phase, method, episode.final_gamma(), tree->size()});
    log::info("phase {} ({}): gamma {:.4f}, {} nodes", phase, method, episode.final_gamma(), tree->size());
  }

  out.unpruned_tree = *tree;
  out.unpruned_gamma = episode.final_gamma();
  out.tree = *tree;
  out.gamma = out.unpruned_gamma;
  if (config.prune) {
    auto [pruned, report] = prune(*tree, [&](const BehaviorTree& t) { return run(t).final_gamma(); });
    log::info("pruned {} -> {} nodes", report.initial_nodes, report.final_nodes);
    out.tree = std::move(pruned);
    out.gamma = report.final_fitness;
    out.prune_report_json = report.to_json();
  }
  out.reached_goal = out.gamma >= 1.0;
  return out;
}

std::string phase_log_jsonl(const std::vector<PhaseRecord>& phases) {
  std::string out;
  for (const PhaseRecord& p : phases) {
    nlohmann::json j{{"phase", p.phase}, {"method", p.method}, {"gamma", p.gamma}, {"nodes", p.nodes}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace btforge
