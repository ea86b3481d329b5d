#include "btforge/genetics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace btforge {

const char* to_string(SelectionMethod m) noexcept {
  switch (m) {
    case SelectionMethod::Naive: return "naive";
    case SelectionMethod::RankSpace: return "rank";
    case SelectionMethod::DiversityRank: return "diversity";
  }
  return "?";
}

void GpConfig::check() const {
  if (population_size == 0) throw std::invalid_argument("population size must be positive");
  if (elitism >= population_size) throw std::invalid_argument("elitism must be smaller than the population size");
  if (anneal_initial_mutations < 1) throw std::invalid_argument("initial mutation count must be at least 1");
  if (!(anneal_decay > 0.0 && anneal_decay < 1.0)) throw std::invalid_argument("anneal decay must lie in (0,1)");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0))
    throw std::invalid_argument("crossover probability must lie in [0,1]");
  if (!(rank_pc > 0.0 && rank_pc < 1.0)) throw std::invalid_argument("P_c must lie in (0,1)");
  if (!pool.has_execution()) throw std::invalid_argument("node pool has no execution nodes");
  if (max_tree_nodes < 1) throw std::invalid_argument("max tree size must be positive");
}

// ---------------------------------------------------------------------------

std::pair<BehaviorTree, BehaviorTree> crossover(const BehaviorTree& a, const BehaviorTree& b, Rng& rng,
                                                std::size_t max_nodes, std::size_t retries) {
  for (std::size_t attempt = 0; attempt < retries; ++attempt) {
    const NodeIndex ia = uniform_index(rng, a.size());
    const NodeIndex ib = uniform_index(rng, b.size());
    const std::size_t sa = a.subtree_size(ia);
    const std::size_t sb = b.subtree_size(ib);
    if (a.size() - sa + sb > max_nodes || b.size() - sb + sa > max_nodes) continue;
    BehaviorTree from_b = extract_subtree(b, ib);
    BehaviorTree from_a = extract_subtree(a, ia);
    return {replace_subtree(a, ia, from_b), replace_subtree(b, ib, from_a)};
  }
  return {a, b};
}

namespace {

Condition random_condition(Rng& rng) { return Condition{ConditionId::from_index(uniform_index(rng, kConditionCount))}; }
Action random_action(Rng& rng) { return Action{kAllActions[uniform_index(rng, kActionCount)]}; }

std::optional<NodeKind> random_execution(Rng& rng, const NodePool& pool, const NodeKind& current, bool strict) {
  bool allow_action = pool.action;
  bool allow_condition = pool.condition;
  if (strict) {
    allow_action = allow_action && std::holds_alternative<Action>(current);
    allow_condition = allow_condition && std::holds_alternative<Condition>(current);
  }
  if (allow_action && allow_condition) {
    return coin(rng, 0.5) ? NodeKind{random_action(rng)} : NodeKind{random_condition(rng)};
  }
  if (allow_action) return random_action(rng);
  if (allow_condition) return random_condition(rng);
  return std::nullopt;
}

std::optional<NodeKind> random_control(Rng& rng, const NodePool& pool, std::size_t arity) {
  std::vector<int> options;
  if (pool.selector) options.push_back(0);
  if (pool.sequence) options.push_back(1);
  if (pool.parallel) options.push_back(2);
  if (pool.decorator && arity == 1) options.push_back(3);
  if (options.empty()) return std::nullopt;
  switch (options[uniform_index(rng, options.size())]) {
    case 0: return Selector{};
    case 1: return Sequence{};
    case 2: return Parallel{1 + uniform_index(rng, arity)};
    default: return Decorator{static_cast<DecoratorPolicy>(uniform_index(rng, 3))};
  }
}

BehaviorTree grow(Rng& rng, std::size_t budget, const NodePool& pool) {
  std::vector<int> control;
  if (pool.selector) control.push_back(0);
  if (pool.sequence) control.push_back(1);
  if (pool.parallel) control.push_back(2);
  if (pool.decorator) control.push_back(3);
  if (budget <= 1 || control.empty()) return random_leaf(rng, pool);

  const int pick = control[uniform_index(rng, control.size())];
  if (pick == 3) {
    return decorate(static_cast<DecoratorPolicy>(uniform_index(rng, 3)), grow(rng, budget - 1, pool));
  }
  const std::size_t remaining = budget - 1;
  const std::size_t arity = 1 + uniform_index(rng, std::min<std::size_t>(4, remaining));
  // Random composition of `remaining` into `arity` positive parts.
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i + 1 < arity; ++i) cuts.push_back(1 + uniform_index(rng, remaining - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<BehaviorTree> children;
  std::size_t prev = 0;
  cuts.push_back(remaining);
  for (std::size_t cut : cuts) {
    children.push_back(grow(rng, cut - prev, pool));
    prev = cut;
  }
  switch (pick) {
    case 0: return selector(std::move(children));
    case 1: return sequence(std::move(children));
    default: {
      const std::size_t m = 1 + uniform_index(rng, children.size());
      return parallel(m, std::move(children));
    }
  }
}

}  // namespace

BehaviorTree random_leaf(Rng& rng, const NodePool& pool) {
  if (!pool.has_execution()) throw std::invalid_argument("node pool has no execution nodes");
  const auto kind = random_execution(rng, pool, NodeKind{Action{}}, false);
  return BehaviorTree::leaf(*kind);
}

BehaviorTree random_tree(Rng& rng, std::size_t max_nodes, const NodePool& pool) {
  const std::size_t target = 1 + uniform_index(rng, std::max<std::size_t>(1, max_nodes));
  return grow(rng, target, pool);
}

BehaviorTree mutate(const BehaviorTree& tree, std::size_t k, Rng& rng, const NodePool& pool, bool strict) {
  const std::size_t n = tree.size();
  k = std::min(k, n);
  if (k == 0) return tree;

  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  std::vector<NodeIndex> idx(n);
  std::iota(idx.begin(), idx.end(), NodeIndex{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);

  std::vector<Node> nodes(tree.nodes().begin(), tree.nodes().end());
  for (std::size_t i = 0; i < k; ++i) {
    Node& node = nodes[idx[i]];
    const auto replacement = is_execution(node.kind) ? random_execution(rng, pool, node.kind, strict)
                                                     : random_control(rng, pool, node.children.size());
    if (replacement) node.kind = *replacement;
  }
  return BehaviorTree(std::move(nodes), tree.root());
}

std::size_t anneal_schedule(std::size_t generation, const GpConfig& config) {
  const double k = static_cast<double>(config.anneal_initial_mutations) *
                   std::pow(config.anneal_decay, static_cast<double>(generation));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(k)));
}

// ---------------------------------------------------------------------------

namespace {

using LabelBag = std::map<std::string, long>;

LabelBag label_bag(const BehaviorTree& t) {
  LabelBag bag;
  for (const Node& n : t.nodes()) ++bag[label(n.kind)];
  return bag;
}

double bag_distance(const LabelBag& a, std::size_t size_a, const LabelBag& b, std::size_t size_b) {
  long diff = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      diff += ia->second;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      diff += ib->second;
      ++ib;
    } else {
      diff += std::labs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(diff) / static_cast<double>(size_a + size_b);
}

double fitness_of(const Individual& ind) {
  if (!ind.fitness) throw std::invalid_argument("individual has no fitness");
  return *ind.fitness;
}

}  // namespace

double tree_distance(const BehaviorTree& a, const BehaviorTree& b) {
  return bag_distance(label_bag(a), a.size(), label_bag(b), b.size());
}

std::vector<double> diversity_scores(const Population& population) {
  const std::size_t n = population.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<LabelBag> bags;
  bags.reserve(n);
  for (const Individual& ind : population.individuals) bags.push_back(label_bag(ind.tree));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double delta = bag_distance(bags[i], population.individuals[i].tree.size(), bags[j],
                                        population.individuals[j].tree.size());
      d[i] += delta;
      d[j] += delta;
    }
  }
  for (double& x : d) x /= static_cast<double>(n - 1);
  return d;
}

std::vector<std::size_t> rank_order(const Population& population) {
  std::vector<std::size_t> order(population.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double fa = fitness_of(population.individuals[a]);
    const double fb = fitness_of(population.individuals[b]);
    if (fa != fb) return fa > fb;
    return population.individuals[a].tree.size() < population.individuals[b].tree.size();
  });
  return order;
}

SelectionResult selection_probabilities(const Population& population, SelectionMethod method, double rank_pc,
                                        const std::vector<double>* diversity) {
  const std::size_t n = population.size();
  SelectionResult result;
  result.probabilities.assign(n, 0.0);
  if (n == 0) return result;
  auto uniform = [&] {
    std::fill(result.probabilities.begin(), result.probabilities.end(), 1.0 / static_cast<double>(n));
  };

  switch (method) {
    case SelectionMethod::Naive: {
      double total = 0.0;
      for (const Individual& ind : population.individuals) total += fitness_of(ind);
      if (!(total > 0.0)) {
        uniform();
        result.uniform_fallback = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) result.probabilities[i] = fitness_of(population.individuals[i]) / total;
      break;
    }
    case SelectionMethod::RankSpace: {
      if (!(rank_pc > 0.0 && rank_pc < 1.0)) throw std::invalid_argument("P_c must lie in (0,1)");
      const auto order = rank_order(population);
      double tail = 1.0;  // (1 - P_c)^(k-1)
      for (std::size_t k = 0; k < n; ++k) {
        result.probabilities[order[k]] = (k + 1 < n) ? tail * rank_pc : tail;
        tail *= 1.0 - rank_pc;
      }
      break;
    }
    case SelectionMethod::DiversityRank: {
      std::vector<double> own;
      if (!diversity) {
        own = diversity_scores(population);
        diversity = &own;
      }
      if (diversity->size() != n) throw std::invalid_argument("diversity scores do not match the population");
      double d_max = 0.0;
      double f_max = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d_max = std::max(d_max, (*diversity)[i]);
        f_max = std::max(f_max, fitness_of(population.individuals[i]));
      }
      const double ref = std::hypot(d_max, f_max);
      std::vector<double> raw(n, 0.0);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dist = std::hypot((*diversity)[i] - d_max, fitness_of(population.individuals[i]) - f_max);
        raw[i] = ref > 0.0 ? std::max(0.0, 1.0 - dist / ref) : 1.0;
        total += raw[i];
      }
      if (!(total > 0.0)) {
        uniform();
        break;
      }
      for (std::size_t i = 0; i < n; ++i) result.probabilities[i] = raw[i] / total;
      break;
    }
  }
  return result;
}

Population select_next_population(const Population& population, const std::vector<double>& probabilities,
                                  const GpConfig& config, Rng& rng, Rng& mutation_rng) {
  const std::size_t target = config.population_size;
  if (probabilities.size() != population.size() || population.size() == 0) {
    throw std::invalid_argument("probabilities do not match the population");
  }

  Population next;
  next.generation = population.generation + 1;
  next.individuals.reserve(target);

  const std::size_t elites = std::min({config.elitism, target, population.size()});
  if (elites > 0) {
    const auto order = rank_order(population);
    for (std::size_t i = 0; i < elites; ++i) next.individuals.push_back(population.individuals[order[i]]);
  }

  std::discrete_distribution<std::size_t> pick(probabilities.begin(), probabilities.end());
  const std::size_t k = config.mutation ? anneal_schedule(population.generation, config) : 0;
  while (next.individuals.size() < target) {
    const BehaviorTree& a = population.individuals[pick(rng)].tree;
    const BehaviorTree& b = population.individuals[pick(rng)].tree;
    std::pair<BehaviorTree, BehaviorTree> kids{a, b};
    if (coin(rng, config.crossover_probability)) {
      kids = crossover(a, b, rng, config.max_tree_nodes, config.crossover_retries);
    }
    for (BehaviorTree* child : {&kids.first, &kids.second}) {
      if (next.individuals.size() == target) break;
      next.individuals.push_back(
          Individual{mutate(*child, k, mutation_rng, config.pool, config.strict_mutation), std::nullopt, std::nullopt});
    }
  }
  return next;
}

// ---------------------------------------------------------------------------

EvolutionResult evolve(Population initial, const GpConfig& config, const FitnessFn& fitness, const StopFn& stop) {
  config.check();
  Rng rng = make_stream(config.rng_seed, "gp");
  Rng mutation_rng = make_stream(config.rng_seed, "mutation");

  EvolutionResult result{Individual{initial.individuals.at(0).tree, std::nullopt, std::nullopt}, {}, 0, false};
  Population pop = std::move(initial);
  std::optional<Individual> best;

  for (std::size_t gen = 0; gen < config.max_generations; ++gen) {
    for (Individual& ind : pop.individuals) {
      if (!ind.fitness) ind.fitness = fitness(ind.tree);
    }
    result.generations = gen + 1;
    const auto order = rank_order(pop);
    const Individual& leader = pop.individuals[order.front()];
    if (!best || *leader.fitness > *best->fitness ||
        (*leader.fitness == *best->fitness && leader.tree.size() < best->tree.size())) {
      best = leader;
    }
    if (stop && stop(leader)) {
      result.stopped = true;
      best = leader;
      break;
    }
    if (gen + 1 == config.max_generations) break;

    std::vector<double> diversity;
    if (config.selection == SelectionMethod::DiversityRank) diversity = diversity_scores(pop);
    auto sel = selection_probabilities(pop, config.selection, config.rank_pc,
                                       diversity.empty() ? nullptr : &diversity);
    for (std::size_t i = 0; i < pop.size(); ++i) pop.individuals[i].survival = sel.probabilities[i];
    pop = select_next_population(pop, sel.probabilities, config, rng, mutation_rng);
  }

  result.best = *best;
  result.final_population = std::move(pop);
  return result;
}

}  // namespace btforge
