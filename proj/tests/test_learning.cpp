#include <algorithm>

#include "btforge/learning.hpp"
#include "btforge/text.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace btforge;
using btforge::test::bundled_level;
using btforge::test::data_level;

namespace {

// Episode with a hand-written γ and condition trace.
Episode synthetic(const std::vector<double>& gammas, const std::vector<ConditionSet>& conds) {
  Episode ep;
  ep.initial_gamma = gammas.front();
  ep.initial_conditions = conds.front();
  for (std::size_t i = 1; i < gammas.size(); ++i) ep.trace.push_back({i - 1, std::nullopt, gammas[i], conds[i]});
  return ep;
}

ConditionSet with(std::initializer_list<ConditionId> ids) {
  ConditionSet s;
  for (const auto& c : ids) s.set(c.index());
  return s;
}

bool mentions_enemy(const BehaviorTree& t) {
  return std::any_of(t.nodes().begin(), t.nodes().end(), [](const Node& n) {
    const auto* c = std::get_if<Condition>(&n.kind);
    return c && c->condition.predicate == Predicate::EnemyAt;
  });
}

LearnerConfig small_config(std::uint64_t seed = 1) {
  LearnerConfig c;
  c.rng_seed = seed;
  c.gp.population_size = 10;
  c.gp.max_generations = 6;
  return c;
}

}  // namespace

TEST_CASE("monitor window") {
  const ConditionId a{2, 3, Predicate::ObstacleAt};
  const ConditionId b{1, 1, Predicate::EnemyAt};
  const ConditionSet none;

  SUBCASE("rising gamma improves") {
    const auto v = monitor_window(synthetic({0, 0.1, 0.2, 0.3}, {none, none, none, none}), 10, 1e-3);
    CHECK(v.improving);
    CHECK(v.delta.empty());
    CHECK(v.delta.window_start == 0);
    CHECK(v.delta.window_end == 3);
  }
  SUBCASE("flat gamma does not") {
    CHECK_FALSE(monitor_window(synthetic({0.2, 0.2, 0.2}, {none, none, none}), 10, 1e-3).improving);
  }
  SUBCASE("only the window endpoints count") {
    const auto ep = synthetic({0, 0, 0, 0, 0}, {with({a}), with({a, b}), none, with({b}), with({a, b})});
    const auto v = monitor_window(ep, 2, 1e-3);
    CHECK(v.delta.window_start == 2);
    CHECK(v.delta.became_true == std::vector<ConditionId>{b, a});  // (row, col) order
    CHECK(v.delta.became_false.empty());
    const auto full = monitor_window(ep, 10, 1e-3);
    CHECK(full.delta.became_true == std::vector<ConditionId>{b});
    const auto prefix = monitor_window(ep, 2, 1e-3, 2);
    CHECK(prefix.delta.became_false == std::vector<ConditionId>{a});
  }
}

TEST_CASE("condition trees") {
  const ConditionId obstacle{2, 3, Predicate::ObstacleAt};
  const ConditionId enemy_left{2, 1, Predicate::EnemyAt};
  const ConditionId enemy{2, 3, Predicate::EnemyAt};
  const ConditionId ceiling{1, 1, Predicate::ObstacleAt};

  ConditionDelta d;
  d.became_true = {obstacle};
  CHECK(print(compose_condition_tree(d)) == "(seq\n  (cond obstacle@2,3))");
  d = {};
  d.became_false = {enemy_left};
  CHECK(print(compose_condition_tree(d)) == "(seq\n  (inv\n    (cond enemy@2,1)))");
  CHECK_THROWS_AS(compose_condition_tree(ConditionDelta{}), std::invalid_argument);

  d = {};
  d.became_true = {enemy};
  d.became_false = {ceiling};
  const auto t = compose_condition_tree(d);
  REQUIRE(t.node(t.root()).children.size() == 2);
  CHECK(std::holds_alternative<Condition>(t.node(t.node(t.root()).children[0]).kind));

  // Success exactly when the blackboard matches the window-end snapshot.
  for (bool e : {false, true}) {
    for (bool c : {false, true}) {
      Blackboard bb;
      bb.set(enemy, e);
      bb.set(ceiling, c);
      CHECK((tick(t, bb) == Status::Success) == (e && !c));
    }
  }
}

TEST_CASE("greedy single action") {
  const LearnerConfig config = small_config();
  SUBCASE("flat level picks right") {
    const auto t = learn_single_action({}, data_level("flat.lvl"), config);
    REQUIRE(t.has_value());
    CHECK(print(*t) == "(act right)");
  }
  SUBCASE("finish on the left picks left") {
    const auto t = learn_single_action({}, data_level("leftward.lvl"), config);
    REQUIRE(t.has_value());
    CHECK(print(*t) == "(act left)");
  }
  SUBCASE("a doomed start has no answer") {
    CHECK_FALSE(learn_single_action({}, data_level("boxed.lvl"), config).has_value());
  }
}

TEST_CASE("gp fallback") {
  const auto level = data_level("flat.lvl");
  LearnerConfig config = small_config(3);

  SUBCASE("an already improving seed wins in the first generation") {
    Population seeded;
    Rng rng(1);
    for (int i = 0; i < 9; ++i) seeded.individuals.push_back({selector({condition({0, 0, Predicate::EnemyAt}), condition({0, 1, Predicate::EnemyAt})}), {}, {}});
    seeded.individuals.push_back({sequence({action(ActionId::WalkRight)}), {}, {}});
    const auto out = learn_bt_gp({}, level, config, 0, seeded);
    CHECK(out.improved);
    CHECK(out.generations == 1);
    CHECK(print(out.tree) == "(seq\n  (act right))");
  }
  SUBCASE("fixed seed, fixed answer") {
    const auto a = learn_bt_gp({}, level, config, 5);
    const auto b = learn_bt_gp({}, level, config, 5);
    CHECK(print(a.tree) == print(b.tree));
    CHECK(a.gamma == b.gamma);
  }
  SUBCASE("no actions anywhere exhausts the budget") {
    config.gp.mutation = false;
    config.gp.pool.action = false;
    const auto out = learn_bt_gp({}, level, config, 0);
    CHECK_FALSE(out.improved);
    CHECK(out.gamma == 0.0);
    CHECK(out.generations == config.gp.max_generations);
  }
}

TEST_CASE("learn on small levels") {
  SUBCASE("trivial level gives a single action") {
    const auto r = learn(data_level("trivial.lvl"), small_config());
    CHECK(print(r.tree) == "(act right)");
    CHECK(r.increments == 0);
    CHECK(r.reached_goal);
    CHECK(r.gp_invocations == 0);
  }
  SUBCASE("doomed level is flagged, not thrown") {
    const auto r = learn(data_level("boxed.lvl"), small_config());
    CHECK_FALSE(r.reached_goal);
    CHECK(r.gp_warning);
    CHECK(r.gp_invocations >= 1);
    CHECK(is_valid(r.tree));
  }
  SUBCASE("phase budget") {
    LearnerConfig c = small_config();
    c.max_phases = 1;
    const auto r = learn(bundled_level("testbed1.lvl"), c);
    CHECK(r.budget_exhausted);
    CHECK(r.phases_used == 1);
    CHECK_FALSE(r.reached_goal);
  }
}

TEST_CASE("learn on the obstacle course") {
  const auto level = bundled_level("testbed1.lvl");
  const LearnerConfig config = small_config(42);
  const auto r = learn(level, config);
  CHECK(r.reached_goal);
  CHECK(r.gamma == 1.0);
  CHECK(print(r.history.front()) == "(act right)");

  // Every committed tree is valid, nests one selector deeper than the last
  // and never scores lower.
  double best = 0.0;
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const auto& t = r.history[i];
    CHECK(is_valid(t));
    CHECK(r.phases[i].gamma >= best);
    best = r.phases[i].gamma;
    std::size_t spine = 0;
    NodeIndex n = t.root();
    while (std::holds_alternative<Selector>(t.node(n).kind) && t.node(n).children.size() == 2) {
      ++spine;
      n = t.node(n).children[1];
    }
    CHECK(spine == i);
  }
  CHECK(r.gp_invocations == 0);
  CHECK(r.tree.size() <= r.unpruned_tree.size());
  CHECK(run_episode(r.tree, level).final_gamma() == 1.0);
  CHECK(phase_log_jsonl(r.phases).find("{\"gamma\":") == 0);

  const auto again = learn(level, config);
  CHECK(print(again.tree) == print(r.tree));
}

TEST_CASE("walkers call for enemy guards") {
  const auto level = bundled_level("testbed2.lvl");
  const auto r = learn(level, small_config(42));
  CHECK(r.reached_goal);
  CHECK(print(r.history.front()) == "(act right)");
  CHECK(mentions_enemy(r.unpruned_tree));
  CHECK(mentions_enemy(r.tree));
  const auto again = learn(level, small_config(42));
  CHECK(print_document(again.tree) == print_document(r.tree));
}

TEST_CASE("config checks") {
  LearnerConfig c;
  c.tau = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = {};
  c.max_phases = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = {};
  c.gp.rank_pc = 0.0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
}
