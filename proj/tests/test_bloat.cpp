#include "btforge/bloat.hpp"
#include "btforge/genetics.hpp"
#include "btforge/platform.hpp"
#include "btforge/text.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace btforge;
using btforge::test::bundled_level;
using btforge::test::data_level;

namespace {

FitnessOracle oracle_for(std::shared_ptr<const Level> level) {
  return [level](const BehaviorTree& t) { return run_episode(t, level).final_gamma(); };
}

}  // namespace

TEST_CASE("dead guarded branch is removed") {
  const auto level = data_level("flat.lvl");
  // An enemy never appears on this level, so the guarded branch is dead.
  const auto t = parse("(sel (seq (cond enemy@0,0) (act left)) (act right))");
  const auto oracle = oracle_for(level);
  const auto [pruned, report] = prune(t, oracle);
  CHECK(print(pruned) == "(act right)");
  CHECK(oracle(pruned) == oracle(t));
  CHECK(report.initial_nodes == 5);
  CHECK(report.final_nodes == 1);
  CHECK_FALSE(report.removed.empty());
  CHECK(report.final_fitness >= report.initial_fitness);
}

TEST_CASE("minimal tree is untouched") {
  const auto t = action(ActionId::WalkRight);
  const auto [pruned, report] = prune(t, oracle_for(data_level("flat.lvl")));
  CHECK(structurally_equal(pruned, t));
  CHECK(report.removed.empty());
  CHECK(report.oracle_calls == 1);
}

TEST_CASE("needed structure survives") {
  const auto level = bundled_level("testbed3.lvl");
  const auto t = parse("(sel (seq (inv (cond obstacle@4,4)) (act jump)) (act right))");
  const auto oracle = oracle_for(level);
  REQUIRE(oracle(t) == 1.0);
  const auto [pruned, report] = prune(t, oracle);
  CHECK(oracle(pruned) == 1.0);
  CHECK(oracle(action(ActionId::WalkRight)) < 1.0);
  CHECK(pruned.size() > 1);
}

TEST_CASE("monotone and idempotent on random trees") {
  const auto level = bundled_level("testbed1.lvl");
  const auto oracle = oracle_for(level);
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const auto t = random_tree(rng, 15, NodePool::all());
    const auto [once, r1] = prune(t, oracle);
    const auto [twice, r2] = prune(once, oracle);
    CHECK(is_valid(once));
    CHECK(oracle(once) >= oracle(t));
    CHECK(once.size() <= t.size());
    CHECK(structurally_equal(once, twice));
    CHECK(r2.removed.empty());
  }
}

TEST_CASE("report json") {
  const auto t = parse("(sel (seq (cond enemy@0,0) (act left)) (act right))");
  const auto [pruned, report] = prune(t, oracle_for(data_level("flat.lvl")));
  const auto j = nlohmann::json::parse(report.to_json());
  CHECK(j["initialNodes"] == 5);
  CHECK(j["finalNodes"] == pruned.size());
  CHECK(j["removedSubtrees"].size() == report.removed.size());
  CHECK(j["finalFitness"].get<double>() >= j["initialFitness"].get<double>());
}
