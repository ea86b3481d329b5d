#include <string>

#include "btforge/platform.hpp"
#include "btforge/random.hpp"
#include "btforge/text.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace btforge;
using btforge::test::data_level;

namespace {

constexpr const char* kStrip =
    "ticks=20\n"
    "..........\n"
    ".M......F.\n"
    "##########\n";

std::shared_ptr<const Level> make(const std::string& text) { return std::make_shared<const Level>(load_level(text)); }

EnvState walk(EnvState s, ActionId a, int n) {
  for (int i = 0; i < n && s.terminal == Terminal::None; ++i) s = step(s, a);
  return s;
}

}  // namespace

TEST_CASE("load a strip") {
  const Level l = load_level(kStrip);
  CHECK(l.rows == 3);
  CHECK(l.cols == 10);
  CHECK(l.start_col == 1);
  CHECK(l.start_row == 1);
  CHECK(l.finish_col == 8);
  CHECK(l.tick_limit == 20);
  CHECK(l.initial_form == Form::Fire);
  CHECK(l.at(1, 8) == Cell::Finish);
  CHECK(l.solid(2, 0));
  CHECK_FALSE(l.solid(3, 0));
}

TEST_CASE("level errors") {
  auto error_of = [](const std::string& text) -> std::string {
    try {
      load_level(text);
    } catch (const LevelError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(error_of("ticks=20\n..........\n.M........\n##########\n").find("missing finish") != std::string::npos);
  const std::string glyph = error_of("ticks=20\n....x.....\n.M......F.\n##########\n");
  CHECK(glyph.find("unknown glyph") != std::string::npos);
  CHECK(glyph.find("row 0, col 4") != std::string::npos);
  CHECK(error_of("ticks=20\n.M........\n.M......F.\n##########\n").find("multiple starts") != std::string::npos);
  CHECK(error_of("ticks=20\n..........\n.M......F.\n#.########\n").find("hole") != std::string::npos);
  CHECK(error_of("ticks=5\n..........\n.M......F.\n##########\n").find("tick limit") != std::string::npos);
  CHECK(error_of("..........\n.M......F.\n##########\n").find("header") != std::string::npos);
  CHECK(error_of("ticks=20\n..........\n.M......F\n##########\n").find("row length") != std::string::npos);
  CHECK(error_of("ticks=20\n.......F..\n.M......F.\n##########\n").find("more than one column") != std::string::npos);
  CHECK(error_of("ticks=20 form=tiny\n..........\n.M......F.\n##########\n").find("form") != std::string::npos);
  CHECK(error_of("").find("empty") != std::string::npos);
}

TEST_CASE("walking right on a flat strip") {
  const auto level = make(kStrip);
  EnvState s = initial_state(level);
  for (int i = 1; i <= 7; ++i) {
    s = step(s, ActionId::WalkRight);
    CHECK(s.agent.col == 1 + i);
  }
  CHECK(s.terminal == Terminal::ReachedFinish);
  CHECK(evaluate_fitness(s) == 1.0);
  CHECK_THROWS_AS(step(s, ActionId::WalkRight), std::logic_error);
}

TEST_CASE("idle agent times out") {
  const auto level = make(kStrip);
  EnvState s = initial_state(level);
  while (s.terminal == Terminal::None) s = step(s, std::nullopt);
  CHECK(s.terminal == Terminal::TimedOut);
  CHECK(s.tick == 20);
  CHECK(evaluate_fitness(s) == 0.0);
}

TEST_CASE("gravity and holes") {
  const auto level = make(
      "ticks=20\n"
      "..........\n"
      ".M........\n"
      "###.#####F\n"
      "###.######\n");
  EnvState s = initial_state(level);
  s = walk(s, ActionId::WalkRight, 2);
  CHECK(s.agent.col == 3);
  // Walking into the hole column drops the agent one row on the same tick.
  CHECK(s.agent.row == 2);
  int ticks = 0;
  while (s.terminal == Terminal::None && ticks < 10) {
    s = step(s, std::nullopt);
    ++ticks;
  }
  CHECK(s.terminal == Terminal::Died);
  CHECK(ticks <= level->rows);
}

TEST_CASE("jump arc") {
  const auto level = make("ticks=20\n..........\n..........\n..........\n.M......F.\n##########\n");
  EnvState s = initial_state(level);
  s.agent.form = Form::Small;
  s = step(s, ActionId::Jump);
  CHECK(s.agent.row == 1);
  CHECK(s.agent.vertical_velocity == 1);
  CHECK(observe(s).can(ActionId::Jump) == false);
  s = step(s, ActionId::Jump);  // airborne: ignored
  CHECK(s.agent.row == 0);
  CHECK_FALSE(s.last_actuated.has_value());
  s = step(s, std::nullopt);
  CHECK(s.agent.row == 1);
  s = walk(s, ActionId::WalkRight, 2);
  CHECK(s.agent.row == 3);
  CHECK(s.agent.grounded);
}

TEST_CASE("walls block walking and big agents need headroom") {
  const auto level = make(
      "ticks=20\n"
      "..........\n"
      "...#......\n"
      ".M.....#F.\n"
      "##########\n");
  EnvState s = initial_state(level);
  CHECK(body_height(s) == 2);
  s = step(s, ActionId::WalkRight);
  CHECK(s.agent.col == 2);
  s = step(s, ActionId::WalkRight);
  CHECK(s.agent.col == 2);  // head would hit the overhang
  CHECK_FALSE(observe(s).can(ActionId::WalkRight));
  s.agent.form = Form::Small;
  s = walk(s, ActionId::WalkRight, 5);
  CHECK(s.agent.col == 6);
  CHECK_FALSE(s.last_actuated.has_value());
}

TEST_CASE("walker contact degrades the form") {
  const auto level = make(
      "ticks=40\n"
      "..........\n"
      ".M.e....F.\n"
      "##########\n");
  EnvState s = initial_state(level);
  CHECK(s.agent.form == Form::Fire);
  s = step(s, ActionId::WalkRight);  // agent at col 2, walker stays (odd tick)
  CHECK(s.enemies[0].col == 3);
  s = step(s, std::nullopt);  // even tick: walker steps into the agent
  CHECK(s.agent.form == Form::Big);
  CHECK(s.agent.hurt_count == 1);
  CHECK_FALSE(s.enemies[0].alive);
  CHECK(s.despawned == 1);
  CHECK(s.kills == 0);
}

TEST_CASE("hurt small agent dies") {
  const auto level = data_level("boxed.lvl");
  EnvState s = initial_state(level);
  s = walk(s, ActionId::Crouch, 5);
  CHECK(s.terminal == Terminal::Died);
  CHECK_FALSE(s.agent.alive);
}

TEST_CASE("stomping kills") {
  const auto level = make(
      "ticks=40\n"
      "............\n"
      "............\n"
      "............\n"
      ".M.......F..\n"
      "############\n");
  EnvState s = initial_state(level);
  s.agent.form = Form::Small;
  s.enemies.push_back({0, EnemyKind::Walker, 3, 3, true, 0, 3, -1});
  s.initial_enemy_count = 1;
  s = step(s, ActionId::Jump);           // row 1
  s = step(s, ActionId::WalkRight);      // col 2, row 0
  s = step(s, ActionId::WalkRight);      // col 3, row 1
  s = step(s, std::nullopt);             // row 2
  s = step(s, std::nullopt);             // lands on the walker's cell from above
  CHECK(s.kills == 1);
  CHECK(s.agent.hurt_count == 0);
  CHECK(s.kills + s.live_enemies() + s.despawned + s.fallen == s.initial_enemy_count);
}

TEST_CASE("projectiles") {
  const auto level = make(
      "ticks=40\n"
      "..........\n"
      ".M....e.F.\n"
      "##########\n");
  EnvState s = initial_state(level);
  s = step(s, ActionId::Shoot);
  CHECK(s.projectiles.size() == 1);
  CHECK(s.projectiles[0].col == 3);
  s = step(s, ActionId::Shoot);
  s = step(s, ActionId::Shoot);
  CHECK(s.kills == 1);
  CHECK(s.live_enemies() == 0);
  CHECK(s.projectiles.size() <= 2);

  EnvState big = initial_state(level);
  big.agent.form = Form::Big;
  CHECK_FALSE(observe(big).can(ActionId::Shoot));
}

TEST_CASE("flyers follow the wave") {
  const auto level = make(
      "ticks=40\n"
      "..........\n"
      "..........\n"
      "..........\n"
      "......w...\n"
      "..........\n"
      "..........\n"
      "..........\n"
      ".M......F.\n"
      "##########\n");
  EnvState s = initial_state(level);
  const int wave[8] = {0, 1, 2, 1, 0, -1, -2, -1};
  for (int t = 1; t <= 16; ++t) {
    s = step(s, std::nullopt);
    CHECK(s.enemies[0].row == 3 - wave[t % 8]);
  }
  CHECK(s.enemies[0].col == 6 - 5);
}

TEST_CASE("observation window") {
  SUBCASE("empty surroundings see only the floor") {
    const auto level = make(
        "ticks=20\n"
        "..........\n"
        "..........\n"
        "...M....F.\n"
        "##########\n"
        "##########\n");
    const Blackboard bb = observe(initial_state(level));
    std::size_t count = 0;
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        CHECK_FALSE(bb.holds({r, c, Predicate::EnemyAt}));
        if (bb.holds({r, c, Predicate::ObstacleAt})) {
          CHECK(r >= 3);
          ++count;
        }
      }
    }
    CHECK(count == 10);
  }
  SUBCASE("walker two columns right") {
    const auto level = make(
        "ticks=20\n"
        "..........\n"
        "..M.e...F.\n"
        "##########\n");
    const Blackboard bb = observe(initial_state(level));
    CHECK(bb.holds({2, 4, Predicate::EnemyAt}));
    CHECK_FALSE(bb.holds({2, 3, Predicate::EnemyAt}));
  }
  SUBCASE("left edge and the sky") {
    const auto level = make(
        "ticks=20\n"
        "M.......F.\n"
        "##########\n");
    const Blackboard bb = observe(initial_state(level));
    for (int r = 0; r < 5; ++r) {
      CHECK(bb.holds({r, 0, Predicate::ObstacleAt}) == (r >= 2));
      CHECK(bb.holds({r, 1, Predicate::ObstacleAt}) == (r >= 2));
    }
    CHECK_FALSE(bb.holds({0, 2, Predicate::ObstacleAt}));  // above the grid
    CHECK(bb.holds({4, 2, Predicate::ObstacleAt}));          // below the grid
  }
}

TEST_CASE("fitness") {
  const auto level = make(
      "ticks=40\n"
      "...........\n"
      "Me........F\n"
      "###########\n");
  EnvState s = initial_state(level);
  CHECK(evaluate_fitness(s) == 0.0);
  s.max_progress = 5;  // half of the 10-column course
  s.agent.hurt_count = 1;
  CHECK(evaluate_fitness(s) == doctest::Approx(0.43));
  s.kills = 1;
  CHECK(evaluate_fitness(s) == doctest::Approx(0.48));
  s.max_progress = 10;
  CHECK(evaluate_fitness(s) == doctest::Approx(0.93));
  FitnessWeights eager;
  eager.progress = 1.0;
  CHECK(evaluate_fitness(s, eager) == 0.99);
  s.terminal = Terminal::ReachedFinish;
  CHECK(evaluate_fitness(s) == 1.0);
  s.terminal = Terminal::None;
  s.max_progress = 0;
  s.kills = 0;
  s.agent.hurt_count = 3;
  CHECK(evaluate_fitness(s) == 0.0);
}

TEST_CASE("episodes") {
  const auto level = data_level("flat.lvl");
  const auto right = run_episode(action(ActionId::WalkRight), level);
  CHECK(right.final_state.terminal == Terminal::ReachedFinish);
  CHECK(right.final_gamma() == 1.0);
  for (std::size_t i = 1; i + 1 < right.trace.size(); ++i) CHECK(right.trace[i].gamma > right.trace[i - 1].gamma);
  CHECK(right.trace.front().action == ActionId::WalkRight);

  const auto idle = run_episode(condition({0, 0, Predicate::EnemyAt}), level);
  CHECK(idle.final_state.terminal == Terminal::TimedOut);
  CHECK(idle.final_gamma() == 0.0);
  CHECK_FALSE(idle.trace.front().action.has_value());

  const auto again = run_episode(action(ActionId::WalkRight), level, 99);
  CHECK(trace_jsonl(again) == trace_jsonl(right));
  CHECK(trace_jsonl(right).find("{\"a\":\"right\",\"g\":") == 0);
  CHECK(idle.gamma_at(0) == idle.initial_gamma);
  CHECK(right.gamma_at(1000) == 1.0);
}

TEST_CASE("leftward levels measure progress to the left") {
  const auto level = data_level("leftward.lvl");
  CHECK(level->direction() == -1);
  CHECK(run_episode(action(ActionId::WalkRight), level).final_gamma() == 0.0);
  CHECK(run_episode(action(ActionId::WalkLeft), level).final_gamma() == 1.0);
}

TEST_CASE("random play keeps the invariants") {
  for (const char* name : {"flat.lvl", "boxed.lvl", "leftward.lvl"}) {
    const auto level = data_level(name);
    Rng rng(derive_seed(1, name));
    for (int run = 0; run < 100; ++run) {
      EnvState s = initial_state(level);
      while (s.terminal == Terminal::None) {
        const std::size_t pick = uniform_index(rng, kActionCount + 1);
        s = step(s, pick == kActionCount ? std::nullopt : std::optional<ActionId>(static_cast<ActionId>(pick)));
        const double g = evaluate_fitness(s);
        CHECK((g >= 0.0 && g <= 1.0));
        CHECK((g == 1.0) == (s.terminal == Terminal::ReachedFinish));
        CHECK(s.kills + s.live_enemies() + s.despawned + s.fallen == s.initial_enemy_count);
        if (s.agent.alive) CHECK_FALSE(level->solid(s.agent.row, s.agent.col));
      }
    }
  }
}

TEST_CASE("ascii render") {
  const auto level = make(kStrip);
  const std::string frame = render_ascii(initial_state(level));
  CHECK(frame.find(".M......F.") != std::string::npos);
  CHECK(frame.find(".m........") != std::string::npos);
}
