#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "btforge/behavior_tree.hpp"

namespace btforge {

enum class Cell : std::uint8_t { Empty, Solid, Finish };
enum class Form : std::uint8_t { Small, Big, Fire };
enum class EnemyKind : std::uint8_t { Walker, Flyer };
enum class Terminal : std::uint8_t { None, ReachedFinish, Died, TimedOut };

const char* to_string(Form f) noexcept;
const char* to_string(Terminal t) noexcept;

struct EnemySpawn {
  EnemyKind kind;
  int row;
  int col;
};

/// Raised by load_level. Grid coordinates are 0-based (row 0 is the top row)
/// and are -1 when the problem is not tied to one cell.
class LevelError : public std::runtime_error {
 public:
  LevelError(const std::string& what, int row = -1, int col = -1);
  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

struct Level {
  int rows = 0;
  int cols = 0;
  std::vector<Cell> grid;  // row-major
  int start_row = 0;
  int start_col = 0;
  int finish_col = 0;
  std::size_t tick_limit = 0;
  Form initial_form = Form::Fire;
  std::vector<EnemySpawn> enemies;

  bool in_grid(int r, int c) const noexcept { return r >= 0 && r < rows && c >= 0 && c < cols; }
  Cell at(int r, int c) const { return grid[static_cast<std::size_t>(r * cols + c)]; }
  bool solid(int r, int c) const noexcept { return in_grid(r, c) && at(r, c) == Cell::Solid; }
  /// +1 when the finish lies right of the spawn, -1 otherwise.
  int direction() const noexcept { return finish_col > start_col ? 1 : -1; }
  int course_length() const noexcept { return finish_col > start_col ? finish_col - start_col : start_col - finish_col; }
};

/// ASCII level: a header line `ticks=<N>` (optionally followed by
/// `form=small|big|fire`), then one line per grid row, top row first.
/// Glyphs: '.' empty, '#' solid, 'M' agent spawn, 'F' finish column,
/// 'e' walker spawn, 'w' flyer spawn.
Level load_level(std::string_view text);
Level load_level_file(const std::filesystem::path& path);

struct AgentState {
  int row = 0;  // lower block
  int col = 0;
  Form form = Form::Fire;
  int vertical_velocity = 0;  // cells per tick, positive is up
  bool grounded = false;
  bool crouching = false;
  std::size_t hurt_count = 0;
  bool alive = true;
  int facing = 1;
};

struct Enemy {
  std::size_t id = 0;
  EnemyKind kind = EnemyKind::Walker;
  int row = 0;
  int col = 0;
  bool alive = true;
  std::size_t phase = 0;
  int base_row = 0;   // flyer wave centre
  int direction = -1;
};

struct Projectile {
  int row;
  int col;
  int direction;
};

struct EnvState {
  std::shared_ptr<const Level> level;
  AgentState agent;
  std::vector<Enemy> enemies;
  std::vector<Projectile> projectiles;
  std::size_t tick = 0;
  std::size_t kills = 0;
  std::size_t despawned = 0;  // removed by a non-stomp contact
  std::size_t fallen = 0;     // walkers that fell out of the grid
  std::size_t initial_enemy_count = 0;
  int max_progress = 0;  // running max of columns travelled towards the finish
  std::optional<ActionId> last_actuated;
  Terminal terminal = Terminal::None;

  std::size_t live_enemies() const;
};

struct FitnessWeights {
  double progress = 0.90;
  double kill = 0.05;
  double time = 0.04;
  double hurt = 0.02;
  double cap = 0.99;
};

EnvState initial_state(std::shared_ptr<const Level> level);
inline EnvState initial_state(const Level& level) { return initial_state(std::make_shared<const Level>(level)); }

/// Body height in cells: 2 for Big/Fire unless crouching or squeezed, else 1.
int body_height(const EnvState& s);

/// One deterministic tick. Throws std::logic_error on a terminal state.
EnvState step(const EnvState& state, std::optional<ActionId> action);

/// Receptive field centred on the agent's lower block plus actuation feedback.
Blackboard observe(const EnvState& state);

/// 1 exactly on ReachedFinish; otherwise a clamped weighted sum capped below 1.
double evaluate_fitness(const EnvState& state, const FitnessWeights& weights = {});

struct TraceEntry {
  std::size_t tick;
  std::optional<ActionId> action;
  double gamma;
  ConditionSet conditions;  // observed after the step
};

struct Episode {
  double initial_gamma = 0.0;
  ConditionSet initial_conditions;
  std::vector<TraceEntry> trace;
  EnvState final_state;

  double final_gamma() const { return trace.empty() ? initial_gamma : trace.back().gamma; }
  /// γ after `tick` steps (0 = before any step); clamps past the end.
  double gamma_at(std::size_t steps) const;
  /// Conditions after `steps` steps (0 = initial observation); clamps past the end.
  const ConditionSet& conditions_at(std::size_t steps) const;
};

/// Observe, tick the tree from its root, actuate the first requested action,
/// repeat until terminal. The dynamics use no randomness, so `seed` does not
/// change the outcome; it is kept so callers can record it with the run.
using StepObserver = std::function<void(const EnvState&)>;

Episode run_episode(const BehaviorTree& tree, std::shared_ptr<const Level> level, std::uint64_t seed = 0,
                    const FitnessWeights& weights = {}, const StepObserver& on_step = {});
inline Episode run_episode(const BehaviorTree& tree, const Level& level, std::uint64_t seed = 0,
                           const FitnessWeights& weights = {}) {
  return run_episode(tree, std::make_shared<const Level>(level), seed, weights);
}

/// One JSON object per line: {"t":int,"a":string|null,"g":float}.
std::string trace_jsonl(const Episode& episode);

std::string render_ascii(const EnvState& state);

}  // namespace btforge
