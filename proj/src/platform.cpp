#include "btforge/platform.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace btforge {

const char* to_string(Form f) noexcept {
  switch (f) {
    case Form::Small: return "small";
    case Form::Big: return "big";
    case Form::Fire: return "fire";
  }
  return "?";
}

const char* to_string(Terminal t) noexcept {
  switch (t) {
    case Terminal::None: return "None";
    case Terminal::ReachedFinish: return "ReachedFinish";
    case Terminal::Died: return "Died";
    case Terminal::TimedOut: return "TimedOut";
  }
  return "?";
}

namespace {

std::string where(int row, int col) {
  if (row < 0) return {};
  if (col < 0) return " (row " + std::to_string(row) + ")";
  return " at row " + std::to_string(row) + ", col " + std::to_string(col);
}

}  // namespace

LevelError::LevelError(const std::string& what, int row, int col)
    : std::runtime_error(what + where(row, col)), row_(row), col_(col) {}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

Level load_level(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::string cur;
    for (char ch : text) {
      if (ch == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    if (!cur.empty()) lines.push_back(cur);
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
  std::size_t first = 0;
  while (first < lines.size() && lines[first].find_first_not_of(" \t") == std::string::npos) ++first;
  if (first == lines.size()) throw LevelError("empty level");

  Level level;
  {
    std::istringstream header(lines[first]);
    std::string field;
    bool have_ticks = false;
    while (header >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw LevelError("malformed header field '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "ticks") {
        if (value.empty() || value.size() > 9 || value.find_first_not_of("0123456789") != std::string::npos) {
          throw LevelError("ticks must be a positive integer");
        }
        level.tick_limit = std::stoul(value);
        have_ticks = true;
      } else if (key == "form") {
        if (value == "small") level.initial_form = Form::Small;
        else if (value == "big") level.initial_form = Form::Big;
        else if (value == "fire") level.initial_form = Form::Fire;
        else throw LevelError("unknown form '" + value + "'");
      } else {
        throw LevelError("unknown header field '" + key + "'");
      }
    }
    if (!have_ticks) throw LevelError("missing header line ticks=<N>");
  }

  const std::size_t row_begin = first + 1;
  if (row_begin == lines.size()) throw LevelError("level has no grid rows");
  level.rows = static_cast<int>(lines.size() - row_begin);
  level.cols = static_cast<int>(lines[row_begin].size());
  if (level.cols == 0) throw LevelError("empty grid row", 0);
  level.grid.assign(static_cast<std::size_t>(level.rows * level.cols), Cell::Empty);

  bool have_start = false;
  std::optional<int> finish;
  for (int r = 0; r < level.rows; ++r) {
    const std::string& line = lines[row_begin + static_cast<std::size_t>(r)];
    if (static_cast<int>(line.size()) != level.cols) {
      throw LevelError("row length " + std::to_string(line.size()) + " differs from " + std::to_string(level.cols), r);
    }
    for (int c = 0; c < level.cols; ++c) {
      Cell& cell = level.grid[static_cast<std::size_t>(r * level.cols + c)];
      switch (line[static_cast<std::size_t>(c)]) {
        case '.': break;
        case '#': cell = Cell::Solid; break;
        case 'M':
          if (have_start) throw LevelError("multiple starts", r, c);
          have_start = true;
          level.start_row = r;
          level.start_col = c;
          break;
        case 'F':
          if (finish && *finish != c) throw LevelError("finish cells in more than one column", r, c);
          finish = c;
          cell = Cell::Finish;
          break;
        case 'e': level.enemies.push_back({EnemyKind::Walker, r, c}); break;
        case 'w': level.enemies.push_back({EnemyKind::Flyer, r, c}); break;
        default:
          throw LevelError(std::string("unknown glyph '") + line[static_cast<std::size_t>(c)] + "'", r, c);
      }
    }
  }
  if (!have_start) throw LevelError("missing start 'M'");
  if (!finish) throw LevelError("missing finish 'F'");
  level.finish_col = *finish;
  if (level.finish_col == level.start_col) throw LevelError("finish column equals start column", -1);

  bool floor = false;
  for (int r = level.start_row + 1; r < level.rows; ++r) floor = floor || level.solid(r, level.start_col);
  if (!floor) throw LevelError("spawn over a hole", level.start_row, level.start_col);
  if (level.tick_limit < static_cast<std::size_t>(level.cols)) {
    throw LevelError("tick limit " + std::to_string(level.tick_limit) + " is below the level width " +
                     std::to_string(level.cols));
  }
  return level;
}

Level load_level_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LevelError("cannot read level file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_level(buf.str());
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

std::size_t EnvState::live_enemies() const {
  return static_cast<std::size_t>(std::count_if(enemies.begin(), enemies.end(), [](const Enemy& e) { return e.alive; }));
}

EnvState initial_state(std::shared_ptr<const Level> level) {
  EnvState s;
  s.agent.row = level->start_row;
  s.agent.col = level->start_col;
  s.agent.form = level->initial_form;
  s.agent.facing = level->direction();
  std::size_t id = 0;
  for (const EnemySpawn& spawn : level->enemies) {
    Enemy e;
    e.id = id++;
    e.kind = spawn.kind;
    e.row = spawn.row;
    e.col = spawn.col;
    e.base_row = spawn.row;
    s.enemies.push_back(e);
  }
  s.initial_enemy_count = s.enemies.size();
  s.agent.grounded = level->solid(s.agent.row + 1, s.agent.col);
  s.level = std::move(level);
  return s;
}

namespace {

constexpr std::array<int, 8> kFlyerWave = {0, 1, 2, 1, 0, -1, -2, -1};

int sign(int x) { return (x > 0) - (x < 0); }

bool supported(const Level& L, int row, int col) { return L.solid(row + 1, col); }

int height_of(const Level& L, const AgentState& a) {
  if (a.form == Form::Small || a.crouching) return 1;
  return (a.row - 1 >= 0 && !L.solid(a.row - 1, a.col)) ? 2 : 1;
}

bool can_walk(const Level& L, const AgentState& a, int dir) {
  const int target = a.col + dir;
  if (target < 0 || target >= L.cols || a.row >= L.rows) return false;
  if (L.solid(a.row, target)) return false;
  return height_of(L, a) == 1 || !L.solid(a.row - 1, target);
}

bool hits_enemy(std::vector<Enemy>& enemies, int row, int col, std::size_t& kills) {
  for (Enemy& e : enemies) {
    if (e.alive && e.row == row && e.col == col) {
      e.alive = false;
      ++kills;
      return true;
    }
  }
  return false;
}

}  // namespace

int body_height(const EnvState& s) { return height_of(*s.level, s.agent); }

EnvState step(const EnvState& state, std::optional<ActionId> action) {
  if (state.terminal != Terminal::None) throw std::logic_error("step on a terminal state");
  EnvState n = state;
  const Level& L = *n.level;
  AgentState& ag = n.agent;
  const int prev_row = ag.row;
  const std::size_t now = n.tick + 1;  // 1-based index of this tick

  // (1) action
  bool actuated = false;
  ag.crouching = false;
  if (action) {
    switch (*action) {
      case ActionId::WalkRight:
      case ActionId::WalkLeft: {
        const int dir = *action == ActionId::WalkRight ? 1 : -1;
        ag.facing = dir;
        if (can_walk(L, ag, dir)) {
          ag.col += dir;
          actuated = true;
        }
        break;
      }
      case ActionId::Jump:
        if (supported(L, ag.row, ag.col) && ag.vertical_velocity <= 0) {
          ag.vertical_velocity = 2;
          actuated = true;
        }
        break;
      case ActionId::Crouch:
        if (supported(L, ag.row, ag.col)) {
          ag.crouching = true;
          actuated = true;
        }
        break;
      case ActionId::Shoot:
        if (ag.form == Form::Fire && n.projectiles.size() < 2) {
          n.projectiles.push_back({ag.row, ag.col, ag.facing});
          actuated = true;
        }
        break;
    }
  }
  n.last_actuated = actuated ? action : std::nullopt;

  // (2) vertical physics
  if (ag.vertical_velocity > 0) {
    for (int i = 0; i < ag.vertical_velocity; ++i) {
      const int head = ag.row - height_of(L, ag) + 1;
      if (head - 1 < 0 || L.solid(head - 1, ag.col)) {
        ag.vertical_velocity = 1;  // decays to 0 below
        break;
      }
      --ag.row;
    }
    --ag.vertical_velocity;
  } else if (supported(L, ag.row, ag.col)) {
    ag.vertical_velocity = 0;
  } else {
    ++ag.row;
    ag.vertical_velocity = -1;
  }
  ag.grounded = supported(L, ag.row, ag.col) && ag.vertical_velocity <= 0;
  if (ag.row >= L.rows) ag.alive = false;
  n.max_progress = std::max(n.max_progress, (ag.col - L.start_col) * L.direction());

  // (3) projectiles
  {
    std::vector<Projectile> live;
    for (Projectile p : n.projectiles) {
      bool gone = false;
      for (int i = 0; i < 2 && !gone; ++i) {
        p.col += p.direction;
        if (!L.in_grid(p.row, p.col) || L.solid(p.row, p.col)) gone = true;
        else if (hits_enemy(n.enemies, p.row, p.col, n.kills)) gone = true;
      }
      if (!gone) live.push_back(p);
    }
    n.projectiles = std::move(live);
  }

  // (4) enemies
  for (Enemy& e : n.enemies) {
    if (!e.alive) continue;
    if (e.kind == EnemyKind::Walker) {
      if (!supported(L, e.row, e.col)) {
        ++e.row;
        if (e.row >= L.rows) {
          e.alive = false;
          ++n.fallen;
        }
        continue;
      }
      if (now % 2 == 0) {
        const int dir = sign(ag.col - e.col);
        if (dir != 0) {
          const int target = e.col + dir;
          if (target < 0 || target >= L.cols || L.solid(e.row, target)) {
            e.direction = -dir;
          } else {
            e.direction = dir;
            e.col = target;
          }
        }
      }
      e.phase = now % 2;
    } else {
      e.phase = now % kFlyerWave.size();
      const int row = e.base_row - kFlyerWave[e.phase];
      if (L.in_grid(row, e.col) && !L.solid(row, e.col)) e.row = row;
      if (now % 3 == 0) {
        const int dir = sign(ag.col - e.col);
        const int target = e.col + dir;
        if (dir != 0 && L.in_grid(e.row, target) && !L.solid(e.row, target)) {
          e.direction = dir;
          e.col = target;
        }
      }
    }
  }

  // (5) contacts
  if (ag.alive) {
    const int height = height_of(L, ag);
    for (Enemy& e : n.enemies) {
      if (!e.alive || !ag.alive) continue;
      const bool touching = e.col == ag.col && (e.row == ag.row || (height == 2 && e.row == ag.row - 1));
      if (!touching) continue;
      e.alive = false;
      if (prev_row < e.row) {
        ++n.kills;  // landed on it
        continue;
      }
      ++n.despawned;
      ++ag.hurt_count;
      switch (ag.form) {
        case Form::Fire: ag.form = Form::Big; break;
        case Form::Big: ag.form = Form::Small; break;
        case Form::Small: ag.alive = false; break;
      }
    }
  }

  // (6), (7) terminal conditions
  const bool at_finish = L.direction() > 0 ? ag.col >= L.finish_col : ag.col <= L.finish_col;
  if (!ag.alive) n.terminal = Terminal::Died;
  else if (at_finish) n.terminal = Terminal::ReachedFinish;
  n.tick = now;
  if (n.terminal == Terminal::None && n.tick >= L.tick_limit) n.terminal = Terminal::TimedOut;
  return n;
}

Blackboard observe(const EnvState& s) {
  const Level& L = *s.level;
  const AgentState& ag = s.agent;
  Blackboard bb;
  for (int wr = 0; wr < kFieldSize; ++wr) {
    for (int wc = 0; wc < kFieldSize; ++wc) {
      const int r = ag.row - 2 + wr;
      const int c = ag.col - 2 + wc;
      bool obstacle = false;
      if (r >= 0) obstacle = (r >= L.rows || c < 0 || c >= L.cols) ? true : L.solid(r, c);
      bool enemy = false;
      for (const Enemy& e : s.enemies) enemy = enemy || (e.alive && e.row == r && e.col == c);
      bb.set({wr, wc, Predicate::ObstacleAt}, obstacle);
      bb.set({wr, wc, Predicate::EnemyAt}, enemy);
    }
  }
  const bool on_ground = ag.alive && supported(L, ag.row, ag.col);
  auto exec = [&](ActionId a, bool v) { bb.executable[static_cast<std::size_t>(a)] = v; };
  exec(ActionId::WalkRight, ag.alive && can_walk(L, ag, 1));
  exec(ActionId::WalkLeft, ag.alive && can_walk(L, ag, -1));
  exec(ActionId::Jump, on_ground && ag.vertical_velocity <= 0);
  exec(ActionId::Crouch, on_ground);
  exec(ActionId::Shoot, ag.alive && ag.form == Form::Fire && s.projectiles.size() < 2);
  bb.previous_actuated = s.last_actuated;
  return bb;
}

double evaluate_fitness(const EnvState& s, const FitnessWeights& w) {
  if (s.terminal == Terminal::ReachedFinish) return 1.0;
  const Level& L = *s.level;
  const double progress = static_cast<double>(std::max(0, s.max_progress)) / static_cast<double>(L.course_length());
  const double kills =
      static_cast<double>(s.kills) / static_cast<double>(std::max<std::size_t>(1, s.initial_enemy_count));
  // Time left only pays out at the finish, where γ is already 1.
  const double g = w.progress * progress + w.kill * kills + w.time * 0.0 - w.hurt * static_cast<double>(s.agent.hurt_count);
  return std::clamp(g, 0.0, w.cap);
}

// ---------------------------------------------------------------------------

double Episode::gamma_at(std::size_t steps) const {
  if (steps == 0 || trace.empty()) return initial_gamma;
  return trace[std::min(steps, trace.size()) - 1].gamma;
}

const ConditionSet& Episode::conditions_at(std::size_t steps) const {
  if (steps == 0 || trace.empty()) return initial_conditions;
  return trace[std::min(steps, trace.size()) - 1].conditions;
}

Episode run_episode(const BehaviorTree& tree, std::shared_ptr<const Level> level, std::uint64_t /*seed*/,
                    const FitnessWeights& weights, const StepObserver& on_step) {
  Episode ep;
  EnvState s = initial_state(std::move(level));
  Blackboard bb = observe(s);
  ep.initial_conditions = bb.conditions;
  ep.initial_gamma = evaluate_fitness(s, weights);
  ep.trace.reserve(s.level->tick_limit);
  if (on_step) on_step(s);
  while (s.terminal == Terminal::None) {
    bb.begin_tick();
    tick(tree, bb);
    const auto requested = bb.requested;
    s = step(s, requested);
    bb = observe(s);
    ep.trace.push_back({s.tick - 1, requested, evaluate_fitness(s, weights), bb.conditions});
    if (on_step) on_step(s);
  }
  ep.final_state = std::move(s);
  return ep;
}

std::string trace_jsonl(const Episode& episode) {
  std::string out;
  for (const TraceEntry& e : episode.trace) {
    nlohmann::json j;
    j["t"] = e.tick;
    j["a"] = e.action ? nlohmann::json(to_string(*e.action)) : nlohmann::json(nullptr);
    j["g"] = e.gamma;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string render_ascii(const EnvState& s) {
  const Level& L = *s.level;
  std::vector<std::string> rows(static_cast<std::size_t>(L.rows), std::string(static_cast<std::size_t>(L.cols), '.'));
  auto put = [&](int r, int c, char ch) {
    if (L.in_grid(r, c)) rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = ch;
  };
  for (int r = 0; r < L.rows; ++r) {
    for (int c = 0; c < L.cols; ++c) {
      if (L.at(r, c) == Cell::Solid) put(r, c, '#');
      else if (L.at(r, c) == Cell::Finish) put(r, c, 'F');
    }
  }
  for (const Projectile& p : s.projectiles) put(p.row, p.col, '*');
  for (const Enemy& e : s.enemies) {
    if (e.alive) put(e.row, e.col, e.kind == EnemyKind::Walker ? 'e' : 'w');
  }
  if (s.agent.alive) {
    put(s.agent.row, s.agent.col, 'M');
    if (body_height(s) == 2) put(s.agent.row - 1, s.agent.col, 'm');
  }
  std::ostringstream os;
  os << "tick " << s.tick << " form " << to_string(s.agent.form) << " gamma " << evaluate_fitness(s) << '\n';
  for (const std::string& r : rows) os << r << '\n';
  return os.str();
}

}  // namespace btforge
