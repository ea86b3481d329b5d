#include "btforge/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "btforge/bloat.hpp"
#include "btforge/learning.hpp"
#include "btforge/log.hpp"
#include "btforge/platform.hpp"
#include "btforge/text.hpp"
#include "json.hpp"

namespace btforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

BehaviorTree load_tree(const fs::path& path) { return parse(read_file(path)); }

std::shared_ptr<const Level> load_level_shared(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("no such level file " + path.string());
  return std::make_shared<const Level>(load_level_file(path));
}

SelectionMethod parse_selection(const std::string& s) {
  if (s == "naive") return SelectionMethod::Naive;
  if (s == "rank") return SelectionMethod::RankSpace;
  if (s == "diversity") return SelectionMethod::DiversityRank;
  throw UsageError("unknown selection method '" + s + "'");
}

std::string fmt_gamma(double g) {
  std::ostringstream os;
  os << std::setprecision(17) << g;
  return os.str();
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

json config_to_json(const LearnerConfig& c) {
  const GpConfig& g = c.gp;
  return {
      {"tau", c.tau},
      {"greedyImprovementEpsilon", c.greedy_improvement_epsilon},
      {"maxPhases", c.max_phases},
      {"prune", c.prune},
      {"gp",
       {{"populationSize", g.population_size},
        {"maxGenerations", g.max_generations},
        {"crossoverProbability", g.crossover_probability},
        {"annealInitialMutations", g.anneal_initial_mutations},
        {"annealDecay", g.anneal_decay},
        {"selection", to_string(g.selection)},
        {"rankPc", g.rank_pc},
        {"elitism", g.elitism},
        {"strictMutation", g.strict_mutation},
        {"mutation", g.mutation},
        {"maxTreeNodes", g.max_tree_nodes},
        {"crossoverRetries", g.crossover_retries},
        {"pool",
         {{"selector", g.pool.selector},
          {"sequence", g.pool.sequence},
          {"parallel", g.pool.parallel},
          {"decorator", g.pool.decorator},
          {"action", g.pool.action},
          {"condition", g.pool.condition}}}}},
      {"weights",
       {{"progress", c.weights.progress},
        {"kill", c.weights.kill},
        {"time", c.weights.time},
        {"hurt", c.weights.hurt},
        {"cap", c.weights.cap}}},
  };
}

LearnerConfig config_from_json(const json& j) {
  LearnerConfig c;
  c.tau = j.at("tau").get<std::size_t>();
  c.greedy_improvement_epsilon = j.at("greedyImprovementEpsilon").get<double>();
  c.max_phases = j.at("maxPhases").get<std::size_t>();
  c.prune = j.at("prune").get<bool>();
  const json& g = j.at("gp");
  c.gp.population_size = g.at("populationSize").get<std::size_t>();
  c.gp.max_generations = g.at("maxGenerations").get<std::size_t>();
  c.gp.crossover_probability = g.at("crossoverProbability").get<double>();
  c.gp.anneal_initial_mutations = g.at("annealInitialMutations").get<std::size_t>();
  c.gp.anneal_decay = g.at("annealDecay").get<double>();
  c.gp.selection = parse_selection(g.at("selection").get<std::string>());
  c.gp.rank_pc = g.at("rankPc").get<double>();
  c.gp.elitism = g.at("elitism").get<std::size_t>();
  c.gp.strict_mutation = g.at("strictMutation").get<bool>();
  c.gp.mutation = g.at("mutation").get<bool>();
  c.gp.max_tree_nodes = g.at("maxTreeNodes").get<std::size_t>();
  c.gp.crossover_retries = g.at("crossoverRetries").get<std::size_t>();
  const json& p = g.at("pool");
  c.gp.pool.selector = p.at("selector").get<bool>();
  c.gp.pool.sequence = p.at("sequence").get<bool>();
  c.gp.pool.parallel = p.at("parallel").get<bool>();
  c.gp.pool.decorator = p.at("decorator").get<bool>();
  c.gp.pool.action = p.at("action").get<bool>();
  c.gp.pool.condition = p.at("condition").get<bool>();
  const json& w = j.at("weights");
  c.weights.progress = w.at("progress").get<double>();
  c.weights.kill = w.at("kill").get<double>();
  c.weights.time = w.at("time").get<double>();
  c.weights.hurt = w.at("hurt").get<double>();
  c.weights.cap = w.at("cap").get<double>();
  return c;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct LearnArgs {
  std::string level;
  std::uint64_t seed = 0;
  std::size_t tau = 60;
  std::size_t pop_size = 24;
  std::size_t generations = 20;
  std::size_t max_phases = 64;
  std::string selection = "rank";
  double pc = 2.0 / 3.0;
  std::string out;
  bool no_prune = false;
  bool strict_mutation = false;
  std::string manifest;
};

int cmd_learn(const LearnArgs& a, std::ostream& out) {
  LearnerConfig config;
  std::string level_path = a.level;
  std::uint64_t seed = a.seed;
  if (!a.manifest.empty()) {
    json m;
    try {
      m = json::parse(read_file(a.manifest));
      config = config_from_json(m.at("config"));
      if (level_path.empty()) level_path = m.at("levelPath").get<std::string>();
      seed = m.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("bad manifest: ") + e.what());
    }
  } else {
    config.tau = a.tau;
    config.max_phases = a.max_phases;
    config.prune = !a.no_prune;
    config.gp.population_size = a.pop_size;
    config.gp.max_generations = a.generations;
    config.gp.selection = parse_selection(a.selection);
    config.gp.rank_pc = a.pc;
    config.gp.strict_mutation = a.strict_mutation;
  }
  if (level_path.empty()) throw UsageError("--level is required");
  if (a.out.empty()) throw UsageError("--out is required");
  config.rng_seed = seed;
  config.gp.rng_seed = seed;
  try {
    config.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto level = load_level_shared(level_path);
  const auto started = std::chrono::steady_clock::now();
  const LearnResult result = learn(level, config);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path bt_path = a.out;
  const std::string base = bt_path.string();
  const std::string phases_path = base + ".phases.jsonl";
  const std::string trace_path = base + ".trace.jsonl";
  const std::string prune_path = base + ".prune.json";
  const std::string manifest_path = base + ".manifest.json";

  write_file(bt_path, print_document(result.tree));
  write_file(phases_path, phase_log_jsonl(result.phases));
  write_file(trace_path, trace_jsonl(run_episode(result.tree, level, seed, config.weights)));
  json outputs{{"bt", base}, {"phases", phases_path}, {"trace", trace_path}};
  if (!result.prune_report_json.empty()) {
    write_file(prune_path, result.prune_report_json + "\n");
    outputs["prune"] = prune_path;
  }
  json manifest{{"config", config_to_json(config)},
                {"levelPath", level_path},
                {"seed", seed},
                {"outputs", outputs},
                {"wallClock", wall},
                {"result",
                 {{"gamma", result.gamma},
                  {"reachedGoal", result.reached_goal},
                  {"budgetExhausted", result.budget_exhausted},
                  {"phasesUsed", result.phases_used},
                  {"increments", result.increments},
                  {"gpInvocations", result.gp_invocations},
                  {"gpWarning", result.gp_warning},
                  {"nodes", result.tree.size()},
                  {"unprunedNodes", result.unpruned_tree.size()}}}};
  write_file(manifest_path, manifest.dump(2) + "\n");

  out << "gamma=" << fmt_gamma(result.gamma) << " nodes=" << result.tree.size()
      << " unpruned_nodes=" << result.unpruned_tree.size() << " phases=" << result.phases_used
      << " increments=" << result.increments << " gp=" << result.gp_invocations << '\n';
  return result.reached_goal ? kExitSuccess : kExitGoalMissed;
}

struct RunArgs {
  std::string bt;
  std::string level;
  std::uint64_t seed = 0;
  std::string trace;
  bool ascii = false;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  const BehaviorTree tree = load_tree(a.bt);
  const auto level = load_level_shared(a.level);
  StepObserver frames;
  if (a.ascii) frames = [&](const EnvState& s) { out << render_ascii(s) << '\n'; };
  const Episode ep = run_episode(tree, level, a.seed, {}, frames);
  if (!a.trace.empty()) write_file(a.trace, trace_jsonl(ep));
  out << "gamma=" << fmt_gamma(ep.final_gamma()) << " terminal=" << to_string(ep.final_state.terminal)
      << " ticks=" << ep.final_state.tick << '\n';
  return ep.final_gamma() >= 1.0 ? kExitSuccess : kExitGoalMissed;
}

struct SimplifyArgs {
  std::string bt;
  std::string level;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simplify(const SimplifyArgs& a, std::ostream& out) {
  const BehaviorTree tree = load_tree(a.bt);
  const auto level = load_level_shared(a.level);
  auto [pruned, report] =
      prune(tree, [&](const BehaviorTree& t) { return run_episode(t, level, a.seed).final_gamma(); });
  write_file(a.out, print_document(pruned));
  write_file(a.out + ".prune.json", report.to_json() + "\n");
  out << report.to_json() << '\n';
  return kExitSuccess;
}

int cmd_render(const std::string& bt, const std::string& format, std::ostream& out) {
  const BehaviorTree tree = load_tree(bt);
  out << (format == "dot" ? to_dot(tree) : to_outline(tree));
  return kExitSuccess;
}

struct EvalArgs {
  std::string bt;
  std::string levels;
  std::size_t seeds = 1;
  bool json_out = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const BehaviorTree tree = load_tree(a.bt);
  if (!fs::is_directory(a.levels)) throw UsageError("no such level directory " + a.levels);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.levels)) {
    if (entry.is_regular_file() && entry.path().extension() == ".lvl") files.push_back(entry.path());
  }
  if (files.empty()) throw UsageError("no .lvl files in " + a.levels);
  std::sort(files.begin(), files.end());

  json rows = json::array();
  double sum = 0.0;
  double lo = 1.0;
  for (const fs::path& f : files) {
    const auto level = load_level_shared(f);
    for (std::uint64_t seed = 0; seed < a.seeds; ++seed) {
      const Episode ep = run_episode(tree, level, seed);
      const double g = ep.final_gamma();
      rows.push_back({{"level", f.filename().string()},
                      {"seed", seed},
                      {"gamma", g},
                      {"terminal", to_string(ep.final_state.terminal)}});
      sum += g;
      lo = std::min(lo, g);
    }
  }
  const double mean = sum / static_cast<double>(rows.size());
  if (a.json_out) {
    out << json{{"rows", rows}, {"mean", mean}, {"min", lo}}.dump(2) << '\n';
  } else {
    out << std::left << std::setw(24) << "level" << std::setw(8) << "seed" << std::setw(12) << "gamma"
        << "terminal\n";
    for (const json& r : rows) {
      out << std::setw(24) << r["level"].get<std::string>() << std::setw(8) << r["seed"].get<std::uint64_t>()
          << std::setw(12) << fmt_gamma(r["gamma"].get<double>()) << r["terminal"].get<std::string>() << '\n';
    }
    out << "mean " << fmt_gamma(mean) << " min " << fmt_gamma(lo) << '\n';
  }
  return kExitSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learn, run and simplify behavior trees for a grid platformer", "btforge"};
  app.require_subcommand(1);

  LearnArgs learn_args;
  auto* learn_cmd = app.add_subcommand("learn", "grow a tree on a level");
  learn_cmd->add_option("--level", learn_args.level, "level file");
  learn_cmd->add_option("--seed", learn_args.seed, "root seed");
  learn_cmd->add_option("--tau", learn_args.tau, "moving window in ticks")->check(CLI::PositiveNumber);
  learn_cmd->add_option("--pop-size", learn_args.pop_size, "GP population size")->check(CLI::PositiveNumber);
  learn_cmd->add_option("--generations", learn_args.generations, "GP generation budget")->check(CLI::PositiveNumber);
  learn_cmd->add_option("--max-phases", learn_args.max_phases, "phase budget")->check(CLI::PositiveNumber);
  learn_cmd->add_option("--selection", learn_args.selection, "naive|rank|diversity")
      ->check(CLI::IsMember({"naive", "rank", "diversity"}));
  learn_cmd->add_option("--pc", learn_args.pc, "rank-space probability of the best individual");
  learn_cmd->add_option("--out", learn_args.out, "output .bt path");
  learn_cmd->add_flag("--no-prune", learn_args.no_prune, "skip anti-bloat");
  learn_cmd->add_flag("--strict-mutation", learn_args.strict_mutation, "mutate actions to actions, conditions to conditions");
  learn_cmd->add_option("--manifest", learn_args.manifest, "replay the configuration of an earlier run");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run a tree on a level");
  run_cmd->add_option("--bt", run_args.bt, "tree file")->required();
  run_cmd->add_option("--level", run_args.level, "level file")->required();
  run_cmd->add_option("--seed", run_args.seed, "episode seed");
  run_cmd->add_option("--trace", run_args.trace, "write the JSON-lines trace here");
  run_cmd->add_flag("--ascii", run_args.ascii, "print a frame per tick");

  SimplifyArgs simplify_args;
  auto* simplify_cmd = app.add_subcommand("simplify", "prune a tree against a level");
  simplify_cmd->add_option("--bt", simplify_args.bt, "tree file")->required();
  simplify_cmd->add_option("--level", simplify_args.level, "level file")->required();
  simplify_cmd->add_option("--seed", simplify_args.seed, "episode seed");
  simplify_cmd->add_option("--out", simplify_args.out, "output .bt path")->required();

  std::string render_bt;
  std::string render_format = "ascii";
  auto* render_cmd = app.add_subcommand("render", "print a tree as DOT or an outline");
  render_cmd->add_option("--bt", render_bt, "tree file")->required();
  render_cmd->add_option("--format", render_format, "dot|ascii")->check(CLI::IsMember({"dot", "ascii"}));

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "tabulate γ over a directory of levels");
  eval_cmd->add_option("--bt", eval_args.bt, "tree file")->required();
  eval_cmd->add_option("--levels", eval_args.levels, "directory of .lvl files")->required();
  eval_cmd->add_option("--seeds", eval_args.seeds, "seeds per level")->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--json", eval_args.json_out, "machine-readable output");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    log::init_from_env();
    if (learn_cmd->parsed()) return cmd_learn(learn_args, out);
    if (run_cmd->parsed()) return cmd_run(run_args, out);
    if (simplify_cmd->parsed()) return cmd_simplify(simplify_args, out);
    if (render_cmd->parsed()) return cmd_render(render_bt, render_format, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LevelError& e) {
    err << "error: level: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace btforge
