// hcpi: train, evaluate and export HCPI-RL runs.
//
//   hcpi train  [--config FILE] --seed N [--out ROOT] [--section.key VALUE ...]
//   hcpi eval   (--checkpoint FILE | --policy rule) --seed N [--scenario NAME] [--episodes K]
//   hcpi export --run DIR [--what trajectories|learning-curve|all] [--episodes K]
//
// Exit codes: 0 success, 1 usage, 2 configuration error, 3 numerical or replay error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hcpi/core/error.hpp"
#include "hcpi/trainer/artifacts.hpp"
#include "hcpi/trainer/config.hpp"
#include "hcpi/trainer/evaluate.hpp"
#include "hcpi/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace hcpi;
using namespace hcpi::trainer;

namespace {

constexpr const char* kOutRootVariable = "HCPI_OUT_ROOT";

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

fs::path output_root(const GlobalOptions& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv(kOutRootVariable); env && *env) return env;
  return "runs";
}

TrainerConfig base_config(const GlobalOptions& g) {
  TrainerConfig c = g.config.empty() ? TrainerConfig{} : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

/// "--section.key value", "--section.key=value" and "section.key=value" pairs.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string a = args[i];
    if (a.rfind("--", 0) == 0) a = a.substr(2);
    if (const auto eq = a.find('='); eq != std::string::npos) {
      out.emplace_back(a.substr(0, eq), a.substr(eq + 1));
    } else {
      if (a.find('.') == std::string::npos || i + 1 >= args.size())
        throw ConfigError("unrecognized argument '" + args[i] + "' (overrides take the form --section.key VALUE)");
      out.emplace_back(a, args[++i]);
    }
  }
  return out;
}

/// New directory under `root`; an existing name gets a numeric suffix so
/// finished runs are never overwritten.
fs::path fresh_run_dir(const fs::path& root, const TrainerConfig& c) {
  std::string name = c.run_name;
  if (name.empty()) {
    std::ostringstream os;
    os << "run-" << c.require_seed() << "-" << std::hex << std::setw(8) << std::setfill('0') << (config_hash(c) & 0xffffffffULL);
    name = os.str();
  }
  fs::path dir = root / name;
  for (int k = 2; fs::exists(dir); ++k) dir = root / (name + "-" + std::to_string(k));
  return dir;
}

int cmd_train(const GlobalOptions& g, const std::vector<std::string>& extras) {
  TrainerConfig c = base_config(g);
  for (const auto& [key, value] : parse_overrides(extras)) apply_override(c, key, value);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  c.require_seed();
  const fs::path dir = fresh_run_dir(output_root(g), c);
  std::cout << "run directory: " << dir.string() << '\n';
  Trainer t(c, dir);
  t.run([](const IterationReport& r) {
    std::cout << "cycle " << r.cycle << " m_paper " << format_number(r.m_paper) << " tag " << r.policy_tag << " adopted "
              << r.adopted;
    if (r.decision)
      std::cout << " rho_lower " << format_number(r.decision->rho_lower) << " rho_cur " << format_number(r.decision->rho_cur);
    std::cout << " current_return " << format_number(r.current_return) << " success " << format_number(r.current_success)
              << " deployed " << to_string(r.active);
    if (r.failed) std::cout << " failed: " << r.failure;
    std::cout << '\n';
  });
  std::cout << "final " << summary_line(t.final_summary()) << '\n';
  return 0;
}

int cmd_eval(const GlobalOptions& g, const std::string& checkpoint, const std::string& policy,
             const std::string& scenario, int episodes, bool stochastic, std::string name) {
  TrainerConfig c;
  std::optional<RunCheckpoint> ck;
  if (policy == "rule") {
    c = base_config(g);
  } else {
    if (checkpoint.empty()) throw ConfigError("eval: pass --checkpoint FILE or --policy rule");
    ck = load_run_checkpoint(checkpoint);
    c = ck->config;
  }
  if (!scenario.empty() && scenario != c.scenario) {
    // the stored knobs belong to the training scenario
    const auto steps = c.scenario_overrides.episode_steps;
    const auto dt = c.scenario_overrides.dt;
    c.scenario = scenario;
    c.scenario_overrides = {};
    c.scenario_overrides.episode_steps = steps;
    c.scenario_overrides.dt = dt;
  }
  if (!g.seed) throw ConfigError("eval: --seed is mandatory");
  c.validate();
  const std::uint64_t root = evaluation_root(*g.seed);
  const auto spec = c.scenario_spec();
  const auto bounds = c.bounds();
  const double gamma = c.update.gamma;
  EvalSummary s;
  if (!ck) s = evaluate_rule(c.env, spec, episodes, root, gamma, bounds);
  else if (stochastic) s = evaluate_sampled(ck->policy, c.env, spec, episodes, root, gamma, bounds);
  else s = evaluate_mean(ck->policy, c.env, spec, episodes, root, gamma, bounds);

  if (name.empty()) name = (ck ? fs::path(checkpoint).stem().string() : std::string("rule")) + "_" + spec.name;
  const fs::path dir = output_root(g);
  fs::create_directories(dir);
  write_evaluation(dir / ("eval_" + name + ".csv"), s);
  write_evaluation_summary(dir / ("eval_" + name + "_summary.csv"), s);
  std::cout << summary_line(s) << '\n';
  return 0;
}

int cmd_export(const std::string& run, const std::string& what, int episodes) {
  const fs::path dir = run;
  const fs::path out = dir / "export";
  if (what != "learning-curve") {
    if (const auto missing = missing_run_files(dir); !missing.empty()) {
      std::string msg = "run directory '" + dir.string() + "' lacks:";
      for (const auto& f : missing) msg += " " + f;
      throw ConfigError(msg);
    }
  }
  if (what == "learning-curve" || what == "all") {
    if (!fs::exists(dir / "metrics.csv")) throw ConfigError("run directory '" + dir.string() + "' lacks: metrics.csv");
    fs::create_directories(out);
    write_learning_curve(dir / "metrics.csv", out / "learning_curve.csv");
    std::cout << (out / "learning_curve.csv").string() << '\n';
  }
  if (what == "trajectories" || what == "all") {
    for (const auto& f : export_trajectories(dir, out, episodes)) std::cout << f.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HCPI-RL: gated actor-critic training on a highway simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_extras();  // section.key overrides; only train accepts them
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root seed (mandatory for train and eval)");
  app.add_option("--out", g.out, std::string("output root; defaults to $") + kOutRootVariable + " or ./runs");

  auto* train = app.add_subcommand("train", "run the training loop; extra --section.key VALUE pairs override the config");
  train->allow_extras();

  std::string checkpoint, policy, scenario, name;
  int eval_episodes = 100;
  bool stochastic = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or the rule policy on matched seeds");
  eval->add_option("--checkpoint", checkpoint, "run checkpoint")->check(CLI::ExistingFile);
  eval->add_option("--policy", policy, "'rule' evaluates the rule planner without a checkpoint")
      ->check(CLI::IsMember({"rule"}));
  eval->add_option("--scenario", scenario, "cut_in, emergency_brake or daily_cruise");
  eval->add_option("--episodes", eval_episodes, "episode count")->check(CLI::PositiveNumber);
  eval->add_option("--name", name, "output stem: eval_<name>.csv");
  eval->add_flag("--stochastic", stochastic, "sample actions instead of using the policy mean");

  std::string run, what = "all";
  int export_episodes = 3;
  auto* exp = app.add_subcommand("export", "write trajectory and learning-curve CSVs for a run directory");
  exp->add_option("--run", run, "run directory")->required();
  exp->add_option("--what", what, "trajectories, learning-curve or all")
      ->check(CLI::IsMember({"trajectories", "learning-curve", "all"}));
  exp->add_option("--episodes", export_episodes, "trajectory episodes to export")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  const std::vector<std::string> extras = app.remaining(true);
  if (!*train && !extras.empty()) {
    std::cerr << "unexpected argument '" << extras.front() << "'\n";
    return 1;
  }
  try {
    if (*train) return cmd_train(g, extras);
    if (*eval) return cmd_eval(g, checkpoint, policy, scenario, eval_episodes, stochastic, name);
    if (*exp) return cmd_export(run, what, export_episodes);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
