#pragma once

// Run-directory artifacts: manifest, evaluation tables, trajectory exports and
// the learning curve. Every CSV written here has a fixed header; a header
// change bumps kCsvFormatVersion, which the manifest records.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcpi/core/error.hpp"
#include "hcpi/nn/checkpoint.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/trainer/config.hpp"
#include "hcpi/trainer/csv.hpp"
#include "hcpi/trainer/evaluate.hpp"

namespace hcpi::trainer {

namespace fs = std::filesystem;

inline constexpr int kCsvFormatVersion = 1;

inline constexpr const char* kEvalHeader =
    "episode,seed,steps,collision,return,normalized_return,r_eff,r_comf,r_risk,r_coll,average_speed,distance,"
    "lane_changes";
inline constexpr const char* kEvalSummaryHeader =
    "episodes,success_rate,mean_return,mean_normalized_return,r_eff,r_comf,r_risk,r_coll,average_speed,"
    "lane_changes_per_km";
inline constexpr const char* kTrajectoryHeader = "t,x_e,y_e,v_e,a,delta_f,lane,reward,r_eff,r_comf,r_risk,r_coll,collision";
inline constexpr const char* kVehicleHeader = "t,x,y,v,a,heading,delta_f,lane";
inline constexpr const char* kLearningCurveHeader = "cycle,m_env,eval_return,r_eff,r_comf,r_risk,r_coll";

/// Files every completed run directory holds.
inline std::vector<std::string> required_run_files() {
  return {"run.json", "config.resolved", "metrics.csv", "gate_log.csv", "timing.csv", "eval_final.csv",
          "checkpoints/final.ckpt"};
}

inline std::vector<std::string> missing_run_files(const fs::path& run_dir) {
  std::vector<std::string> out;
  for (const auto& f : required_run_files())
    if (!fs::exists(run_dir / f)) out.push_back(f);
  return out;
}

inline void write_manifest(const fs::path& run_dir, const TrainerConfig& config) {
  nlohmann::ordered_json m;
  m["csv_format_version"] = kCsvFormatVersion;
  m["checkpoint_format_version"] = nn::kCheckpointFormatVersion;
  m["config_hash"] = config_hash(config);
  m["seed"] = config.require_seed();
  std::ofstream(run_dir / "run.json") << m.dump(2) << '\n';
}

inline void write_evaluation(const fs::path& path, const EvalSummary& s) {
  if (fs::exists(path)) fs::remove(path);
  CsvWriter out(path, kEvalHeader);
  for (std::size_t i = 0; i < s.episodes.size(); ++i) {
    const auto& e = s.episodes[i];
    out.row(i, e.seed, e.steps, e.collision, e.total_return, e.normalized_return, e.composition.efficiency,
            e.composition.comfort, e.composition.risk, e.composition.collision, e.average_speed, e.distance,
            e.lane_changes);
  }
}

inline void write_evaluation_summary(const fs::path& path, const EvalSummary& s) {
  if (fs::exists(path)) fs::remove(path);
  CsvWriter out(path, kEvalSummaryHeader);
  out.row(s.episodes.size(), s.success_rate, s.mean_return, s.mean_normalized_return, s.mean_composition.efficiency,
          s.mean_composition.comfort, s.mean_composition.risk, s.mean_composition.collision, s.average_speed,
          s.lane_changes_per_km);
}

inline std::string summary_line(const EvalSummary& s) {
  std::ostringstream os;
  os << "episodes=" << s.episodes.size() << " success_rate=" << format_number(s.success_rate)
     << " mean_return=" << format_number(s.mean_return) << " r_eff=" << format_number(s.mean_composition.efficiency)
     << " r_comf=" << format_number(s.mean_composition.comfort) << " r_risk=" << format_number(s.mean_composition.risk)
     << " r_coll=" << format_number(s.mean_composition.collision) << " avg_speed=" << format_number(s.average_speed)
     << " lane_changes_per_km=" << format_number(s.lane_changes_per_km);
  return os.str();
}

/// Ego table `<stem>.csv` plus one `<stem>_vehicle_<id>.csv` per background vehicle.
inline std::vector<fs::path> write_recording(const fs::path& dir, const std::string& stem, const EpisodeRecording& rec) {
  std::vector<fs::path> written;
  const fs::path ego_path = dir / (stem + ".csv");
  if (fs::exists(ego_path)) fs::remove(ego_path);
  {
    CsvWriter out(ego_path, kTrajectoryHeader);
    for (const auto& f : rec.ego)
      out.row(f.state.t, f.state.x, f.state.y, f.state.v, f.state.accel, f.state.steer, f.state.lane, f.reward,
              f.breakdown.efficiency, f.breakdown.comfort, f.breakdown.risk, f.breakdown.collision, f.collision);
  }
  written.push_back(ego_path);
  for (const auto& [id, frames] : rec.others) {
    const fs::path p = dir / (stem + "_vehicle_" + std::to_string(id) + ".csv");
    if (fs::exists(p)) fs::remove(p);
    CsvWriter out(p, kVehicleHeader);
    for (const auto& f : frames) out.row(f.t, f.x, f.y, f.v, f.accel, f.heading, f.steer, f.lane);
    written.push_back(p);
  }
  return written;
}

/// Header-keyed CSV contents; every cell kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("csv: no column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("'" + path.string() + "' is empty");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
    if (t.rows.back().size() != t.header.size()) throw ConfigError("'" + path.string() + "': ragged row");
  }
  return t;
}

/// One row per training cycle from metrics.csv.
inline void write_learning_curve(const fs::path& metrics_path, const fs::path& out_path) {
  const CsvTable m = read_csv(metrics_path);
  const std::size_t cols[] = {m.column("cycle"),  m.column("m_env"),  m.column("current_return"), m.column("r_eff"),
                              m.column("r_comf"), m.column("r_risk"), m.column("r_coll")};
  if (fs::exists(out_path)) fs::remove(out_path);
  std::ofstream out(out_path);
  out << kLearningCurveHeader << '\n';
  for (const auto& row : m.rows) {
    for (std::size_t i = 0; i < std::size(cols); ++i) out << (i ? "," : "") << row[cols[i]];
    out << '\n';
  }
}

inline std::uint64_t evaluation_root(std::uint64_t seed) { return derive_seed(seed, {kEvalStream}); }

/// Per-cycle evaluation of the current policy: sampled actions on matched
/// seeds, or the rule policy in rule_only mode.
inline EvalSummary evaluate_current(const TrainerConfig& config, const rl::GaussianPolicy& policy, std::uint64_t root) {
  const auto spec = config.scenario_spec();
  if (config.mode == GateMode::RuleOnly)
    return evaluate_rule(config.env, spec, config.eval_episodes, root, config.update.gamma, config.bounds());
  return evaluate_sampled(policy, config.env, spec, config.eval_episodes, root, config.update.gamma, config.bounds());
}

struct RunCheckpoint {
  TrainerConfig config;
  rl::GaussianPolicy policy;
  int cycle = 0;
};

/// Current policy and resolved configuration stored by a training run.
inline RunCheckpoint load_run_checkpoint(const fs::path& path) {
  const auto ar = nn::TensorArchive::read(path.string());
  const auto& meta = ar.meta();
  if (meta.value("kind", std::string{}) != "hcpi-run") throw ConfigError("checkpoint '" + path.string() + "' is not a run checkpoint");
  RunCheckpoint ck;
  ck.config = from_json(Json::parse(meta.at("config").dump()));
  if (meta.at("config_hash").get<std::uint64_t>() != config_hash(ck.config))
    throw ConfigError("checkpoint '" + path.string() + "': configuration hash mismatch");
  ck.cycle = meta.at("cycle").get<int>();
  ck.policy = rl::GaussianPolicy(nn::load_net(ar, "actor"), ar.get_vector("actor.log_std"),
                                 rl::ObservationScaler::highway(ck.config.env.road), ck.config.action_mapping());
  return ck;
}

inline std::string file_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Replays a finished run from its final checkpoint: re-evaluates the
/// current policy on the stored evaluation seeds, requires the table to match
/// eval_final.csv byte for byte, then writes `episodes` trajectory recordings.
inline std::vector<fs::path> export_trajectories(const fs::path& run_dir, const fs::path& out_dir, int episodes) {
  if (const auto missing = missing_run_files(run_dir); !missing.empty()) {
    std::string msg = "run directory '" + run_dir.string() + "' lacks:";
    for (const auto& f : missing) msg += " " + f;
    throw ConfigError(msg);
  }
  const RunCheckpoint ck = load_run_checkpoint(run_dir / "checkpoints" / "final.ckpt");
  const TrainerConfig& cfg = ck.config;
  const std::uint64_t root = evaluation_root(cfg.require_seed());
  fs::create_directories(out_dir);

  const fs::path replay = out_dir / "replay_eval.csv";
  write_evaluation(replay, evaluate_current(cfg, ck.policy, root));
  if (file_text(replay) != file_text(run_dir / "eval_final.csv"))
    throw NumericalError("replay of '" + run_dir.string() + "' diverges from eval_final.csv");

  const auto spec = cfg.scenario_spec();
  const auto bounds = cfg.bounds();
  env::HighwayEnv hw(cfg.env);
  std::vector<fs::path> written{replay};
  for (int e = 0; e < episodes; ++e) {
    const auto k = static_cast<std::uint64_t>(e);
    Rng noise = make_rng(root, {kEvalStream, k, 1});
    const ActionSource act = cfg.mode == GateMode::RuleOnly ? rule_actions() : sampled_actions(ck.policy, noise);
    EpisodeRecording rec;
    run_evaluation_episode(hw, spec, evaluation_seed(root, k), act, cfg.update.gamma, bounds, &rec);
    const auto files = write_recording(out_dir, "trajectory_" + std::to_string(e), rec);
    written.insert(written.end(), files.begin(), files.end());
  }
  return written;
}

}  // namespace hcpi::trainer
