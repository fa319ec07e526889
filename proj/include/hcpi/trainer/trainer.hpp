#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/core/random.hpp"
#include "hcpi/env/highway_env.hpp"
#include "hcpi/gate/gate.hpp"
#include "hcpi/nn/checkpoint.hpp"
#include "hcpi/rl/advantages.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/replay_buffer.hpp"
#include "hcpi/rl/rollout.hpp"
#include "hcpi/rl/train.hpp"
#include "hcpi/trainer/artifacts.hpp"
#include "hcpi/trainer/config.hpp"
#include "hcpi/trainer/csv.hpp"
#include "hcpi/trainer/evaluate.hpp"

namespace hcpi::trainer {

namespace fs = std::filesystem;

inline constexpr const char* kMetricsHeader =
    "cycle,m_paper,m_env,policy_tag,train_size,test_size,adopted,rho_lower,rho_cur,candidate_return,current_return,"
    "current_success,r_eff,r_comf,r_risk,r_coll,active,updates,actor_loss,critic_loss,failed";
inline constexpr const char* kTimingHeader = "cycle,wall_seconds";

enum class Deployed { Rl, Rule };
inline const char* to_string(Deployed d) { return d == Deployed::Rl ? "rl" : "rule"; }

struct IterationReport {
  int cycle = 0;
  double m_paper = 0.0;
  std::int64_t m_env = 0;
  std::int64_t policy_tag = 0;  // behavior policy of this cycle's rollouts
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::optional<gate::GateDecision> decision;
  bool adopted = false;         // candidate became the current policy
  double candidate_return = 0.0;  // sampled-action matched-seed eval, normalized
  double current_return = 0.0;    // same, for the policy current after this cycle
  double current_success = 0.0;
  env::RewardBreakdown current_composition;
  Deployed active = Deployed::Rl;
  rl::TrainStats train;
  bool failed = false;
  std::string failure;
  double wall_seconds = 0.0;
};

/// Rollouts of `policy` from seeds derived from (root, cycle). Trajectory i
/// uses environment seed derive(root, collect, cycle, i, 0) and action noise
/// derive(root, collect, cycle, i, 1), so the set does not depend on the
/// order in which episodes are run.
inline std::vector<rl::Trajectory> collect(const rl::GaussianPolicy& policy, const rl::ValueFunction& critic,
                                           const env::EnvConfig& config, const env::ScenarioSpec& spec, int count,
                                           std::uint64_t root, int cycle, std::int64_t policy_tag, int lookahead,
                                           double gamma) {
  env::HighwayEnv hw(config);
  std::vector<rl::Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto c = static_cast<std::uint64_t>(cycle);
    const auto k = static_cast<std::uint64_t>(i);
    Rng noise = make_rng(root, {kCollectStream, c, k, 1});
    rl::Trajectory traj = rl::run_episode(policy, hw, spec, derive_seed(root, {kCollectStream, c, k, 0}), noise, policy_tag);
    rl::compute_advantages(traj, critic, lookahead, gamma);
    out.push_back(std::move(traj));
  }
  return out;
}

/// Higher mean normalized return wins; a tie keeps the deployed policy.
inline Deployed choose_deployed(double rl_return, double rule_return, Deployed deployed) {
  if (rl_return > rule_return) return Deployed::Rl;
  if (rule_return > rl_return) return Deployed::Rule;
  return deployed;
}

/// Matched-seed comparison of the RL policy (mean actions) and the rule policy.
inline Deployed hybrid_select(const rl::GaussianPolicy& policy, Deployed deployed, const env::EnvConfig& config,
                              const env::ScenarioSpec& spec, int episodes, std::uint64_t root, double gamma,
                              const gate::NormalizationBounds& bounds, double* rl_return = nullptr,
                              double* rule_return = nullptr) {
  const auto a = evaluate_mean(policy, config, spec, episodes, root, gamma, bounds).mean_normalized_return;
  const auto b = evaluate_rule(config, spec, episodes, root, gamma, bounds).mean_normalized_return;
  if (rl_return) *rl_return = a;
  if (rule_return) *rule_return = b;
  return choose_deployed(a, b, deployed);
}

class Trainer {
 public:
  /// With an empty `run_dir` nothing is written to disk.
  explicit Trainer(TrainerConfig config, fs::path run_dir = {})
      : config_(std::move(config)), run_dir_(std::move(run_dir)) {
    config_.validate();
    seed_ = config_.require_seed();
    spec_ = config_.scenario_spec();
    bounds_ = config_.bounds();
    Rng init = make_rng(seed_, {kInitStream});
    current_ = rl::GaussianPolicy::create(init, config_.sigma_init, config_.env.road, config_.hidden);
    current_.set_mapping(config_.action_mapping());
    critic_ = rl::ValueFunction::create(init, config_.env.road, config_.hidden);
    candidate_ = current_;
    optimizers_ = rl::GeneratorOptimizers(candidate_, critic_, config_.lr_actor, config_.lr_critic);
    if (!run_dir_.empty()) open_run_dir();
  }

  const TrainerConfig& config() const { return config_; }
  const env::ScenarioSpec& scenario() const { return spec_; }
  const gate::NormalizationBounds& bounds() const { return bounds_; }
  const rl::GaussianPolicy& current() const { return current_; }
  const rl::GaussianPolicy& candidate() const { return candidate_; }
  const rl::ValueFunction& critic() const { return critic_; }
  const rl::ReplayBuffer& buffer() const { return buffer_; }
  const std::vector<IterationReport>& reports() const { return reports_; }
  double m_paper() const { return static_cast<double>(m_env_) / 3.0; }
  std::int64_t m_env() const { return m_env_; }
  std::int64_t policy_tag() const { return policy_tag_; }
  int cycles_run() const { return cycle_; }
  Deployed deployed() const { return deployed_; }
  std::uint64_t evaluation_root() const { return trainer::evaluation_root(seed_); }

  bool finished() const {
    if (m_paper() >= config_.max_steps) return true;
    if (config_.max_cycles > 0 && cycle_ >= config_.max_cycles) return true;
    return false;
  }

  /// Runs cycles until the step budget, cycle cap or wall budget is reached,
  /// then writes the final checkpoint and evaluation.
  void run(const std::function<void(const IterationReport&)>& on_cycle = {}) {
    const auto start = std::chrono::steady_clock::now();
    while (!finished()) {
      const IterationReport rep = training_cycle();
      if (on_cycle) on_cycle(rep);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (config_.wall_budget > 0.0 && elapsed >= config_.wall_budget) break;
    }
    final_ = final_evaluation();
    if (!run_dir_.empty()) {
      save_checkpoint(run_dir_ / "checkpoints" / "final.ckpt");
      write_evaluation(run_dir_ / "eval_final.csv", final_);
    }
  }

  /// Evaluation written at the end of run().
  const EvalSummary& final_summary() const { return final_; }

  /// Matched-seed evaluation of the current policy as logged in metrics.csv.
  EvalSummary final_evaluation() const {
    return evaluate_current(config_, current_, evaluation_root());
  }

  IterationReport training_cycle() {
    const auto t0 = std::chrono::steady_clock::now();
    IterationReport rep;
    rep.cycle = cycle_;
    rep.policy_tag = policy_tag_;
    const double gamma = config_.update.gamma;

    if (config_.mode == GateMode::RuleOnly) {
      run_rule_cycle(rep);
    } else {
      auto batch = collect(current_, critic_, config_.env, spec_, config_.trajectories_per_cycle, seed_, cycle_,
                           policy_tag_, config_.update.lookahead, gamma);
      for (const auto& t : batch) m_env_ += static_cast<std::int64_t>(t.size());
      buffer_.split_append(std::move(batch));
      for (const auto& t : buffer_.trajectories())
        require(t.policy_tag == policy_tag_, "buffer holds a trajectory from a superseded behavior policy");
      rep.train_size = buffer_.train_size();
      rep.test_size = buffer_.test_size();

      try {
        Rng train_rng = make_rng(seed_, {kTrainStream, static_cast<std::uint64_t>(cycle_)});
        const auto train_set = buffer_.train_set();
        rep.train = rl::train_candidate(candidate_, critic_, train_set, config_.update, optimizers_, train_rng);

        Rng boot = make_rng(seed_, {kBootstrapStream, static_cast<std::uint64_t>(cycle_)});
        const auto test_set = buffer_.test_set();
        rep.decision = gate::improvement_gate(candidate_, test_set, config_.delta, config_.bootstrap, gamma, bounds_, boot);
        rep.adopted = config_.mode == GateMode::AlwaysAccept || rep.decision->accepted;
      } catch (const std::exception& e) {
        rep.failed = true;
        rep.failure = e.what();
        rep.adopted = false;
      }

      if (rep.decision) gate_log_.row(cycle_, rep.decision->n, rep.decision->rho_lower, rep.decision->rho_cur,
                                      rep.decision->delta, rep.decision->accepted, rep.decision->log_omega_min,
                                      rep.decision->log_omega_max, rep.decision->clamp_count);

      const std::uint64_t eval_root = evaluation_root();
      const EvalSummary cand =
          evaluate_sampled(candidate_, config_.env, spec_, config_.eval_episodes, eval_root, gamma, bounds_);
      rep.candidate_return = cand.mean_normalized_return;
      if (rep.adopted) {
        current_ = candidate_;
        ++policy_tag_;
        buffer_.clear();
        record_current(rep, cand);
      } else {
        record_current(rep, evaluate_sampled(current_, config_.env, spec_, config_.eval_episodes, eval_root, gamma, bounds_));
      }

      if (config_.hybrid) {
        const auto root = derive_seed(seed_, {kHybridStream, static_cast<std::uint64_t>(cycle_)});
        deployed_ = hybrid_select(current_, deployed_, config_.env, spec_, config_.hybrid_episodes, root, gamma, bounds_);
      }
      rep.active = deployed_;
    }

    rep.m_paper = m_paper();
    rep.m_env = m_env_;
    ++cycle_;
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report(rep);
    if (!run_dir_.empty()) {
      if (rep.adopted) save_checkpoint(run_dir_ / "checkpoints" / checkpoint_name("accept", rep.cycle));
      if (config_.checkpoint_every > 0 && cycle_ % config_.checkpoint_every == 0)
        save_checkpoint(run_dir_ / "checkpoints" / checkpoint_name("cycle", rep.cycle));
    }
    reports_.push_back(rep);
    return rep;
  }

  void save_checkpoint(const fs::path& path) const {
    nn::TensorArchive ar;
    auto& m = ar.meta();
    m["kind"] = "hcpi-run";
    m["cycle"] = cycle_;
    m["m_env"] = m_env_;
    m["policy_tag"] = policy_tag_;
    m["config_hash"] = config_hash(config_);
    m["config"] = to_json(config_);
    nn::save_net(ar, "actor", current_.actor());
    ar.put("actor.log_std", current_.log_std());
    nn::save_net(ar, "candidate", candidate_.actor());
    ar.put("candidate.log_std", candidate_.log_std());
    nn::save_net(ar, "critic", critic_.net());
    nn::save_optimizer(ar, "opt.actor", optimizers_.actor);
    nn::save_optimizer(ar, "opt.log_std", optimizers_.log_std);
    nn::save_optimizer(ar, "opt.critic", optimizers_.critic);
    ar.write(path.string());
  }

 private:
  static std::string checkpoint_name(const char* kind, int cycle) {
    std::string n = std::to_string(cycle);
    return std::string(kind) + "_" + std::string(6 - std::min<std::size_t>(6, n.size()), '0') + n + ".ckpt";
  }

  void open_run_dir() {
    fs::create_directories(run_dir_ / "checkpoints");
    std::ofstream(run_dir_ / "config.resolved") << to_json(config_).dump(2) << '\n';
    write_manifest(run_dir_, config_);
    metrics_ = CsvWriter(run_dir_ / "metrics.csv", kMetricsHeader);
    gate_log_ = CsvWriter(run_dir_ / "gate_log.csv", gate::kGateLogHeader);
    timing_ = CsvWriter(run_dir_ / "timing.csv", kTimingHeader);
  }

  void run_rule_cycle(IterationReport& rep) {
    env::HighwayEnv hw(config_.env);
    const auto c = static_cast<std::uint64_t>(cycle_);
    for (int i = 0; i < config_.trajectories_per_cycle; ++i) {
      const auto r = run_evaluation_episode(hw, spec_, derive_seed(seed_, {kCollectStream, c, static_cast<std::uint64_t>(i), 0}),
                                            rule_actions(), config_.update.gamma, bounds_);
      m_env_ += r.steps;
    }
    const auto s = evaluate_current(config_, current_, evaluation_root());
    rep.candidate_return = s.mean_normalized_return;
    record_current(rep, s);
    deployed_ = Deployed::Rule;
    rep.active = deployed_;
  }

  static void record_current(IterationReport& rep, const EvalSummary& s) {
    rep.current_return = s.mean_normalized_return;
    rep.current_success = s.success_rate;
    rep.current_composition = s.mean_composition;
  }

  void write_report(const IterationReport& r) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    metrics_.row(r.cycle, r.m_paper, r.m_env, r.policy_tag, r.train_size, r.test_size, r.adopted,
                 r.decision ? r.decision->rho_lower : nan, r.decision ? r.decision->rho_cur : nan, r.candidate_return,
                 r.current_return, r.current_success, r.current_composition.efficiency, r.current_composition.comfort,
                 r.current_composition.risk, r.current_composition.collision, to_string(r.active), r.train.updates,
                 r.train.actor_loss, r.train.critic_loss, r.failed);
    timing_.row(r.cycle, r.wall_seconds);
  }

  TrainerConfig config_;
  fs::path run_dir_;
  std::uint64_t seed_ = 0;
  env::ScenarioSpec spec_;
  gate::NormalizationBounds bounds_;
  rl::GaussianPolicy current_;
  rl::GaussianPolicy candidate_;
  rl::ValueFunction critic_;
  rl::GeneratorOptimizers optimizers_;
  rl::ReplayBuffer buffer_;
  std::vector<IterationReport> reports_;
  std::int64_t m_env_ = 0;
  std::int64_t policy_tag_ = 0;
  int cycle_ = 0;
  Deployed deployed_ = Deployed::Rl;
  CsvWriter metrics_;
  CsvWriter gate_log_;
  CsvWriter timing_;
  EvalSummary final_;
};

}  // namespace hcpi::trainer
