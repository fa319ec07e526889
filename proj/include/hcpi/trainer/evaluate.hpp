#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hcpi/core/random.hpp"
#include "hcpi/env/highway_env.hpp"
#include "hcpi/gate/importance.hpp"
#include "hcpi/rl/policy.hpp"

namespace hcpi::trainer {

/// Chooses the ego command for the current step.
using ActionSource = std::function<env::Action(env::HighwayEnv&, const env::Observation&)>;

inline ActionSource rule_actions() {
  return [](env::HighwayEnv& hw, const env::Observation&) { return hw.ego_rule_action(); };
}

inline ActionSource mean_actions(const rl::GaussianPolicy& policy) {
  return [&policy](env::HighwayEnv&, const env::Observation& obs) { return policy.mapping().to_physical(policy.mean(obs)); };
}

/// Sampled actions; `rng` must outlive the returned source.
inline ActionSource sampled_actions(const rl::GaussianPolicy& policy, Rng& rng) {
  return [&policy, &rng](env::HighwayEnv&, const env::Observation& obs) {
    return policy.mapping().to_physical(policy.sample(obs, rng).raw);
  };
}

struct EpisodeResult {
  std::uint64_t seed = 0;
  int steps = 0;
  bool collision = false;
  double total_return = 0.0;
  double normalized_return = 0.0;
  env::RewardBreakdown composition;
  double average_speed = 0.0;
  double distance = 0.0;
  int lane_changes = 0;

  bool success() const { return !collision; }
};

struct VehicleFrame {
  double t, x, y, v, accel, heading, steer;
  int lane;
};

struct EgoFrame {
  VehicleFrame state;
  double reward;
  env::RewardBreakdown breakdown;
  bool collision;
};

/// Per-step states of the ego and of every background vehicle by id.
struct EpisodeRecording {
  std::vector<EgoFrame> ego;
  std::map<int, std::vector<VehicleFrame>> others;
};

inline VehicleFrame frame_of(const env::VehicleState& s, double t) {
  return {t, s.x, s.y, s.v, s.accel, s.heading, s.steer, s.lane};
}

inline EpisodeResult run_evaluation_episode(env::HighwayEnv& hw, const env::ScenarioSpec& spec, std::uint64_t seed,
                                            const ActionSource& act, double gamma,
                                            const gate::NormalizationBounds& bounds,
                                            EpisodeRecording* recording = nullptr) {
  EpisodeResult r;
  r.seed = seed;
  env::Observation obs = hw.reset(spec, seed);
  double speed_sum = 0.0;
  double discounted = 0.0;
  double discount = 1.0;
  auto record_others = [&] {
    const auto& w = hw.world();
    for (std::size_t i = 1; i < w.vehicles.size(); ++i)
      recording->others[w.vehicles[i].id].push_back(frame_of(w.vehicles[i], w.time));
  };
  if (recording) record_others();
  for (;;) {
    const env::StepResult s = hw.step(act(hw, obs));
    ++r.steps;
    r.total_return += s.reward;
    discounted += discount * s.reward;
    discount *= gamma;
    r.composition += s.breakdown;
    speed_sum += s.info.ego_speed;
    if (s.info.lane_changed) ++r.lane_changes;
    r.distance = s.info.distance;
    if (recording) {
      const auto& w = hw.world();
      recording->ego.push_back({frame_of(w.ego(), w.time), s.reward, s.breakdown, s.collision});
      record_others();
    }
    obs = s.observation;
    if (s.done) {
      r.collision = s.collision;
      break;
    }
  }
  r.average_speed = speed_sum / r.steps;
  r.normalized_return = gate::normalize_return(discounted, bounds).value;
  return r;
}

struct EvalSummary {
  std::vector<EpisodeResult> episodes;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double mean_normalized_return = 0.0;
  env::RewardBreakdown mean_composition;
  double average_speed = 0.0;
  double lane_changes_per_km = 0.0;
};

inline EvalSummary summarize(std::vector<EpisodeResult> episodes) {
  EvalSummary s;
  s.episodes = std::move(episodes);
  if (s.episodes.empty()) return s;
  const double n = static_cast<double>(s.episodes.size());
  double distance = 0.0;
  int lane_changes = 0;
  for (const auto& e : s.episodes) {
    s.success_rate += e.success() ? 1.0 : 0.0;
    s.mean_return += e.total_return;
    s.mean_normalized_return += e.normalized_return;
    s.mean_composition += e.composition;
    s.average_speed += e.average_speed;
    distance += e.distance;
    lane_changes += e.lane_changes;
  }
  s.success_rate /= n;
  s.mean_return /= n;
  s.mean_normalized_return /= n;
  s.mean_composition.efficiency /= n;
  s.mean_composition.comfort /= n;
  s.mean_composition.risk /= n;
  s.mean_composition.collision /= n;
  s.average_speed /= n;
  s.lane_changes_per_km = distance > 0.0 ? 1000.0 * lane_changes / distance : 0.0;
  return s;
}

/// Evaluation episode seeds: a fixed sequence per root seed, shared by every
/// policy evaluated under that root (matched seeds).
inline std::uint64_t evaluation_seed(std::uint64_t root, std::uint64_t episode) {
  return derive_seed(root, {kEvalStream, episode});
}

/// Runs `episodes` matched-seed episodes. `make_source(episode)` builds the
/// action source for each episode so stochastic policies can use per-episode
/// noise streams.
inline EvalSummary evaluate(const env::EnvConfig& config, const env::ScenarioSpec& spec, int episodes,
                            std::uint64_t root_seed, const std::function<ActionSource(int)>& make_source, double gamma,
                            const gate::NormalizationBounds& bounds) {
  env::HighwayEnv hw(config);
  std::vector<EpisodeResult> out;
  out.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e)
    out.push_back(run_evaluation_episode(hw, spec, evaluation_seed(root_seed, static_cast<std::uint64_t>(e)),
                                         make_source(e), gamma, bounds));
  return summarize(std::move(out));
}

inline EvalSummary evaluate_rule(const env::EnvConfig& config, const env::ScenarioSpec& spec, int episodes,
                                 std::uint64_t root_seed, double gamma, const gate::NormalizationBounds& bounds) {
  return evaluate(config, spec, episodes, root_seed, [](int) { return rule_actions(); }, gamma, bounds);
}

inline EvalSummary evaluate_mean(const rl::GaussianPolicy& policy, const env::EnvConfig& config,
                                 const env::ScenarioSpec& spec, int episodes, std::uint64_t root_seed, double gamma,
                                 const gate::NormalizationBounds& bounds) {
  return evaluate(config, spec, episodes, root_seed, [&](int) { return mean_actions(policy); }, gamma, bounds);
}

/// Sampled-action evaluation; episode e draws its action noise from a stream
/// derived from (root_seed, e), so two policies see matched noise as well.
inline EvalSummary evaluate_sampled(const rl::GaussianPolicy& policy, const env::EnvConfig& config,
                                    const env::ScenarioSpec& spec, int episodes, std::uint64_t root_seed, double gamma,
                                    const gate::NormalizationBounds& bounds) {
  std::vector<Rng> noise;
  noise.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) noise.push_back(make_rng(root_seed, {kEvalStream, static_cast<std::uint64_t>(e), 1}));
  return evaluate(config, spec, episodes, root_seed,
                  [&](int e) { return sampled_actions(policy, noise[static_cast<std::size_t>(e)]); }, gamma, bounds);
}

}  // namespace hcpi::trainer
