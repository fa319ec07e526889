#pragma once

#include <cstdint>

#include "hcpi/core/random.hpp"
#include "hcpi/env/highway_env.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/trajectory.hpp"

namespace hcpi::rl {

/// Runs one episode of a stochastic policy. The environment is reset with
/// `env_seed`; action noise comes from `action_rng`.
inline Trajectory run_episode(const GaussianPolicy& policy, env::HighwayEnv& highway, const env::ScenarioSpec& spec,
                              std::uint64_t env_seed, Rng& action_rng, std::int64_t policy_tag = 0) {
  Trajectory traj;
  traj.seed = env_seed;
  traj.policy_tag = policy_tag;
  env::Observation obs = highway.reset(spec, env_seed);
  traj.steps.reserve(static_cast<std::size_t>(spec.episode_steps));
  for (;;) {
    const auto sample = policy.sample(obs, action_rng);
    const env::StepResult r = highway.step(policy.mapping().to_physical(sample.raw));
    Transition tr;
    tr.state = obs;
    tr.raw_action = sample.raw;
    tr.log_density = sample.log_density;
    tr.reward = r.reward;
    tr.breakdown = r.breakdown;
    tr.next_state = r.observation;
    tr.done = r.done;
    traj.steps.push_back(std::move(tr));
    obs = r.observation;
    if (r.done) {
      traj.collision = r.collision;
      break;
    }
  }
  return traj;
}

}  // namespace hcpi::rl
