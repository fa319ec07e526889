#pragma once

#include <cmath>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/trajectory.hpp"

namespace hcpi::rl {

/// T-step advantages from rewards and the critic's values V(s_0..s_{N-1}).
/// Lookahead past the final step contributes a terminal value of 0.
inline std::vector<double> n_step_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                             int lookahead, double gamma) {
  require(lookahead >= 1, "advantages: lookahead T must be >= 1");
  require(rewards.size() == values.size(), "advantages: rewards and values differ in length");
  const std::size_t n = rewards.size();
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    double discount = 1.0;
    std::size_t k = 0;
    for (; k < static_cast<std::size_t>(lookahead) && t + k < n; ++k) {
      acc += discount * rewards[t + k];
      discount *= gamma;
    }
    if (t + k < n) acc += discount * values[t + k];
    out[t] = acc - values[t];
  }
  return out;
}

/// Fills Transition::advantage for every step of `traj`.
inline void compute_advantages(Trajectory& traj, const ValueFunction& critic, int lookahead, double gamma) {
  if (traj.steps.empty()) return;
  std::vector<env::Observation> states;
  std::vector<double> rewards;
  states.reserve(traj.size());
  rewards.reserve(traj.size());
  for (const auto& s : traj.steps) {
    states.push_back(s.state);
    rewards.push_back(s.reward);
  }
  const Vector v = critic.values(states);
  std::vector<double> values(v.data(), v.data() + v.size());
  const auto adv = n_step_advantages(rewards, values, lookahead, gamma);
  for (std::size_t t = 0; t < traj.size(); ++t) traj.steps[t].advantage = adv[t];
}

/// Standardizes to mean 0 / std 1, with the std floored at 1e-8.
inline void standardize(std::vector<double>& xs) {
  if (xs.empty()) return;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  const double sd = std::max(std::sqrt(var), 1e-8);
  for (double& x : xs) x = (x - mean) / sd;
}

}  // namespace hcpi::rl
