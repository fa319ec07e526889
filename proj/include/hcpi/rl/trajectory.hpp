#pragma once

#include <cstdint>
#include <vector>

#include "hcpi/env/observation.hpp"
#include "hcpi/env/reward.hpp"
#include "hcpi/nn/dense_net.hpp"

namespace hcpi::rl {

struct Transition {
  env::Observation state{};
  nn::Vector raw_action;       // pre-clamp Gaussian sample
  double log_density = 0.0;    // log pi_cur(a|s) recorded at rollout time
  double reward = 0.0;
  env::RewardBreakdown breakdown;
  env::Observation next_state{};
  bool done = false;
  double advantage = 0.0;
};

/// One episode under a single behavior policy.
struct Trajectory {
  std::vector<Transition> steps;
  std::uint64_t seed = 0;       // environment reset seed
  std::int64_t policy_tag = 0;  // identity of the behavior policy
  bool collision = false;

  std::size_t size() const { return steps.size(); }

  double discounted_return(double gamma) const {
    double total = 0.0;
    double discount = 1.0;
    for (const auto& s : steps) {
      total += discount * s.reward;
      discount *= gamma;
    }
    return total;
  }

  double undiscounted_return() const {
    double total = 0.0;
    for (const auto& s : steps) total += s.reward;
    return total;
  }

  env::RewardBreakdown composition() const {
    env::RewardBreakdown b;
    for (const auto& s : steps) b += s.breakdown;
    return b;
  }
};

}  // namespace hcpi::rl
