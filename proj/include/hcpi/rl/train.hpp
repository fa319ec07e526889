#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/core/random.hpp"
#include "hcpi/nn/adam.hpp"
#include "hcpi/rl/advantages.hpp"
#include "hcpi/rl/losses.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/trajectory.hpp"

namespace hcpi::rl {

struct UpdateConfig {
  int epochs = 10;              // K
  int batch_size = 64;          // N_b
  int updates_per_epoch = 0;    // 0: one full shuffled pass per epoch
  double gamma = 0.995;
  double epsilon_clip = 0.2;
  double entropy_coef = 0.01;
  int lookahead = 16;           // T
  bool recompute_advantages = true;
  bool normalize_advantages = true;
};

/// Optimizer state for the actor network, the policy log-std and the critic.
struct GeneratorOptimizers {
  nn::OptimizerState actor;
  nn::VectorOptimizerState log_std;
  nn::OptimizerState critic;

  GeneratorOptimizers() = default;
  GeneratorOptimizers(const GaussianPolicy& policy, const ValueFunction& critic, double lr_actor, double lr_critic)
      : actor(policy.actor(), nn::AdamConfig{lr_actor}),
        log_std(policy.log_std().size(), nn::AdamConfig{lr_actor}),
        critic(critic.net(), nn::AdamConfig{lr_critic}) {}
};

struct TrainStats {
  int updates = 0;
  int rejected_batches = 0;
  double actor_loss = 0.0;   // mean over accepted updates
  double critic_loss = 0.0;
  double clip_fraction = 0.0;
};

/// K epochs of shuffled minibatch updates of the actor (clipped surrogate)
/// and critic (TD) over the training trajectories. Ratio denominators are
/// the log-densities stored at rollout time. A batch producing a non-finite
/// ratio or gradient is skipped; an epoch in which every batch is skipped
/// aborts training with NumericalError.
inline TrainStats train_candidate(GaussianPolicy& candidate, ValueFunction& critic,
                                  std::span<const Trajectory* const> train_set, const UpdateConfig& cfg,
                                  GeneratorOptimizers& opt, Rng& rng) {
  require(!train_set.empty(), "train_candidate: empty training set");
  require(cfg.batch_size > 0, "train_candidate: batch_size must be positive");

  std::vector<const Transition*> items;
  std::vector<double> advantages;
  for (const Trajectory* traj : train_set) {
    std::vector<double> adv;
    if (cfg.recompute_advantages && !traj->steps.empty()) {
      std::vector<env::Observation> states;
      std::vector<double> rewards;
      for (const auto& s : traj->steps) {
        states.push_back(s.state);
        rewards.push_back(s.reward);
      }
      const Vector v = critic.values(states);
      adv = n_step_advantages(rewards, std::vector<double>(v.data(), v.data() + v.size()), cfg.lookahead, cfg.gamma);
    }
    for (std::size_t t = 0; t < traj->steps.size(); ++t) {
      items.push_back(&traj->steps[t]);
      advantages.push_back(cfg.recompute_advantages ? adv[t] : traj->steps[t].advantage);
    }
  }
  require(!items.empty(), "train_candidate: training set holds no transitions");

  TrainStats stats;
  std::vector<std::size_t> order(items.size());
  std::vector<const Transition*> batch;
  std::vector<double> batch_adv;
  const std::size_t per_epoch_full = (items.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                     static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Fisher-Yates with the portable index draw
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    std::size_t n_batches = per_epoch_full;
    if (cfg.updates_per_epoch > 0) n_batches = std::min(n_batches, static_cast<std::size_t>(cfg.updates_per_epoch));

    int accepted_this_epoch = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      batch_adv.clear();
      for (std::size_t k = lo; k < hi; ++k) {
        batch.push_back(items[order[k]]);
        batch_adv.push_back(advantages[order[k]]);
      }
      if (cfg.normalize_advantages && batch_adv.size() > 1) standardize(batch_adv);
      try {
        ActorLoss al = actor_loss(candidate, batch, batch_adv, cfg.epsilon_clip, cfg.entropy_coef);
        CriticLoss cl = critic_loss(critic, batch, cfg.gamma);
        if (!std::isfinite(al.loss) || !std::isfinite(cl.loss) || !al.log_std_grad.allFinite() ||
            !al.actor_grad.all_finite() || !cl.grad.all_finite())
          throw NumericalError("train_candidate: non-finite loss");
        nn::adam_step(candidate.actor(), al.actor_grad, opt.actor);
        nn::adam_step(candidate.log_std(), al.log_std_grad, opt.log_std);
        nn::adam_step(critic.net(), cl.grad, opt.critic);
        ++stats.updates;
        ++accepted_this_epoch;
        stats.actor_loss += al.loss;
        stats.critic_loss += cl.loss;
        stats.clip_fraction += al.clip_fraction;
      } catch (const NumericalError&) {
        ++stats.rejected_batches;
      }
    }
    if (n_batches > 0 && accepted_this_epoch == 0)
      throw NumericalError("train_candidate: every batch of epoch " + std::to_string(epoch) + " was rejected");
  }
  if (stats.updates > 0) {
    stats.actor_loss /= stats.updates;
    stats.critic_loss /= stats.updates;
    stats.clip_fraction /= stats.updates;
  }
  return stats;
}

}  // namespace hcpi::rl
