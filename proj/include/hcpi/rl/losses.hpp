#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "hcpi/core/error.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/trajectory.hpp"

namespace hcpi::rl {

struct ActorLoss {
  double loss = 0.0;
  nn::GradientBuffer actor_grad;
  Vector log_std_grad;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;  // share of samples whose surrogate gradient is cut off
};

struct CriticLoss {
  double loss = 0.0;
  nn::GradientBuffer grad;
};

/// Clipped-surrogate actor loss with an entropy bonus,
///   -mean_t[ min(f_t A_t, clip(f_t, 1-eps, 1+eps) A_t) + c H ],
/// f_t = exp(log pi(a_t|s_t) - stored log pi_cur(a_t|s_t)).
/// `advantages[i]` pairs with `batch[i]`.
inline ActorLoss actor_loss(const GaussianPolicy& policy, std::span<const Transition* const> batch,
                            std::span<const double> advantages, double epsilon, double entropy_coef) {
  require(!batch.empty(), "actor_loss: empty batch");
  require(batch.size() == advantages.size(), "actor_loss: advantages do not match batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix x(env::kObservationDim, n);
  for (Eigen::Index i = 0; i < n; ++i) x.col(i) = policy.scaler().apply(batch[static_cast<std::size_t>(i)]->state);
  const nn::ForwardCache cache = policy.actor().forward_batch(x);
  const Matrix& mu = cache.activations.back();
  const Vector& log_std = policy.log_std();
  const Vector inv_var = (-2.0 * log_std).array().exp();

  ActorLoss out;
  Matrix d_mu = Matrix::Zero(mu.rows(), n);
  out.log_std_grad = Vector::Zero(log_std.size());
  double surrogate_sum = 0.0;
  int cut = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& tr = *batch[static_cast<std::size_t>(i)];
    require(tr.raw_action.size() == mu.rows(), "actor_loss: stored action has wrong dimension");
    const Vector mu_i = mu.col(i);
    const double log_ratio = policy.log_density_given_mean(mu_i, tr.raw_action) - tr.log_density;
    const double f = std::exp(log_ratio);
    if (!std::isfinite(f)) throw NumericalError("actor_loss: non-finite probability ratio at sample " + std::to_string(i));
    const double a = advantages[static_cast<std::size_t>(i)];
    const double clipped = std::clamp(f, 1.0 - epsilon, 1.0 + epsilon);
    surrogate_sum += std::min(f * a, clipped * a);
    out.mean_ratio += f * inv_n;

    // the unclipped branch carries the gradient unless clipping bites
    const bool active = a >= 0.0 ? f <= 1.0 + epsilon : f >= 1.0 - epsilon;
    if (!active) {
      ++cut;
      continue;
    }
    const double coeff = -a * f * inv_n;  // d loss / d log pi
    for (Eigen::Index d = 0; d < mu.rows(); ++d) {
      const double diff = tr.raw_action(d) - mu_i(d);
      d_mu(d, i) = coeff * diff * inv_var(d);
      out.log_std_grad(d) += coeff * (diff * diff * inv_var(d) - 1.0);
    }
  }
  const double entropy = policy.entropy();
  out.loss = -(surrogate_sum * inv_n + entropy_coef * entropy);
  out.log_std_grad.array() -= entropy_coef;
  out.actor_grad = policy.actor().backward(cache, d_mu);
  out.clip_fraction = static_cast<double>(cut) * inv_n;
  return out;
}

/// TD(0) critic loss 0.5 * mean (r + gamma V(s') (1 - done) - V(s))^2 with
/// the target held constant.
inline CriticLoss critic_loss(const ValueFunction& critic, std::span<const Transition* const> batch, double gamma) {
  require(!batch.empty(), "critic_loss: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix x(env::kObservationDim, n);
  Matrix x_next(env::kObservationDim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = critic.scaler().apply(batch[static_cast<std::size_t>(i)]->state);
    x_next.col(i) = critic.scaler().apply(batch[static_cast<std::size_t>(i)]->next_state);
  }
  const nn::ForwardCache cache = critic.net().forward_batch(x);
  const Matrix next_values = critic.net().forward_batch(x_next).activations.back();
  const Matrix& values = cache.activations.back();

  CriticLoss out;
  Matrix upstream(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& tr = *batch[static_cast<std::size_t>(i)];
    const double target = tr.reward + (tr.done ? 0.0 : gamma * next_values(0, i));
    const double err = target - values(0, i);
    out.loss += 0.5 * err * err * inv_n;
    upstream(0, i) = -err * inv_n;
  }
  out.grad = critic.net().backward(cache, upstream);
  return out;
}

}  // namespace hcpi::rl
