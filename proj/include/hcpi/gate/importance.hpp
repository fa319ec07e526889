#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/env/reward.hpp"
#include "hcpi/env/vehicle.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/trajectory.hpp"

namespace hcpi::gate {

inline constexpr double kLogWeightClamp = 30.0;

/// Affine range used to map discounted trajectory returns into [-1, 1].
struct NormalizationBounds {
  double upper = 1.0;
  double lower = -1.0;

  void validate() const {
    if (!std::isfinite(upper) || !std::isfinite(lower)) throw ConfigError("normalization bounds must be finite");
    if (!(upper > lower)) throw ConfigError("normalization bounds: upper must exceed lower");
  }

  /// Bounds from per-step reward extremes over an episode of `steps` steps.
  /// Upper: full efficiency reward every step. Lower: worst jerk, steering and
  /// risk penalties every step plus one terminal collision.
  static NormalizationBounds from_reward(int steps, double gamma, const env::RewardWeights& w,
                                         const env::ActuatorLimits& limits, double dt) {
    require(steps > 0, "NormalizationBounds: steps must be positive");
    double discount_sum = 0.0;
    double discount = 1.0;
    for (int t = 0; t < steps; ++t) {
      discount_sum += discount;
      discount *= gamma;
    }
    const double jerk_max = (limits.accel_max - limits.accel_min) / dt;
    const double worst_step = w.jerk * jerk_max + w.steer * limits.steer_max + w.risk_front + w.risk_rear;
    NormalizationBounds b{discount_sum * w.efficiency, discount_sum * worst_step + w.collision};
    b.validate();
    return b;
  }

  /// Same upper bound; the lower bound is twice the collision weight, which
  /// covers a collision episode together with the risk and comfort penalties
  /// accrued before it. Returns below it are clamped and counted.
  static NormalizationBounds calibrated(int steps, double gamma, const env::RewardWeights& w,
                                        const env::ActuatorLimits& limits, double dt) {
    NormalizationBounds b = from_reward(steps, gamma, w, limits, dt);
    b.lower = 2.0 * w.collision;
    b.validate();
    return b;
  }
};

struct NormalizedReturn {
  double value = 0.0;
  bool clamped = false;
};

inline NormalizedReturn normalize_return(double discounted, const NormalizationBounds& bounds) {
  bounds.validate();
  NormalizedReturn r;
  double g = discounted;
  if (g > bounds.upper || g < bounds.lower) {
    r.clamped = true;
    g = std::clamp(g, bounds.lower, bounds.upper);
  }
  r.value = 2.0 * (g - bounds.lower) / (bounds.upper - bounds.lower) - 1.0;
  return r;
}

inline NormalizedReturn normalized_return(const rl::Trajectory& traj, double gamma, const NormalizationBounds& bounds) {
  return normalize_return(traj.discounted_return(gamma), bounds);
}

/// log pi(a_t|s_t) for every stored step, evaluated in one batched pass.
inline std::vector<double> trajectory_log_densities(const rl::GaussianPolicy& policy, const rl::Trajectory& traj) {
  std::vector<double> out(traj.steps.size());
  if (traj.steps.empty()) return out;
  nn::Matrix x(env::kObservationDim, static_cast<Eigen::Index>(traj.steps.size()));
  for (std::size_t t = 0; t < traj.steps.size(); ++t) x.col(static_cast<Eigen::Index>(t)) = policy.scaler().apply(traj.steps[t].state);
  const nn::Matrix mu = policy.actor().forward_batch(x).activations.back();
  for (std::size_t t = 0; t < traj.steps.size(); ++t)
    out[t] = policy.log_density_given_mean(mu.col(static_cast<Eigen::Index>(t)), traj.steps[t].raw_action);
  return out;
}

struct LogWeight {
  double value = 0.0;  // after clamping
  bool clamped = false;
};

/// Trajectory log importance weight from per-step log-densities of the
/// candidate and behavior policies, clamped to +-kLogWeightClamp.
inline LogWeight log_importance_weight(std::span<const double> candidate, std::span<const double> behavior) {
  require(candidate.size() == behavior.size(), "log_importance_weight: density sequences differ in length");
  double log_w = 0.0;
  for (std::size_t t = 0; t < candidate.size(); ++t) log_w += candidate[t] - behavior[t];
  if (std::isnan(log_w)) throw NumericalError("log_importance_weight: NaN log weight");
  return {std::clamp(log_w, -kLogWeightClamp, kLogWeightClamp), std::abs(log_w) > kLogWeightClamp};
}

struct ImportanceReturn {
  double value = 0.0;       // omega * R
  double log_weight = 0.0;  // after clamping
  double normalized = 0.0;  // R
  bool weight_clamped = false;
  bool return_clamped = false;
};

/// Trajectory-level importance-weighted return of `candidate` from a
/// trajectory generated by the behavior policy whose log-densities are stored.
inline ImportanceReturn importance_weighted_return(const rl::Trajectory& traj, const rl::GaussianPolicy& candidate,
                                                   double gamma, const NormalizationBounds& bounds) {
  for (const auto& s : traj.steps) {
    require(s.raw_action.size() == candidate.log_std().size(),
            "importance_weighted_return: trajectory step lacks a stored action");
    require(std::isfinite(s.log_density), "importance_weighted_return: trajectory step lacks a stored log-density");
  }
  const auto cand = trajectory_log_densities(candidate, traj);
  std::vector<double> behavior(traj.steps.size());
  for (std::size_t t = 0; t < traj.steps.size(); ++t) behavior[t] = traj.steps[t].log_density;
  const LogWeight lw = log_importance_weight(cand, behavior);

  ImportanceReturn r;
  r.weight_clamped = lw.clamped;
  r.log_weight = lw.value;
  const auto nr = normalized_return(traj, gamma, bounds);
  r.normalized = nr.value;
  r.return_clamped = nr.clamped;
  r.value = std::exp(r.log_weight) * nr.value;
  return r;
}

}  // namespace hcpi::gate
