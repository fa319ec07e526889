#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "hcpi/env/observation.hpp"
#include "hcpi/env/vehicle.hpp"

namespace hcpi::env {

struct RewardWeights {
  double efficiency = 1.5;   // omega1
  double jerk = -0.05;       // omega2
  double steer = -2.0;       // omega3
  double risk_front = -0.5;  // omega4
  double risk_rear = -0.5;   // omega5
  double collision = -20.0;  // omega6
  double jerk_threshold = 2.0;   // m/s^3
  double steer_threshold = 0.30; // rad
};

struct RewardBreakdown {
  double efficiency = 0.0;
  double comfort = 0.0;
  double risk = 0.0;
  double collision = 0.0;

  double total() const { return efficiency + comfort + risk + collision; }

  RewardBreakdown& operator+=(const RewardBreakdown& o) {
    efficiency += o.efficiency;
    comfort += o.comfort;
    risk += o.risk;
    collision += o.collision;
    return *this;
  }
};

/// Everything the reward needs from the post-step world.
struct RewardInputs {
  double ego_speed = 0.0;
  double ego_accel = 0.0;       // realized acceleration this step
  double prev_ego_accel = 0.0;  // realized acceleration last step
  double steer = 0.0;           // realized front wheel angle
  double dt = 0.1;
  double speed_limit = 120.0 / 3.6;
  // relative longitudinal position and speed of the front / rear vehicles,
  // empty when the slot is unoccupied
  std::optional<double> front_dx;
  std::optional<double> rear_dx;
  double rear_speed = 0.0;
  bool collision = false;
};

namespace detail {
// exp(-|dx| / v), with a headway denominator of zero read as infinite headway
inline double headway_risk(double dx, double v) {
  if (!(v > 0.0)) return 0.0;
  return std::exp(-std::abs(dx) / v);
}
}  // namespace detail

inline RewardBreakdown compute_reward(const RewardInputs& in, const RewardWeights& w) {
  RewardBreakdown r;
  r.efficiency = w.efficiency * in.ego_speed / in.speed_limit;

  const double jerk = (in.ego_accel - in.prev_ego_accel) / in.dt;
  // penalties act on magnitudes; see README "Reward"
  const double zeta_jerk = std::abs(jerk) >= w.jerk_threshold ? std::abs(jerk) : 0.0;
  const double zeta_steer = std::abs(in.steer) >= w.steer_threshold ? std::abs(in.steer) : 0.0;
  r.comfort = w.jerk * zeta_jerk + w.steer * zeta_steer;

  if (in.front_dx) r.risk += w.risk_front * detail::headway_risk(*in.front_dx, in.ego_speed);
  if (in.rear_dx) r.risk += w.risk_rear * detail::headway_risk(*in.rear_dx, in.rear_speed);

  r.collision = in.collision ? w.collision : 0.0;
  return r;
}

}  // namespace hcpi::env
