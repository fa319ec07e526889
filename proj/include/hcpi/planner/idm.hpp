#pragma once

#include <algorithm>
#include <cmath>

#include "hcpi/core/error.hpp"
#include "hcpi/env/vehicle.hpp"

namespace hcpi::planner {

/// Intelligent Driver Model parameters.
struct IdmParams {
  double desired_speed = 120.0 / 3.6;  // v0, m/s
  double time_headway = 1.5;           // T, s
  double min_gap = 2.0;                // s0, m
  double max_accel = 2.0;              // a_max, m/s^2
  double comfort_decel = 2.0;          // b, m/s^2
  double exponent = 4.0;

  void validate() const {
    if (!(desired_speed > 0 && time_headway > 0 && min_gap > 0 && max_accel > 0 && comfort_decel > 0 && exponent > 0))
      throw ConfigError("idm: all parameters must be positive");
  }
};

struct AccelLimits {
  double min = -5.0;
  double max = 2.0;
};

/// Desired dynamic gap s*.
inline double idm_desired_gap(double v, double dv, const IdmParams& p) {
  return p.min_gap + v * p.time_headway + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
}

/// IDM acceleration from raw kinematics. `gap` is the bumper-to-bumper
/// distance to the leader and `dv` the approach rate v - v_leader; pass
/// has_leader = false for a free road.
inline double idm_accel_raw(double v, bool has_leader, double gap, double dv, const IdmParams& p,
                            AccelLimits clamp = {}) {
  double a = p.max_accel * (1.0 - std::pow(v / p.desired_speed, p.exponent));
  if (has_leader) {
    if (!(gap > 0.0)) return clamp.min;
    const double ratio = idm_desired_gap(v, dv, p) / gap;
    a -= p.max_accel * ratio * ratio;
  }
  return std::clamp(a, clamp.min, clamp.max);
}

inline double idm_accel(const env::VehicleState& ego, const env::VehicleState* leader, const IdmParams& p,
                        AccelLimits clamp = {}) {
  if (!leader) return idm_accel_raw(ego.v, false, 0.0, 0.0, p, clamp);
  return idm_accel_raw(ego.v, true, env::bumper_gap(ego, *leader), ego.v - leader->v, p, clamp);
}

/// Steady-state spacing behind a leader at the same speed v (a = 0).
inline double idm_equilibrium_gap(double v, const IdmParams& p) {
  return (p.min_gap + v * p.time_headway) / std::sqrt(1.0 - std::pow(v / p.desired_speed, p.exponent));
}

}  // namespace hcpi::planner
