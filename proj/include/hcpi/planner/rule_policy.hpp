#pragma once

#include <algorithm>
#include <cmath>

#include "hcpi/env/vehicle.hpp"
#include "hcpi/planner/idm.hpp"
#include "hcpi/planner/mobil.hpp"

namespace hcpi::planner {

/// Lateral tracking as a second-order system in the lateral error, with
/// gains scheduled on speed through the bicycle model.
struct SteeringGains {
  double natural_frequency = 0.8;  // rad/s
  double damping = 1.0;
  double min_speed = 5.0;          // m/s, floor for the gain schedule
  double wheelbase = 2.7;          // m
};

struct RulePlannerParams {
  IdmParams idm;
  MobilParams mobil;
  SteeringGains steering;
  double lane_change_cooldown = 2.0;  // s
  double settle_tolerance = 0.5;      // m from the lane center before another change
};

/// Per-driver memory carried between steps.
struct DriverMemory {
  int target_lane = 0;
  double cooldown = 0.0;  // seconds until the next lane change may start
};

struct RuleDecision {
  env::Action action;
  DriverMemory memory;
  bool lane_change_started = false;
};

/// Lane-tracking wheel angle: y'' = v^2 tan(delta) / L is driven toward
/// w^2 (target - y) - 2 zeta w v psi. Clamped to the wheel-angle range.
inline double lane_tracking_steer(const env::VehicleState& s, double target_y, const SteeringGains& g,
                                  double steer_max = 0.7) {
  const double v = std::max(s.v, g.min_speed);
  const double w = g.natural_frequency;
  const double lateral_accel = w * w * (target_y - s.y) - 2.0 * g.damping * w * v * std::sin(s.heading);
  return std::clamp(std::atan(lateral_accel * g.wheelbase / (v * v)), -steer_max, steer_max);
}

/// IDM longitudinal control against the current-lane leader, MOBIL lane
/// selection (at most one change per cooldown window, only once the
/// previous change has settled) and lane-tracking steering toward the
/// target lane center.
template <std::invocable<const env::VehicleState&> ParamsOf>
RuleDecision rule_policy(const DrivingContext& ctx, DriverMemory memory, const RulePlannerParams& p,
                         const env::RoadConfig& road, double dt, ParamsOf&& params_of) {
  const env::VehicleState& ego = *ctx.ego;
  RuleDecision out;
  memory.cooldown = std::max(0.0, memory.cooldown - dt);
  memory.target_lane = std::clamp(memory.target_lane, 0, road.lane_count - 1);

  const bool settled = ego.lane == memory.target_lane &&
                       std::abs(ego.y - road.lane_center(memory.target_lane)) < p.settle_tolerance;
  if (settled && memory.cooldown <= 0.0) {
    const LaneChange lc = mobil_decision(ctx, p.mobil, params_of);
    if (lc != LaneChange::Keep) {
      memory.target_lane += lc == LaneChange::Left ? 1 : -1;
      memory.cooldown = p.lane_change_cooldown;
      out.lane_change_started = true;
    }
  }

  out.action.accel = idm_accel(ego, ctx.at(env::kFront), params_of(ego));
  // while moving over, also keep clear of the leader in the lane being entered
  if (memory.target_lane != ego.lane) {
    const auto slot = memory.target_lane > ego.lane ? env::kFrontLeft : env::kFrontRight;
    if (const auto* lead = ctx.at(slot)) out.action.accel = std::min(out.action.accel, idm_accel(ego, lead, params_of(ego)));
  }
  out.action.steer = lane_tracking_steer(ego, road.lane_center(memory.target_lane), p.steering);
  out.memory = memory;
  return out;
}

inline RuleDecision rule_policy(const DrivingContext& ctx, DriverMemory memory, const RulePlannerParams& p,
                                const env::RoadConfig& road, double dt) {
  return rule_policy(ctx, memory, p, road, dt, [&p](const env::VehicleState&) -> const IdmParams& { return p.idm; });
}

}  // namespace hcpi::planner
