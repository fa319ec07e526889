#pragma once

#include <array>
#include <concepts>
#include <span>

#include "hcpi/core/error.hpp"
#include "hcpi/env/observation.hpp"
#include "hcpi/planner/idm.hpp"

namespace hcpi::planner {

struct MobilParams {
  double politeness = 0.3;
  double threshold = 0.2;     // m/s^2
  double safe_decel = 4.0;    // b_safe, m/s^2

  void validate() const {
    if (!(politeness >= 0.0 && politeness <= 1.0)) throw ConfigError("mobil: politeness must lie in [0, 1]");
    if (!(safe_decel > 0.0)) throw ConfigError("mobil: safe_decel must be positive");
  }
};

enum class LaneChange { Keep, Left, Right };

/// A vehicle together with its six neighbors, in NeighborSlot order.
struct DrivingContext {
  const env::VehicleState* ego = nullptr;
  std::array<const env::VehicleState*, env::kSlotCount> slots{};
  bool left_lane_exists = false;
  bool right_lane_exists = false;

  const env::VehicleState* at(env::NeighborSlot s) const { return slots[s]; }
};

inline DrivingContext make_context(std::span<const env::VehicleState> vehicles, std::size_t self,
                                   const env::Neighbors& nb, const env::RoadConfig& road) {
  DrivingContext ctx;
  ctx.ego = &vehicles[self];
  for (std::size_t s = 0; s < env::kSlotCount; ++s) ctx.slots[s] = nb.get(vehicles, static_cast<env::NeighborSlot>(s));
  ctx.left_lane_exists = vehicles[self].lane + 1 < road.lane_count;
  ctx.right_lane_exists = vehicles[self].lane > 0;
  return ctx;
}

struct MobilEvaluation {
  bool safe = false;
  double incentive = 0.0;  // own gain + p * (followers' gains) - threshold
};

/// Evaluates a move into the lane whose neighbors are target_leader /
/// target_follower. `params_of(vehicle)` supplies each driver's IDM
/// parameters so the followers' gains use their own desired speeds.
template <std::invocable<const env::VehicleState&> ParamsOf>
MobilEvaluation mobil_evaluate(const DrivingContext& ctx, const env::VehicleState* target_leader,
                               const env::VehicleState* target_follower, const MobilParams& mp, ParamsOf&& params_of) {
  const env::VehicleState& ego = *ctx.ego;
  const env::VehicleState* leader = ctx.at(env::kFront);
  const env::VehicleState* follower = ctx.at(env::kRear);
  const IdmParams& own = params_of(ego);

  const double a_ego = idm_accel(ego, leader, own);
  const double a_ego_new = idm_accel(ego, target_leader, own);

  double new_follower_gain = 0.0;
  double a_new_follower_after = 0.0;
  if (target_follower) {
    const IdmParams& pf = params_of(*target_follower);
    const double before = idm_accel(*target_follower, target_leader, pf);
    a_new_follower_after = idm_accel(*target_follower, &ego, pf);
    new_follower_gain = a_new_follower_after - before;
  }

  double old_follower_gain = 0.0;
  if (follower) {
    const IdmParams& po = params_of(*follower);
    old_follower_gain = idm_accel(*follower, leader, po) - idm_accel(*follower, &ego, po);
  }

  MobilEvaluation e;
  // neither the new follower nor the ego may need to brake harder than
  // safe_decel, and both bumper gaps in the target lane must be open
  e.safe = a_ego_new >= -mp.safe_decel && (!target_follower || a_new_follower_after >= -mp.safe_decel) &&
           (!target_leader || env::bumper_gap(ego, *target_leader) > 0.0) &&
           (!target_follower || env::bumper_gap(*target_follower, ego) > 0.0);
  e.incentive = (a_ego_new - a_ego) + mp.politeness * (new_follower_gain + old_follower_gain) - mp.threshold;
  return e;
}

template <std::invocable<const env::VehicleState&> ParamsOf>
LaneChange mobil_decision(const DrivingContext& ctx, const MobilParams& mp, ParamsOf&& params_of) {
  LaneChange best = LaneChange::Keep;
  double best_incentive = 0.0;
  if (ctx.left_lane_exists) {
    const auto e = mobil_evaluate(ctx, ctx.at(env::kFrontLeft), ctx.at(env::kRearLeft), mp, params_of);
    if (e.safe && e.incentive > best_incentive) {
      best = LaneChange::Left;
      best_incentive = e.incentive;
    }
  }
  if (ctx.right_lane_exists) {
    const auto e = mobil_evaluate(ctx, ctx.at(env::kFrontRight), ctx.at(env::kRearRight), mp, params_of);
    if (e.safe && e.incentive > best_incentive) best = LaneChange::Right;
  }
  return best;
}

/// Overload for a single parameter set shared by every driver.
inline LaneChange mobil_decision(const DrivingContext& ctx, const MobilParams& mp, const IdmParams& idm) {
  return mobil_decision(ctx, mp, [&idm](const env::VehicleState&) -> const IdmParams& { return idm; });
}

}  // namespace hcpi::planner
