#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "hcpi/core/random.hpp"
#include "hcpi/env/highway_env.hpp"

using namespace hcpi;
using namespace hcpi::env;

namespace {

ScenarioSpec empty_road(double speed) {
  ScenarioSpec s = daily_cruise_scenario();
  s.demand = 0.0;
  s.ego_speed = speed;
  s.ego_speed_jitter = 0.0;
  return s;
}

const VehicleState* find_kind(const WorldState& w, VehicleKind kind) {
  for (std::size_t i = 1; i < w.vehicles.size(); ++i)
    if (w.vehicles[i].kind == kind) return &w.vehicles[i];
  return nullptr;
}

void expect_sentinel(const Observation& obs, std::size_t slot) {
  const std::size_t base = 3 + 3 * slot;
  EXPECT_EQ(obs[base], is_front_slot(slot) ? kSensorRange : -kSensorRange) << "slot " << slot;
  EXPECT_EQ(obs[base + 1], 0.0);
  EXPECT_EQ(obs[base + 2], 0.0);
}

std::vector<VehicleState> lone_ego(const RoadConfig& road) { return {make_vehicle(0, VehicleKind::Car, 500.0, 1, 25.0, road)}; }

Action random_action(Rng& rng) { return {-6.0 + 9.0 * uniform01(rng), 0.04 * (2.0 * uniform01(rng) - 1.0)}; }

}  // namespace

TEST(Reward, SpeedLimitWithNoNeighborsGivesEfficiencyWeight) {
  RewardInputs in;
  in.ego_speed = in.speed_limit;
  const auto r = compute_reward(in, RewardWeights{});
  EXPECT_EQ(r.efficiency, 1.5);
  EXPECT_EQ(r.total(), 1.5);
}

TEST(Reward, JerkBelowThresholdIsFree) {
  RewardInputs in;
  in.ego_speed = 20.0;
  in.prev_ego_accel = 0.0;
  in.ego_accel = 0.15;  // 1.5 m/s^3 over 0.1 s
  in.dt = 0.1;
  EXPECT_EQ(compute_reward(in, RewardWeights{}).comfort, 0.0);
  in.ego_accel = 0.25;  // 2.5 m/s^3
  EXPECT_NEAR(compute_reward(in, RewardWeights{}).comfort, -0.05 * 2.5, 1e-12);
}

TEST(Reward, OneSecondHeadwayRisk) {
  RewardInputs in;
  in.ego_speed = 20.0;
  in.front_dx = 20.0;
  EXPECT_EQ(compute_reward(in, RewardWeights{}).risk, -0.5 * std::exp(-1.0));
  EXPECT_NEAR(compute_reward(in, RewardWeights{}).risk, -0.1839, 1e-4);
}

TEST(Reward, SteerPenaltyAboveThreshold) {
  RewardInputs in;
  in.ego_speed = 10.0;
  in.steer = 0.29;
  EXPECT_EQ(compute_reward(in, RewardWeights{}).comfort, 0.0);
  in.steer = -0.4;
  EXPECT_NEAR(compute_reward(in, RewardWeights{}).comfort, -2.0 * 0.4, 1e-15);
}

TEST(Reward, ZeroSpeedHeadwayContributesNothing) {
  RewardInputs in;
  in.ego_speed = 0.0;
  in.front_dx = 5.0;
  in.rear_dx = -5.0;
  in.rear_speed = 0.0;
  EXPECT_EQ(compute_reward(in, RewardWeights{}).risk, 0.0);
}

TEST(Reward, CollisionTerm) {
  RewardInputs in;
  in.ego_speed = 10.0;
  in.collision = true;
  EXPECT_EQ(compute_reward(in, RewardWeights{}).collision, -20.0);
}

TEST(Step, ZeroActionOnEmptyRoadAdvancesAtSpeedLimit) {
  HighwayEnv hw;
  const double v = hw.config().road.speed_limit;
  hw.reset(empty_road(v), 1);
  const double x0 = hw.world().ego().x;
  const double y0 = hw.world().ego().y;
  const auto r = hw.step({0.0, 0.0});
  EXPECT_NEAR(hw.world().ego().x - x0, v * 0.1, 1e-12);
  EXPECT_EQ(hw.world().ego().y, y0);
  EXPECT_NEAR(r.reward, 1.5, 1e-12);
  EXPECT_FALSE(r.done);
}

TEST(Step, AccelerationCommandIsClamped) {
  EXPECT_EQ(clamp_action({-10.0, 0.0}, ActuatorLimits{}).accel, -5.0);
  EXPECT_EQ(clamp_action({0.0, 3.0}, ActuatorLimits{}).steer, 0.7);
  HighwayEnv hw;
  hw.reset(empty_road(30.0), 2);
  for (int i = 0; i < 30; ++i) hw.step({-10.0, 0.0});
  EXPECT_NEAR(hw.world().ego().accel, -5.0, 1e-4);
}

TEST(Step, OverlapWithTruckIsTerminalCollision) {
  HighwayEnv hw;
  hw.reset(emergency_brake_scenario(), 3);
  auto& w = hw.mutable_world();
  auto& other = w.vehicles[1];
  const auto fp = footprint_of(VehicleKind::Truck);
  other.kind = VehicleKind::Truck;
  other.length = fp.length;
  other.width = fp.width;
  other.x = w.ego().x + 5.0;
  other.y = w.ego().y;
  const auto r = hw.step({0.0, 0.0});
  EXPECT_TRUE(r.collision);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.breakdown.collision, -20.0);
  EXPECT_THROW(hw.step({0.0, 0.0}), ContractViolation);
}

TEST(Step, LeavingTheRoadIsACollision) {
  HighwayEnv hw;
  hw.reset(empty_road(25.0), 4);
  StepResult r;
  do r = hw.step({0.0, 0.7});
  while (!r.done);
  EXPECT_TRUE(r.collision);
  EXPECT_TRUE(crosses_road_edge(hw.world().ego(), hw.config().road));
}

TEST(Step, StepBeforeResetThrows) {
  HighwayEnv hw;
  EXPECT_THROW(hw.step({0.0, 0.0}), ContractViolation);
}

TEST(Step, EpisodeEndsAfterConfiguredSteps) {
  HighwayEnv hw;
  ScenarioSpec s = empty_road(20.0);
  s.episode_steps = 7;
  s.max_distance = 1e9;
  hw.reset(s, 5);
  int n = 0;
  StepResult r;
  do {
    r = hw.step({0.0, 0.0});
    ++n;
  } while (!r.done);
  EXPECT_EQ(n, 7);
  EXPECT_FALSE(r.collision);
}

TEST(Step, HeadingHoldCommandsCounterSteer) {
  HighwayEnv hw;
  hw.reset(empty_road(25.0), 6);
  hw.mutable_world().vehicles[0].heading = 0.02;
  hw.step({0.0, 0.0});
  EXPECT_LT(hw.world().ego().steer, 0.0);
}

TEST(Step, RuleActionIsAppliedUnchanged) {
  EnvConfig assisted;
  EnvConfig plain;
  plain.steer_assist = 0.0;
  HighwayEnv a(assisted), b(plain);
  a.reset(emergency_brake_scenario(), 8);
  b.reset(emergency_brake_scenario(), 8);
  for (int i = 0; i < 80; ++i) {
    const auto ra = a.step(a.ego_rule_action());
    const auto rb = b.step(b.ego_rule_action());
    ASSERT_NEAR(a.world().ego().y, b.world().ego().y, 1e-9);
    ASSERT_NEAR(a.world().ego().x, b.world().ego().x, 1e-9);
    if (ra.done || rb.done) break;
  }
}

TEST(Reset, CutInPlacesTruckAheadInAdjacentLane) {
  HighwayEnv hw;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    hw.reset(cut_in_scenario(), seed);
    const auto& w = hw.world();
    const VehicleState* truck = find_kind(w, VehicleKind::Truck);
    ASSERT_NE(truck, nullptr);
    EXPECT_EQ(std::abs(truck->lane - w.ego().lane), 1);
    EXPECT_NEAR(bumper_gap(w.ego(), *truck), 15.0, 1e-9);
  }
}

TEST(Reset, EmergencyBrakePlacesLeaderAheadInEgoLane) {
  HighwayEnv hw;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Observation obs = hw.reset(emergency_brake_scenario(), seed);
    const auto& w = hw.world();
    const auto n = find_neighbors(w.vehicles, 0, kSensorRange, w.config.road.lane_width);
    const VehicleState* leader = n.get(w.vehicles, kFront);
    ASSERT_NE(leader, nullptr);
    EXPECT_EQ(leader->lane, w.ego().lane);
    EXPECT_NEAR(bumper_gap(w.ego(), *leader), 10.0, 1e-9);
    EXPECT_NEAR(obs[3], leader->x - w.ego().x, 1e-12);
  }
}

TEST(Reset, DailyCruiseSpawnsTrafficWithoutOverlap) {
  HighwayEnv hw;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    hw.reset(daily_cruise_scenario(), seed);
    const auto& v = hw.world().vehicles;
    EXPECT_GT(v.size(), 5u);
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) EXPECT_FALSE(footprints_overlap(v[i], v[j]));
  }
}

TEST(Reset, UnknownScenarioNameIsAConfigError) { EXPECT_THROW(scenario_by_name("roundabout"), ConfigError); }

TEST(Observe, LoneEgoSeesOnlySentinels) {
  RoadConfig road;
  const auto vehicles = lone_ego(road);
  const Observation obs = observe_vehicle(vehicles, 0, road.lane_width);
  EXPECT_EQ(obs.size(), 21u);
  EXPECT_EQ(obs[0], 500.0);
  EXPECT_EQ(obs[1], road.lane_center(1));
  EXPECT_EQ(obs[2], 25.0);
  for (std::size_t slot = 0; slot < kSlotCount; ++slot) expect_sentinel(obs, slot);
}

TEST(Observe, LeaderThirtyMetresAhead) {
  RoadConfig road;
  auto vehicles = lone_ego(road);
  vehicles.push_back(make_vehicle(1, VehicleKind::Car, 530.0, 1, 25.0, road));
  const Observation obs = observe_vehicle(vehicles, 0, road.lane_width);
  EXPECT_EQ(obs[3], 30.0);
  EXPECT_EQ(obs[4], 0.0);
  EXPECT_EQ(obs[5], 0.0);
  for (std::size_t slot = 1; slot < kSlotCount; ++slot) expect_sentinel(obs, slot);
}

TEST(Observe, VehicleBeyondSensorRangeIsExcluded) {
  RoadConfig road;
  auto vehicles = lone_ego(road);
  vehicles.push_back(make_vehicle(1, VehicleKind::Car, 660.0, 1, 25.0, road));
  const Observation obs = observe_vehicle(vehicles, 0, road.lane_width);
  for (std::size_t slot = 0; slot < kSlotCount; ++slot) expect_sentinel(obs, slot);
}

TEST(Observe, NearestPerSlotAndRelativeSpeed) {
  RoadConfig road;
  auto vehicles = lone_ego(road);
  vehicles.push_back(make_vehicle(1, VehicleKind::Car, 560.0, 1, 20.0, road));
  vehicles.push_back(make_vehicle(2, VehicleKind::Car, 540.0, 1, 22.0, road));
  vehicles.push_back(make_vehicle(3, VehicleKind::Car, 480.0, 2, 30.0, road));
  vehicles.push_back(make_vehicle(4, VehicleKind::Truck, 510.0, 0, 24.0, road));
  const Observation obs = observe_vehicle(vehicles, 0, road.lane_width);
  EXPECT_EQ(obs[3 + 3 * kFront], 40.0);
  EXPECT_EQ(obs[5 + 3 * kFront], -3.0);
  EXPECT_EQ(obs[3 + 3 * kRearLeft], -20.0);
  EXPECT_EQ(obs[4 + 3 * kRearLeft], road.lane_width);
  EXPECT_EQ(obs[5 + 3 * kRearLeft], 5.0);
  EXPECT_EQ(obs[3 + 3 * kFrontRight], 10.0);
  EXPECT_EQ(obs[4 + 3 * kFrontRight], -road.lane_width);
  expect_sentinel(obs, kRear);
  expect_sentinel(obs, kFrontLeft);
  expect_sentinel(obs, kRearRight);
}

TEST(Observe, MirroredWorldSwapsLeftAndRight) {
  RoadConfig road;
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<VehicleState> vehicles = {make_vehicle(0, VehicleKind::Car, 500.0, 1, 25.0, road)};
    for (int i = 1; i < 8; ++i) {
      const int lane = static_cast<int>(uniform_index(rng, 3));
      vehicles.push_back(make_vehicle(i, VehicleKind::Car, 350.0 + 300.0 * uniform01(rng), lane,
                                      20.0 + 10.0 * uniform01(rng), road));
    }
    auto mirrored = vehicles;
    for (auto& v : mirrored) {
      v.y = road.width() - v.y;
      v.lane = road.lane_count - 1 - v.lane;
    }
    const Observation a = observe_vehicle(vehicles, 0, road.lane_width);
    const Observation b = observe_vehicle(mirrored, 0, road.lane_width);
    auto swapped = [](std::size_t slot) -> std::size_t {
      if (slot == kFrontLeft) return kFrontRight;
      if (slot == kRearLeft) return kRearRight;
      if (slot == kFrontRight) return kFrontLeft;
      if (slot == kRearRight) return kRearLeft;
      return slot;
    };
    for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
      const std::size_t s = 3 + 3 * slot, m = 3 + 3 * swapped(slot);
      EXPECT_EQ(a[s], b[m]);
      EXPECT_NEAR(a[s + 1], -b[m + 1], 1e-12);
      EXPECT_EQ(a[s + 2], b[m + 2]);
    }
  }
}

TEST(Properties, RewardDecompositionAndBoundsOverRandomRollouts) {
  HighwayEnv hw;
  Rng rng(31);
  const RewardWeights w;
  const double eff_max = w.efficiency * hw.config().limits.max_speed / hw.config().road.speed_limit;
  for (const auto& name : scenario_names()) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      Observation obs = hw.reset(scenario_by_name(name), seed);
      for (;;) {
        for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
          EXPECT_LE(std::abs(obs[3 + 3 * slot]), kSensorRange);
          if (std::abs(obs[3 + 3 * slot]) == kSensorRange) {
            EXPECT_EQ(obs[4 + 3 * slot], 0.0);
          }
        }
        const auto r = hw.step(random_action(rng));
        EXPECT_EQ(r.reward, r.breakdown.efficiency + r.breakdown.comfort + r.breakdown.risk + r.breakdown.collision);
        EXPECT_GE(r.breakdown.efficiency, 0.0);
        EXPECT_LE(r.breakdown.efficiency, eff_max);
        EXPECT_GE(r.breakdown.risk, w.risk_front + w.risk_rear);
        EXPECT_LE(r.breakdown.risk, 0.0);
        EXPECT_TRUE(r.breakdown.collision == 0.0 || r.breakdown.collision == w.collision);
        EXPECT_EQ(r.collision, r.breakdown.collision != 0.0);
        if (r.collision) EXPECT_TRUE(r.done);
        obs = r.observation;
        if (r.done) break;
      }
    }
  }
}

TEST(Properties, IdenticalSeedsAndActionsGiveBitIdenticalTrajectories) {
  for (const auto& name : scenario_names()) {
    HighwayEnv a, b;
    Rng ra(99), rb(99);
    Observation oa = a.reset(scenario_by_name(name), 17);
    Observation ob = b.reset(scenario_by_name(name), 17);
    for (;;) {
      for (std::size_t i = 0; i < kObservationDim; ++i)
        ASSERT_EQ(std::bit_cast<std::uint64_t>(oa[i]), std::bit_cast<std::uint64_t>(ob[i]));
      const auto sa = a.step(random_action(ra));
      const auto sb = b.step(random_action(rb));
      ASSERT_EQ(std::bit_cast<std::uint64_t>(sa.reward), std::bit_cast<std::uint64_t>(sb.reward));
      ASSERT_EQ(sa.done, sb.done);
      oa = sa.observation;
      ob = sb.observation;
      if (sa.done) break;
    }
  }
}

TEST(Properties, RuleDriverCompletesEmptyRoadWithoutLaneChanges) {
  HighwayEnv hw;
  hw.reset(empty_road(25.0), 3);
  StepResult r;
  int changes = 0;
  do {
    r = hw.step(hw.ego_rule_action());
    changes += r.info.lane_changed ? 1 : 0;
  } while (!r.done);
  EXPECT_FALSE(r.collision);
  EXPECT_EQ(changes, 0);
}
