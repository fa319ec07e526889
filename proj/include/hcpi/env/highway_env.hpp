#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/core/random.hpp"
#include "hcpi/env/observation.hpp"
#include "hcpi/env/reward.hpp"
#include "hcpi/env/scenario.hpp"
#include "hcpi/env/vehicle.hpp"
#include "hcpi/planner/rule_policy.hpp"

namespace hcpi::env {

struct EnvConfig {
  RoadConfig road;
  ActuatorLimits limits;
  RewardWeights weights;
  planner::RulePlannerParams rule;  // background drivers and the rule-based ego
  // Heading hold on the ego steering actuator: the applied wheel-angle command
  // is the desired angle minus steer_assist * heading. The observation carries
  // no heading, so without it a memoryless policy cannot damp lateral motion.
  double steer_assist = 0.3;
};

enum class Controller { Ego, Rule, ScriptedBrake, ScriptedCutIn };

struct Agent {
  Controller controller = Controller::Rule;
  planner::IdmParams idm;
  planner::DriverMemory memory;
  // scripts
  double trigger_time = 0.0;
  double brake_rate = 0.0;
  double script_duration = 1.0;
  double script_from_y = 0.0;
  double script_to_y = 0.0;
};

struct WorldState {
  EnvConfig config;
  ScenarioSpec scenario;
  std::vector<VehicleState> vehicles;  // vehicles[0] is the ego
  std::vector<Agent> agents;           // parallel to vehicles
  int next_id = 0;
  double time = 0.0;
  int step_count = 0;
  bool done = false;
  bool collision = false;
  double ego_start_x = 0.0;
  double prev_ego_accel = 0.0;
  int ego_lane_changes = 0;
  Rng rng;

  const VehicleState& ego() const { return vehicles.front(); }
  double distance_travelled() const { return ego().x - ego_start_x; }
};

struct StepInfo {
  double ego_speed = 0.0;
  int lane = 0;
  bool lane_changed = false;
  double distance = 0.0;
};

struct StepResult {
  Observation observation{};
  double reward = 0.0;
  RewardBreakdown breakdown;
  bool done = false;
  bool collision = false;
  StepInfo info;
};

inline Observation observe(const WorldState& world) { return observe_vehicle(world.vehicles, 0, world.config.road.lane_width); }

inline RewardInputs reward_inputs(const WorldState& world, double prev_accel) {
  const VehicleState& ego = world.ego();
  const Neighbors nb = find_neighbors(world.vehicles, 0, kSensorRange, world.config.road.lane_width);
  RewardInputs in;
  in.ego_speed = ego.v;
  in.ego_accel = ego.accel;
  in.prev_ego_accel = prev_accel;
  in.steer = ego.steer;
  in.dt = world.scenario.dt;
  in.speed_limit = world.config.road.speed_limit;
  if (const auto* f = nb.get(world.vehicles, kFront)) in.front_dx = f->x - ego.x;
  if (const auto* r = nb.get(world.vehicles, kRear)) {
    in.rear_dx = r->x - ego.x;
    in.rear_speed = r->v;
  }
  in.collision = world.collision;
  return in;
}

inline RewardBreakdown compute_reward(const WorldState& world, double prev_accel) {
  return compute_reward(reward_inputs(world, prev_accel), world.config.weights);
}

inline bool ego_in_collision(const WorldState& world) {
  const VehicleState& ego = world.ego();
  if (crosses_road_edge(ego, world.config.road)) return true;
  for (std::size_t j = 1; j < world.vehicles.size(); ++j)
    if (footprints_overlap(ego, world.vehicles[j])) return true;
  return false;
}

namespace detail {

inline double jitter(Rng& rng, double center, double half_width) {
  return center + half_width * (2.0 * uniform01(rng) - 1.0);
}

inline void add_vehicle(WorldState& w, VehicleState s, Agent a) {
  s.id = w.next_id++;
  w.vehicles.push_back(s);
  w.agents.push_back(a);
}

inline Agent rule_agent(const WorldState& w, double desired_speed, int lane) {
  Agent a;
  a.controller = Controller::Rule;
  a.idm = w.config.rule.idm;
  a.idm.desired_speed = desired_speed;
  a.memory.target_lane = lane;
  return a;
}

inline double exponential(Rng& rng, double mean) { return -mean * std::log(1.0 - uniform01(rng)); }

inline void populate_daily_cruise(WorldState& w) {
  const auto& sc = w.scenario;
  if (sc.demand <= 0.0) return;
  const auto& road = w.config.road;
  const double mean_headway = 3600.0 / sc.demand;
  const double x_end = sc.ego_start_x + 1400.0;
  const VehicleState ego = w.vehicles.front();
  for (int lane = 0; lane < road.lane_count; ++lane) {
    double x = uniform01(w.rng) * 20.0;
    while (x < x_end) {
      const double v0 = sc.desired_speed_min + (sc.desired_speed_max - sc.desired_speed_min) * uniform01(w.rng);
      VehicleState s = make_vehicle(0, VehicleKind::Car, x, lane, v0, road);
      const bool near_ego = lane == ego.lane && std::abs(x - ego.x) < 30.0;
      if (!near_ego) add_vehicle(w, s, rule_agent(w, v0, lane));
      x += s.length + std::max(1.0, exponential(w.rng, mean_headway)) * v0;
    }
  }
}

// Poisson arrivals at a boundary trailing the ego.
inline void daily_cruise_inflow(WorldState& w) {
  const auto& sc = w.scenario;
  if (sc.demand <= 0.0) return;
  const auto& road = w.config.road;
  const double rate = sc.demand / 3600.0;
  const double spawn_x = w.ego().x - 200.0;
  for (int lane = 0; lane < road.lane_count; ++lane) {
    if (uniform01(w.rng) >= rate * sc.dt) continue;
    bool blocked = false;
    for (const auto& s : w.vehicles)
      if (s.lane == lane && std::abs(s.x - spawn_x) < 30.0) blocked = true;
    const double v0 = sc.desired_speed_min + (sc.desired_speed_max - sc.desired_speed_min) * uniform01(w.rng);
    if (!blocked) add_vehicle(w, make_vehicle(0, VehicleKind::Car, spawn_x, lane, v0, road), rule_agent(w, v0, lane));
  }
  const double cull_x = w.ego().x - 250.0;
  for (std::size_t j = w.vehicles.size(); j-- > 1;) {
    if (w.vehicles[j].x < cull_x || w.vehicles[j].x > road.road_length) {
      w.vehicles.erase(w.vehicles.begin() + static_cast<std::ptrdiff_t>(j));
      w.agents.erase(w.agents.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
}

inline void check_spawns(const WorldState& w) {
  for (std::size_t i = 0; i < w.vehicles.size(); ++i)
    for (std::size_t j = i + 1; j < w.vehicles.size(); ++j)
      if (footprints_overlap(w.vehicles[i], w.vehicles[j]))
        throw ConfigError("scenario '" + w.scenario.name + "': vehicles " + std::to_string(w.vehicles[i].id) + " and " +
                          std::to_string(w.vehicles[j].id) + " overlap at spawn");
  if (crosses_road_edge(w.vehicles.front(), w.config.road))
    throw ConfigError("scenario '" + w.scenario.name + "': ego spawns across the road edge");
}

}  // namespace detail

/// Builds the initial world for a scenario. Deterministic in (spec, seed).
inline WorldState make_world(const EnvConfig& config, const ScenarioSpec& spec, std::uint64_t seed) {
  config.road.validate();
  spec.validate(config.road.lane_count);
  WorldState w;
  w.config = config;
  w.scenario = spec;
  w.rng = Rng(derive_seed(seed, {0x5ce7a410ULL}));

  const double ego_speed = std::max(0.0, detail::jitter(w.rng, spec.ego_speed, spec.ego_speed_jitter));
  const double ego_x = spec.kind == ScenarioKind::DailyCruise ? spec.ego_start_x : 100.0;
  VehicleState ego = make_vehicle(0, VehicleKind::Car, ego_x, spec.ego_lane, ego_speed, config.road);
  Agent ego_agent;
  ego_agent.controller = Controller::Ego;
  ego_agent.idm = config.rule.idm;
  ego_agent.idm.desired_speed = config.road.speed_limit;
  ego_agent.memory.target_lane = spec.ego_lane;
  detail::add_vehicle(w, ego, ego_agent);
  w.ego_start_x = ego_x;

  const double trigger = std::max(0.0, detail::jitter(w.rng, spec.trigger_time, spec.trigger_time_jitter));
  switch (spec.kind) {
    case ScenarioKind::EmergencyBrake: {
      VehicleState lead = make_vehicle(0, VehicleKind::Car, 0.0, spec.ego_lane, ego_speed, config.road);
      lead.x = ego_x + spec.lead_distance + 0.5 * (ego.length + lead.length);
      Agent a;
      a.controller = Controller::ScriptedBrake;
      a.trigger_time = trigger;
      a.brake_rate = spec.brake_rate;
      detail::add_vehicle(w, lead, a);
      break;
    }
    case ScenarioKind::CutIn: {
      const double v = std::max(0.0, detail::jitter(w.rng, spec.cut_in_speed, spec.cut_in_speed_jitter));
      VehicleState truck = make_vehicle(0, VehicleKind::Truck, 0.0, spec.cut_in_from_lane, v, config.road);
      truck.x = ego_x + spec.lead_distance + 0.5 * (ego.length + truck.length);
      Agent a;
      a.controller = Controller::ScriptedCutIn;
      a.trigger_time = trigger;
      a.script_duration = spec.cut_in_duration;
      a.script_from_y = config.road.lane_center(spec.cut_in_from_lane);
      a.script_to_y = config.road.lane_center(spec.ego_lane);
      detail::add_vehicle(w, truck, a);
      break;
    }
    case ScenarioKind::DailyCruise:
      detail::populate_daily_cruise(w);
      break;
  }
  detail::check_spawns(w);
  return w;
}

namespace detail {

inline planner::RuleDecision rule_decision(const WorldState& w, std::size_t i) {
  const Neighbors nb = find_neighbors(w.vehicles, i, kSensorRange, w.config.road.lane_width);
  const planner::DrivingContext ctx = planner::make_context(w.vehicles, i, nb, w.config.road);
  auto params_of = [&w](const VehicleState& s) -> const planner::IdmParams& {
    const std::size_t k = static_cast<std::size_t>(&s - w.vehicles.data());
    return w.agents[k].idm;
  };
  return planner::rule_policy(ctx, w.agents[i].memory, w.config.rule, w.config.road, w.scenario.dt, params_of);
}

// Scripted vehicles follow their script exactly, without actuator lag.
inline void advance_scripted(VehicleState& s, const Agent& a, double t_before, double dt, const RoadConfig& road) {
  const double accel = (a.controller == Controller::ScriptedBrake && t_before >= a.trigger_time) ? a.brake_rate : 0.0;
  s.x += s.v * dt;
  const double v_new = std::max(0.0, s.v + accel * dt);
  s.accel = (v_new - s.v) / dt;
  s.accel_actuator = s.accel;
  s.v = v_new;
  if (a.controller == Controller::ScriptedCutIn) {
    // half-cosine lateral profile from the origin lane to the ego lane
    const double u = std::clamp((t_before + dt - a.trigger_time) / a.script_duration, 0.0, 1.0);
    const double span = a.script_to_y - a.script_from_y;
    s.y = a.script_from_y + span * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
    const double lateral_rate =
        (u > 0.0 && u < 1.0) ? span * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * u) / a.script_duration : 0.0;
    s.heading = std::atan2(lateral_rate, std::max(s.v, 1e-6));
  }
  s.lane = road.lane_of(s.y);
}

}  // namespace detail

/// Deterministic multi-lane freeway. Vehicle 0 is the ego, driven by the
/// caller's actions; the triggering vehicle of each scenario follows its
/// script and every other vehicle follows the rule planner.
class HighwayEnv {
 public:
  explicit HighwayEnv(EnvConfig config = {}) : config_(std::move(config)) {}

  const EnvConfig& config() const { return config_; }
  const WorldState& world() const { return world_; }
  WorldState& mutable_world() { return world_; }

  Observation reset(const ScenarioSpec& spec, std::uint64_t seed) {
    world_ = make_world(config_, spec, seed);
    return env::observe(world_);
  }

  Observation observe() const { return env::observe(world_); }

  /// Action the rule planner would take for the ego right now. Advances
  /// the ego driver's lane-change memory, so call it at most once per step.
  Action ego_rule_action() {
    const auto d = detail::rule_decision(world_, 0);
    world_.agents[0].memory = d.memory;
    // pre-compensate the heading hold so the rule law is applied unchanged
    return {d.action.accel, d.action.steer + world_.config.steer_assist * world_.ego().heading};
  }

  StepResult step(const Action& action) {
    WorldState& w = world_;
    require(!w.vehicles.empty(), "HighwayEnv::step: reset() has not been called");
    require(!w.done, "HighwayEnv::step: episode is done; call reset()");
    const double dt = w.scenario.dt;
    const int lane_before = w.ego().lane;

    // decide every background command on the pre-step state
    std::vector<Action> commands(w.vehicles.size());
    for (std::size_t i = 1; i < w.vehicles.size(); ++i) {
      if (w.agents[i].controller == Controller::Rule) {
        const auto d = detail::rule_decision(w, i);
        w.agents[i].memory = d.memory;
        commands[i] = d.action;
      }
    }
    const double prev_accel = w.ego().accel;
    const Action ego_command{action.accel, action.steer - w.config.steer_assist * w.ego().heading};
    integrate_bicycle(w.vehicles[0], ego_command, dt, w.config.limits, w.config.road);
    for (std::size_t i = 1; i < w.vehicles.size(); ++i) {
      if (w.agents[i].controller == Controller::Rule)
        integrate_bicycle(w.vehicles[i], commands[i], dt, w.config.limits, w.config.road);
      else
        detail::advance_scripted(w.vehicles[i], w.agents[i], w.time, dt, w.config.road);
    }
    w.time += dt;
    ++w.step_count;

    w.collision = ego_in_collision(w);
    StepResult r;
    r.breakdown = compute_reward(w, prev_accel);
    r.reward = r.breakdown.total();
    w.prev_ego_accel = prev_accel;
    r.collision = w.collision;
    r.info.ego_speed = w.ego().v;
    r.info.lane = w.ego().lane;
    r.info.lane_changed = w.ego().lane != lane_before;
    if (r.info.lane_changed) ++w.ego_lane_changes;
    r.info.distance = w.distance_travelled();
    w.done = w.collision || w.step_count >= w.scenario.episode_steps || r.info.distance >= w.scenario.max_distance;
    r.done = w.done;

    if (w.scenario.kind == ScenarioKind::DailyCruise && !w.done) detail::daily_cruise_inflow(w);
    r.observation = env::observe(w);
    return r;
  }

 private:
  EnvConfig config_;
  WorldState world_;
};

}  // namespace hcpi::env
