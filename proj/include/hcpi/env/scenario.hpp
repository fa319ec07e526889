#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hcpi/core/error.hpp"

namespace hcpi::env {

enum class ScenarioKind { CutIn, EmergencyBrake, DailyCruise };

/// Scripted test scenario. Positions and speeds of the triggering vehicle
/// are jittered per seed within the stated bands.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::EmergencyBrake;
  std::string name = "emergency_brake";

  int episode_steps = 300;  // N
  double dt = 0.1;          // s
  double max_distance = std::numeric_limits<double>::infinity();  // ego travel that ends the episode

  int ego_lane = 1;
  double ego_speed = 20.0;         // m/s
  double ego_speed_jitter = 1.0;   // +- m/s, uniform

  // triggering vehicle
  double lead_distance = 10.0;     // bumper-to-bumper gap to the triggering vehicle at reset, m
  double trigger_time = 0.5;       // s after reset
  double trigger_time_jitter = 0.2;
  double brake_rate = -8.0;        // m/s^2 (EmergencyBrake)
  double cut_in_speed = 12.0;      // truck speed (CutIn)
  double cut_in_speed_jitter = 2.0;
  double cut_in_duration = 1.5;    // s for the lateral move
  int cut_in_from_lane = 2;

  // background traffic (DailyCruise)
  double demand = 2000.0;          // veh/h/lane; 0 leaves the road empty
  double desired_speed_min = 90.0 / 3.6;
  double desired_speed_max = 120.0 / 3.6;
  double ego_start_x = 300.0;

  void validate(int lane_count) const {
    if (episode_steps <= 0) throw ConfigError("scenario: episode_steps must be positive");
    if (!(dt > 0.0)) throw ConfigError("scenario: dt must be positive");
    if (ego_lane < 0 || ego_lane >= lane_count) throw ConfigError("scenario: ego_lane outside the road");
    if (!(ego_speed >= 0.0) || ego_speed_jitter < 0.0) throw ConfigError("scenario: bad ego speed");
    if (kind == ScenarioKind::EmergencyBrake && !(brake_rate < 0.0))
      throw ConfigError("scenario: brake_rate must be negative");
    if (kind == ScenarioKind::CutIn) {
      if (cut_in_from_lane < 0 || cut_in_from_lane >= lane_count || std::abs(cut_in_from_lane - ego_lane) != 1)
        throw ConfigError("scenario: cut-in truck must start in a lane adjacent to the ego");
      if (!(cut_in_duration > 0.0)) throw ConfigError("scenario: cut_in_duration must be positive");
    }
    if (kind == ScenarioKind::DailyCruise) {
      if (!(demand >= 0.0)) throw ConfigError("scenario: demand must be non-negative");
      if (!(desired_speed_min > 0.0 && desired_speed_max >= desired_speed_min))
        throw ConfigError("scenario: bad desired speed band");
    }
  }
};

inline ScenarioSpec cut_in_scenario() {
  ScenarioSpec s;
  s.kind = ScenarioKind::CutIn;
  s.name = "cut_in";
  s.episode_steps = 300;
  s.ego_speed = 22.0;
  s.lead_distance = 15.0;
  return s;
}

inline ScenarioSpec emergency_brake_scenario() {
  ScenarioSpec s;
  s.kind = ScenarioKind::EmergencyBrake;
  s.name = "emergency_brake";
  s.episode_steps = 300;
  s.ego_speed = 20.0;
  s.lead_distance = 10.0;
  s.brake_rate = -8.0;
  return s;
}

inline ScenarioSpec daily_cruise_scenario() {
  ScenarioSpec s;
  s.kind = ScenarioKind::DailyCruise;
  s.name = "daily_cruise";
  s.episode_steps = 600;
  s.max_distance = 1000.0;
  s.ego_speed = 25.0;
  s.ego_speed_jitter = 0.0;
  return s;
}

inline std::vector<std::string> scenario_names() { return {"cut_in", "emergency_brake", "daily_cruise"}; }

inline ScenarioSpec scenario_by_name(const std::string& name) {
  if (name == "cut_in") return cut_in_scenario();
  if (name == "emergency_brake") return emergency_brake_scenario();
  if (name == "daily_cruise") return daily_cruise_scenario();
  throw ConfigError("unknown scenario '" + name + "' (expected cut_in, emergency_brake or daily_cruise)");
}

}  // namespace hcpi::env
