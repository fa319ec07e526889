#pragma once

#include <algorithm>
#include <cmath>

#include "hcpi/core/error.hpp"

namespace hcpi::env {

struct RoadConfig {
  int lane_count = 3;
  double lane_width = 3.5;     // m
  double road_length = 4000.0; // m
  double speed_limit = 120.0 / 3.6;  // m/s

  double width() const { return lane_count * lane_width; }
  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }

  /// Lane 0 is the rightmost lane; lateral position grows to the left.
  int lane_of(double y) const {
    const int lane = static_cast<int>(std::floor(y / lane_width));
    return std::clamp(lane, 0, lane_count - 1);
  }

  void validate() const {
    if (lane_count < 2) throw ConfigError("road: lane_count must be >= 2");
    if (!(lane_width > 0.0)) throw ConfigError("road: lane_width must be positive");
    if (!(speed_limit > 0.0)) throw ConfigError("road: speed_limit must be positive");
    if (!(road_length > 0.0)) throw ConfigError("road: road_length must be positive");
  }
};

/// Physical limits shared by every vehicle on the road.
struct ActuatorLimits {
  double accel_min = -5.0;  // m/s^2
  double accel_max = 2.0;
  double steer_max = 0.7;   // rad
  double lag_time = 0.2;    // s, first-order lag on both channels
  double wheelbase = 2.7;   // m
  double max_speed = 40.0;  // m/s
};

struct Action {
  double accel = 0.0;  // desired acceleration, m/s^2
  double steer = 0.0;  // desired front wheel angle, rad
};

inline Action clamp_action(const Action& a, const ActuatorLimits& lim) {
  auto finite_or_zero = [](double v) { return std::isfinite(v) ? v : 0.0; };
  return {std::clamp(finite_or_zero(a.accel), lim.accel_min, lim.accel_max),
          std::clamp(finite_or_zero(a.steer), -lim.steer_max, lim.steer_max)};
}

enum class VehicleKind { Car, Truck };

struct Footprint {
  double length;
  double width;
};

inline Footprint footprint_of(VehicleKind kind) {
  return kind == VehicleKind::Truck ? Footprint{12.0, 2.5} : Footprint{4.5, 1.8};
}

struct VehicleState {
  int id = 0;
  VehicleKind kind = VehicleKind::Car;
  double x = 0.0;        // longitudinal position of the footprint center, m
  double y = 0.0;        // lateral position of the footprint center, m
  double v = 0.0;        // speed, m/s
  double heading = 0.0;  // rad, 0 = along the road
  double accel = 0.0;    // realized longitudinal acceleration over the last step
  double steer = 0.0;    // realized front wheel angle
  double length = 4.5;
  double width = 1.8;
  int lane = 0;

  // first-order lag state of the longitudinal actuator
  double accel_actuator = 0.0;
};

inline VehicleState make_vehicle(int id, VehicleKind kind, double x, int lane, double v, const RoadConfig& road) {
  VehicleState s;
  s.id = id;
  s.kind = kind;
  const auto fp = footprint_of(kind);
  s.length = fp.length;
  s.width = fp.width;
  s.x = x;
  s.y = road.lane_center(lane);
  s.v = v;
  s.lane = lane;
  return s;
}

/// Bumper-to-bumper distance from `rear` to `front` (negative on overlap).
inline double bumper_gap(const VehicleState& rear, const VehicleState& front) {
  return (front.x - rear.x) - 0.5 * (front.length + rear.length);
}

/// Axis-aligned footprint overlap; headings stay small on a straight road.
inline bool footprints_overlap(const VehicleState& a, const VehicleState& b) {
  return std::abs(a.x - b.x) < 0.5 * (a.length + b.length) && std::abs(a.y - b.y) < 0.5 * (a.width + b.width);
}

inline bool crosses_road_edge(const VehicleState& s, const RoadConfig& road) {
  return s.y - 0.5 * s.width < 0.0 || s.y + 0.5 * s.width > road.width();
}

/// Advances one vehicle by dt under the kinematic bicycle model, with the
/// commanded acceleration and wheel angle reached through a first-order lag.
/// The command is clamped to the actuator limits first.
inline void integrate_bicycle(VehicleState& s, const Action& command, double dt, const ActuatorLimits& lim,
                              const RoadConfig& road) {
  const Action cmd = clamp_action(command, lim);
  const double alpha = 1.0 - std::exp(-dt / lim.lag_time);
  s.accel_actuator += alpha * (cmd.accel - s.accel_actuator);
  s.steer += alpha * (cmd.steer - s.steer);

  s.x += s.v * std::cos(s.heading) * dt;
  s.y += s.v * std::sin(s.heading) * dt;
  s.heading += s.v * std::tan(s.steer) / lim.wheelbase * dt;

  const double v_new = std::clamp(s.v + s.accel_actuator * dt, 0.0, lim.max_speed);
  s.accel = (v_new - s.v) / dt;
  s.v = v_new;
  s.lane = road.lane_of(s.y);
}

}  // namespace hcpi::env
