#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

#include "hcpi/env/vehicle.hpp"

namespace hcpi::env {

inline constexpr std::size_t kObservationDim = 21;
inline constexpr double kSensorRange = 150.0;

/// [x_e, y_e, v_e] followed by (dx, dy, dv) for the six neighbor slots in
/// the order of NeighborSlot.
using Observation = std::array<double, kObservationDim>;

enum NeighborSlot : std::size_t { kFront = 0, kRear, kFrontLeft, kRearLeft, kFrontRight, kRearRight, kSlotCount };

inline bool is_front_slot(std::size_t slot) { return slot % 2 == 0; }

struct Neighbors {
  std::array<std::optional<std::size_t>, kSlotCount> index{};

  const VehicleState* get(std::span<const VehicleState> vehicles, NeighborSlot slot) const {
    return index[slot] ? &vehicles[*index[slot]] : nullptr;
  }
};

/// Nearest vehicle per slot, by longitudinal distance, within `range`.
/// With a positive `lane_width`, a vehicle belongs to every lane its lateral
/// footprint reaches into, so a vehicle straddling two lanes is seen in both;
/// otherwise lane membership is the lane index. A vehicle exactly level with
/// `self` counts as in front.
inline Neighbors find_neighbors(std::span<const VehicleState> vehicles, std::size_t self, double range = kSensorRange,
                                double lane_width = 0.0) {
  Neighbors out;
  std::array<double, kSlotCount> best;
  best.fill(range);
  const VehicleState& ego = vehicles[self];
  auto offer = [&](std::size_t slot, std::size_t j, double dist) {
    if (!out.index[slot] || dist < best[slot]) {
      best[slot] = dist;
      out.index[slot] = j;
    }
  };
  for (std::size_t j = 0; j < vehicles.size(); ++j) {
    if (j == self) continue;
    const VehicleState& other = vehicles[j];
    const double dx = other.x - ego.x;
    const double dist = std::abs(dx);
    if (dist > range) continue;
    const std::size_t ahead = dx >= 0.0 ? 0 : 1;
    for (int dl = -1; dl <= 1; ++dl) {
      const int lane = ego.lane + dl;
      bool occupies;
      if (lane_width > 0.0) {
        const double lo = lane * lane_width;
        occupies = other.y + 0.5 * other.width > lo && other.y - 0.5 * other.width < lo + lane_width;
      } else {
        occupies = other.lane == lane;
      }
      if (!occupies) continue;
      const std::size_t base = dl == 0 ? kFront : (dl == 1 ? kFrontLeft : kFrontRight);
      offer(base + ahead, j, dist);
    }
  }
  return out;
}

inline Observation make_observation(std::span<const VehicleState> vehicles, std::size_t self,
                                    const Neighbors& nb) {
  const VehicleState& ego = vehicles[self];
  Observation obs{};
  obs[0] = ego.x;
  obs[1] = ego.y;
  obs[2] = ego.v;
  for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
    const std::size_t base = 3 + 3 * slot;
    if (const auto idx = nb.index[slot]) {
      const VehicleState& other = vehicles[*idx];
      obs[base] = other.x - ego.x;
      obs[base + 1] = other.y - ego.y;
      obs[base + 2] = other.v - ego.v;
    } else {
      obs[base] = is_front_slot(slot) ? kSensorRange : -kSensorRange;
      obs[base + 1] = 0.0;
      obs[base + 2] = 0.0;
    }
  }
  return obs;
}

inline Observation observe_vehicle(std::span<const VehicleState> vehicles, std::size_t self, double lane_width = 0.0) {
  return make_observation(vehicles, self, find_neighbors(vehicles, self, kSensorRange, lane_width));
}

}  // namespace hcpi::env
