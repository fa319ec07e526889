#pragma once

#include <algorithm>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/core/random.hpp"
#include "hcpi/gate/bca.hpp"
#include "hcpi/gate/importance.hpp"
#include "hcpi/rl/policy.hpp"
#include "hcpi/rl/trajectory.hpp"

namespace hcpi::gate {

enum class Choice { Current, Candidate };

struct GateDecision {
  Choice chosen = Choice::Current;
  double rho_lower = std::numeric_limits<double>::quiet_NaN();
  double rho_cur = std::numeric_limits<double>::quiet_NaN();
  double delta = 0.9;
  std::size_t n = 0;
  bool accepted = false;
  // audit
  double log_omega_min = 0.0;
  double log_omega_max = 0.0;
  int clamp_count = 0;         // importance weights hitting the log clamp
  int return_clamp_count = 0;  // returns outside the normalization bounds
  std::string diagnostic;
};

/// Mean normalized return of the behavior policy on its own test data.
inline double current_performance(std::span<const rl::Trajectory* const> test_set, double gamma,
                                  const NormalizationBounds& bounds, int* clamp_count = nullptr) {
  require(!test_set.empty(), "current_performance: empty test set");
  double total = 0.0;
  for (const auto* traj : test_set) {
    const auto r = normalized_return(*traj, gamma, bounds);
    if (r.clamped && clamp_count) ++*clamp_count;
    total += r.value;
  }
  return total / static_cast<double>(test_set.size());
}

/// Accept the candidate iff its BCa lower bound strictly exceeds the current
/// policy's mean normalized return, both estimated on the same test data.
inline GateDecision improvement_gate(const rl::GaussianPolicy& candidate, std::span<const rl::Trajectory* const> test_set,
                                     double delta, int resamples, double gamma, const NormalizationBounds& bounds,
                                     Rng& rng) {
  require(!test_set.empty(), "improvement_gate: empty test set");
  GateDecision d;
  d.delta = delta;
  d.n = test_set.size();
  d.rho_cur = current_performance(test_set, gamma, bounds, &d.return_clamp_count);

  std::vector<double> xs;
  xs.reserve(test_set.size());
  d.log_omega_min = std::numeric_limits<double>::infinity();
  d.log_omega_max = -std::numeric_limits<double>::infinity();
  for (const auto* traj : test_set) {
    const auto ir = importance_weighted_return(*traj, candidate, gamma, bounds);
    xs.push_back(ir.value);
    d.log_omega_min = std::min(d.log_omega_min, ir.log_weight);
    d.log_omega_max = std::max(d.log_omega_max, ir.log_weight);
    if (ir.weight_clamped) ++d.clamp_count;
  }

  if (xs.size() < 2) {
    d.diagnostic = "fewer than two test trajectories; candidate rejected";
    return d;
  }
  d.rho_lower = bca_lower_bound(xs, delta, resamples, rng).lower_bound;
  d.accepted = d.rho_lower > d.rho_cur;
  d.chosen = d.accepted ? Choice::Candidate : Choice::Current;
  return d;
}

inline constexpr const char* kGateLogHeader =
    "cycle,n,rho_lower,rho_cur,delta,accepted,log_omega_min,log_omega_max,clamp_count";

}  // namespace hcpi::gate
