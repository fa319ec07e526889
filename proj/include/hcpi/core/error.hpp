#pragma once

#include <stdexcept>
#include <string>

namespace hcpi {

/// Raised when a caller breaks an operation's precondition (shape mismatch,
/// stepping a finished episode, missing stored densities, ...).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Invalid or infeasible configuration (unknown key, degenerate bounds,
/// overlapping spawns).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure detected at run time, e.g. a non-finite gradient or
/// probability ratio. The trainer logs and skips the offending batch.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace hcpi
