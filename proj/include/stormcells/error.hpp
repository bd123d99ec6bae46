#pragma once

#include <stdexcept>
#include <string>

namespace stormcells {

/// Cholesky failed even after maximum jitter escalation.
class FactorizationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A simulation exceeded its storm or candidate budget.
class SimulationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Backend requested for a model that it cannot simulate.
class IncompatibleBackend : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace stormcells
