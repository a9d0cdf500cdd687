#pragma once

#include <stdexcept>
#include <string>

namespace dynasty {

// Sum of competitiveness across the population is zero, so endowments
// cannot be normalized.
class DegeneratePopulation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An endowment underflowed to zero during a step (winner-take-all drift).
class EndowmentCollapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An analysis was asked for on an input that does not meet its contract,
// e.g. a trap probe on an unconverged equilibrium.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynasty
