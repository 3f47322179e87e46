#pragma once

#include <stdexcept>
#include <string>

namespace tikreg {

/// Invalid user input or configuration (bad flags, out-of-range constants).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a result (non-finite data,
/// failed decomposition, degenerate profile).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tikreg
