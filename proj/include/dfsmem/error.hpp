#pragma once

#include <stdexcept>
#include <string>

namespace dfsmem {

// Invalid user input: bad configuration values, malformed files, unknown labels.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure could not deliver its contract (bracketing failed,
// integrator diverged, optimizer floor not reached).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dfsmem
