#pragma once

#include <stdexcept>
#include <string>

namespace cel {

/// Non-finite or dimensionally inconsistent arguments.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Broken model invariant (e.g. a singular inertia matrix).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The simulation produced a non-finite value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time_s)
      : std::runtime_error(what), time_s_(time_s) {}
  double time_s() const { return time_s_; }

 private:
  double time_s_;
};

/// Experiment configuration failed to parse or validate. The message starts
/// with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cel
