#pragma once

#include <stdexcept>
#include <string>

namespace aeos {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input violates an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Query outside a valid domain, e.g. a timestamp beyond a trajectory.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Scan registration had too few correspondences to constrain the pose.
class DegenerateRegistration : public Error {
 public:
  explicit DegenerateRegistration(int correspondences)
      : Error("registration degenerate: " + std::to_string(correspondences) +
              " correspondences"),
        correspondences_(correspondences) {}
  int correspondences() const { return correspondences_; }

 private:
  int correspondences_;
};

}  // namespace aeos
