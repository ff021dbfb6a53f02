#pragma once

#include <stdexcept>
#include <string>

namespace macf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimension or grid size between fields that must agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A pointwise evaluation, solve or time step produced a non-finite value,
/// or an iteration did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised by the time integrators when the state leaves the admissible range.
/// `time` is the simulated time at which the escape was detected.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double time, long step)
      : NumericalError(what), time_(time), step_(step) {}

  double time() const noexcept { return time_; }
  long step() const noexcept { return step_; }

 private:
  double time_;
  long step_;
};

/// Invalid or missing configuration. `key` is the dotted key path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key), detail_(what) {}

  const std::string& key() const noexcept { return key_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

}  // namespace macf
