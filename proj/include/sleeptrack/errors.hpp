#pragma once

#include <stdexcept>
#include <string>

namespace sleeptrack {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed network/run configuration or unknown builtin name.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The motion model is unusable (non-stochastic rows, no absorption, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// An observation has zero likelihood under the current belief.
class InconsistentObservation : public Error {
 public:
  InconsistentObservation(const std::string& what, int sensor)
      : Error(what), sensor_(sensor) {}
  /// Index of the offending sensor; n for the virtual exit sensor.
  int sensor() const noexcept { return sensor_; }

 private:
  int sensor_;
};

class EstimatorUndefined : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class RunawayEpisode : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sleeptrack
