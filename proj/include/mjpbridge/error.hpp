#ifndef MJPBRIDGE_ERROR_HPP
#define MJPBRIDGE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mjpbridge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (dimensions, signs, ranges).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Bad user input: malformed config, dataset or network file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Base for failures of the numerics rather than of the inputs.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidTransition : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IntegrationFailure : public NumericalError {
 public:
  IntegrationFailure(const std::string& what, double time)
      : NumericalError(what + " (t=" + std::to_string(time) + ")"), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class IllConditioned : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateCovariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ProviderContractError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class HazardOverflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OutOfRange : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace mjpbridge

#endif
