#pragma once

#include <stdexcept>
#include <string>

namespace hmmilm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent arguments (dimension mismatch, bad ids, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A parameter vector outside the admissible domain of a formula.
class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid run or model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation that does not apply to the given model (e.g. R0 under a spatial kernel).
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

/// Bad input data; carries the offending line when it came from a file.
class DataError : public Error {
 public:
  DataError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Every state of a filtered or backward-sampling row had zero probability.
class FilterDegeneracyError : public Error {
 public:
  FilterDegeneracyError(const std::string& what, int individual, int time)
      : Error(what + " (individual " + std::to_string(individual) + ", t=" + std::to_string(time) + ")"),
        individual_(individual),
        time_(time) {}
  int individual() const noexcept { return individual_; }
  int time() const noexcept { return time_; }

 private:
  int individual_;
  int time_;
};

}  // namespace hmmilm
