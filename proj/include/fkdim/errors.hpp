#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fkdim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point does not belong to the state space of the system it was used with.
class IncompatiblePointError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument or configuration value is out of range.
/// `field()` names the offending parameter.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Some universe point lies in no candidate ball, or a partial-cover
/// threshold cannot be met.
class InfeasibleCoverError : public Error {
 public:
  InfeasibleCoverError(std::size_t orphan, const std::string& what)
      : Error(what), orphan_(orphan) {}
  /// Index of the first universe point that no candidate covers.
  std::size_t orphan() const noexcept { return orphan_; }

 private:
  std::size_t orphan_;
};

/// Configuration text could not be parsed. Carries the 1-based line.
class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace fkdim
