#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lplace {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad bounds, bad spec values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Two objects that must share a grid or class table do not.
class MismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numeric input violating a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text or binary input. Carries the 1-based line number for text.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Missing poses, frames or files while ingesting a scene.
class IngestError : public Error {
 public:
  using Error::Error;
};

class EmptyAccumulatorError : public Error {
 public:
  using Error::Error;
};

/// M-SOG / S-MIG over an empty coverage set, or a degenerate correlation.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class OptimizerStateError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace lplace
