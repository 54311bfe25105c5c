#pragma once

#include <stdexcept>
#include <string>

namespace auto_ood {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument value (class index out of range, empty list, bad kappa, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Input vector does not match the model's expected dimension.
class InputShapeError : public Error {
public:
  using Error::Error;
};

/// A class required by a memory bank has no training sample.
class CoverageError : public Error {
public:
  CoverageError(std::size_t missing_class)
      : Error("training set has no sample of class " + std::to_string(missing_class)),
        missing_class_(missing_class) {}
  std::size_t missing_class() const noexcept { return missing_class_; }

private:
  std::size_t missing_class_;
};

/// The online loss became NaN/Inf; the run cannot continue.
class NonFiniteLossError : public Error {
public:
  using Error::Error;
};

// Checkpoint loading.
class CheckpointError : public Error {
public:
  using Error::Error;
};
class CheckpointFormatError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};
class CheckpointVersionError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};
class CheckpointDimensionError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

}  // namespace auto_ood
