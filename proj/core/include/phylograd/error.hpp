#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phylograd {

// Base for all library errors. The CLI maps each subclass onto a stable exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs violate a documented precondition (ragged alignment, bad frequencies...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numeric parameter lies outside its domain (alpha <= 0, negative length...).
class ParameterDomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : ValidationError("parse error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Kernels invoked out of dependency order.
class SequencingError : public Error {
 public:
  using Error::Error;
};

// Execution plan cannot be satisfied (staging budget, block ceiling).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Impossible data: a pattern with zero likelihood.
class NumericalError : public Error {
 public:
  NumericalError(std::size_t pattern, const std::string& what)
      : Error(what), pattern_(pattern) {}

  std::size_t pattern() const noexcept { return pattern_; }

 private:
  std::size_t pattern_;
};

}  // namespace phylograd
