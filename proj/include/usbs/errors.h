#pragma once

#include <stdexcept>
#include <string>

namespace usbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A factorization failed or a basis collapsed.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// An interior-point line search could not keep the iterate interior.
class StepFailure : public Error {
 public:
  using Error::Error;
};

/// Invalid argument supplied by the caller (rank too large, bad fraction...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed instance or state file. Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// A warm-start file was produced for a different problem.
class FingerprintMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace usbs
