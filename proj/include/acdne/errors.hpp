#pragma once

#include <stdexcept>
#include <string>

namespace acdne {

// Base for every error the library raises on bad input or numeric failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A node or attribute index outside the declared range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Data that parses but violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad function argument: shape mismatch, out-of-range hyperparameter.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// NaN/inf encountered in a loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Caller broke an API contract (e.g. backward with a cache from another net).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace acdne
