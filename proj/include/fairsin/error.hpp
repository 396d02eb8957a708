#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairsin {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input parsed fine but violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad user configuration (CLI maps this to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or other numerical breakdown during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairsin
