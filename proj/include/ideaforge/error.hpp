#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ideaforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input failed a precondition (bad params, empty prompt, bad mode/input pairing).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A line-oriented input could not be parsed. `line` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// The requested state transition is not allowed (e.g. a second verdict).
class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace ideaforge
