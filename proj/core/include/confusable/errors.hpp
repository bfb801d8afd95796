#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace confusable {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments to an operation (bad indices, shapes, distributions).
class InputError : public Error {
 public:
  using Error::Error;
};

// Hyperparameters that violate their documented ranges.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset too small for a request, unreadable on disk, or inconsistent.
class DatasetError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), message_(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  // The description without the line prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t line_;
};

}  // namespace confusable
