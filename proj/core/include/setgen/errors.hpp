#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace setgen {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared while debug checks are enabled.
class NumericsError : public Error {
 public:
  using Error::Error;
};

// A creator was asked for more points than it can produce.
class CapacityError : public Error {
 public:
  CapacityError(std::size_t requested, std::size_t capacity)
      : Error("requested " + std::to_string(requested) +
              " points but creator capacity is " + std::to_string(capacity)),
        requested_(requested),
        capacity_(capacity) {}

  std::size_t requested() const { return requested_; }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t requested_;
  std::size_t capacity_;
};

// Rejection sampling gave up.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Reading or writing a file failed. `line` is 1-based, 0 when not applicable.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what + " '" + key + "'"),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const { return key_; }
  std::size_t line() const { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace setgen
