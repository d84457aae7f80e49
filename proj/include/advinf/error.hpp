#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advinf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + (line ? " (line " + std::to_string(line) + ")" : std::string{})),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// A perturbation or plan broke its budget or bound contract.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Two inputs that must share structure do not.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace advinf
