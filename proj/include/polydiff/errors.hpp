#pragma once

#include <stdexcept>
#include <string>

namespace polydiff {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised by the time stepper when the state leaves the finite-value guard.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step_index)
      : Error(what), step_index_(step_index) {}
  long step_index() const noexcept { return step_index_; }

 private:
  long step_index_;
};

}  // namespace polydiff
