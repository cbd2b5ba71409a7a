#pragma once

#include <stdexcept>
#include <string>

namespace metarm {

// Invalid specs, malformed config files, unknown keys.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Dimension mismatches between inputs and a model spec.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or empty batches and samples.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite gradients or parameters during training. Carries the step index.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

  // Verbatim message, for rewrapping with outer context.
  static DivergenceError contextual(const std::string& what, int step) {
    return DivergenceError(Raw{}, what, step);
  }

 private:
  struct Raw {};
  DivergenceError(Raw, const std::string& what, int step)
      : std::runtime_error(what), step_(step) {}

  int step_;
};

// Filesystem and serialization failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace metarm
