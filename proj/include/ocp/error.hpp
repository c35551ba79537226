#pragma once

#include <stdexcept>
#include <string>

namespace ocp {

/// Invalid user-supplied configuration (mesh exponent, bounds, rectangles, keys).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operands whose shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix or operator that was required to be symmetric positive definite is not.
class NotSpdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The inner CG hit its iteration cap before meeting its stopping test.
class StagnationError : public std::runtime_error {
 public:
  StagnationError(const std::string& what, double last_ratio)
      : std::runtime_error(what), last_ratio_(last_ratio) {}
  double last_ratio() const noexcept { return last_ratio_; }

 private:
  double last_ratio_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ocp
