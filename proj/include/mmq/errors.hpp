#pragma once

#include <stdexcept>
#include <string>

namespace mmq {

// Coordinate outside the (a, b, s) box.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A numeric argument outside its admissible range (step size, discount, dims).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One of the standing assumptions on the sampling model or initial iterate fails.
class AssumptionViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Vector or matrix lengths that do not match the game dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A game document could not be turned into a valid GameSpec. what() names the field.
class LoadError : public std::runtime_error {
 public:
  LoadError(std::string field, const std::string& detail)
      : std::runtime_error(field + ": " + detail), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmq
