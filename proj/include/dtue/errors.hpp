#pragma once

#include <stdexcept>
#include <string>

namespace dtue {

// Input data violates a documented invariant (bad shares, nonpositive length, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed text input; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Grid / solver configuration violates a structural requirement (CFL-style dx >= v_max*dt, ...).
class ConfigurationError : public std::runtime_error {
 public:
  explicit ConfigurationError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the domain of an operation (negative distance, time bin past the grid, ...).
class RangeError : public std::out_of_range {
 public:
  explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

// A trip (or mass) does not finish inside the simulated horizon. Callers may
// extend the horizon and retry; `unfinished_mass` is the mass still active when known.
class HorizonOverflowError : public std::runtime_error {
 public:
  explicit HorizonOverflowError(const std::string& what, double unfinished_mass = 0.0)
      : std::runtime_error(what), unfinished_mass_(unfinished_mass) {}
  double unfinished_mass() const { return unfinished_mass_; }

 private:
  double unfinished_mass_;
};

}  // namespace dtue
