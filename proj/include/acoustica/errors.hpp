#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acoustica {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rectangles that do not nest as D ⊃ D_FEM ⊃ G1 ⊃ G0, or are not mirror symmetric.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Mesh size incompatible with the geometry.
class DiscretizationError : public Error {
 public:
  using Error::Error;
};

class RefinementError : public Error {
 public:
  using Error::Error;
};

/// A fine mesh or field cannot be traced back to the coarse level it claims to come from.
class LineageError : public Error {
 public:
  using Error::Error;
};

/// Time step violates the CFL bound.
class StabilityError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Traces, histories or fields whose node sets or lengths disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration. `line` is 0 when the problem is not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field, std::size_t line = 0)
      : Error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

}  // namespace acoustica
