#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "acoustica/geometry.hpp"

namespace acoustica {

/// Nodal history over n_steps + 1 time levels.
///
/// `nodes` lists the union-node indices that are stored, in storage order.
/// A full history stores every union node.
struct TimeSeriesField {
  double tau = 0.0;
  std::size_t n_steps = 0;
  std::vector<int> nodes;
  std::vector<double> data;

  std::size_t width() const { return nodes.size(); }
  std::span<const double> step(std::size_t n) const { return {data.data() + n * width(), width()}; }
  std::span<double> step(std::size_t n) { return {data.data() + n * width(), width()}; }
  double at(std::size_t n, std::size_t k) const { return data[n * width() + k]; }
  /// Storage column of a union node, -1 if not stored.
  int column_of(int node) const;
};

/// u on the observation boundary (top and bottom of D) at every time level.
struct ObservationTrace {
  double tau = 0.0;
  std::size_t n_steps = 0;
  std::vector<int> nodes;
  std::vector<Vec2> coords;
  std::vector<double> weights;
  std::vector<BoundaryTag> tags;
  /// values[n * nodes.size() + k]
  std::vector<double> values;

  std::size_t width() const { return nodes.size(); }
  double time(std::size_t n) const { return static_cast<double>(n) * tau; }
  double at(std::size_t n, std::size_t k) const { return values[n * width() + k]; }
  std::span<const double> step(std::size_t n) const { return {values.data() + n * width(), width()}; }
};

/// Throws ShapeError unless both traces live on the same nodes and time levels.
void check_compatible(const ObservationTrace& a, const ObservationTrace& b);

/// CSV with header `t,node_x1,node_x2,u`, one row per (time level, node).
void write_trace_csv(std::ostream& os, const ObservationTrace& trace);
void write_trace_csv(const std::string& path, const ObservationTrace& trace);

/// Reads values from a CSV written by write_trace_csv into a copy of
/// `layout`. The file must list the same nodes and time levels.
ObservationTrace read_trace_csv(const std::string& path, const ObservationTrace& layout);

}  // namespace acoustica
