#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

namespace acoustica {

/// Uniform partition of (0, T). The source acts on the top boundary up to t1.
struct TimeGrid {
  double T = 2.0;
  double tau = 0.002;
  std::size_t n_steps = 1000;
  double t1 = 0.0;
  double cfl_safety = 0.1;

  /// Requires T / tau to be an integer (to 1e-9).
  static TimeGrid make(double T, double tau, double t1, double cfl_safety = 0.1);

  double time(std::size_t n) const { return static_cast<double>(n) * tau; }
  /// The top boundary is absorbing once the incident pulse has been emitted.
  bool top_absorbing(std::size_t n) const { return time(n) > t1; }
};

struct SourceSpec {
  double omega = 40.0;
  double amplitude = 1.0;

  double duration() const { return 2.0 * std::numbers::pi / omega; }
};

/// p(t) = A sin(ωt) on (0, 2π/ω), zero otherwise.
double plane_wave_source(double t, const SourceSpec& spec);

}  // namespace acoustica
