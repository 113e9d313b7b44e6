#pragma once

#include <functional>
#include <span>
#include <vector>

#include "acoustica/fields.hpp"
#include "acoustica/hybrid.hpp"
#include "acoustica/time_grid.hpp"

namespace acoustica {

struct ForwardOptions {
  /// Store the history of these union nodes (see `full_history`).
  std::vector<int> history_nodes;
  /// Store every union node. Overrides `history_nodes`.
  bool full_history = false;
  /// Record discrete_energy at every level n >= 1.
  bool record_energy = false;
  /// Initial displacement on the union nodes; empty means zero.
  std::span<const double> f0;
  /// Called with (n, u^n) on the union nodes when set.
  std::function<void(std::size_t, std::span<const double>)> observer;
};

struct ForwardResult {
  TimeSeriesField history;
  ObservationTrace trace;
  /// energy[n] for n >= 1; energy[0] is 0.
  std::vector<double> energy;
};

/// Throws StabilityError unless tau <= cfl_safety * h_min * sqrt(min c̃).
void check_cfl(const HybridSystem& sys, const TimeGrid& tg);

/// Step coefficients of forward level n -> n + 1.
StepCoefficients forward_step_coefficients(const TimeGrid& tg, std::size_t n);

/// Explicit leapfrog for c̃ u_tt - Δu = 0 with the plane-wave load on the top
/// boundary, absorbing bottom (and top once t > t1), Neumann walls elsewhere.
ForwardResult forward_solve(const HybridSystem& sys, const TimeGrid& tg, const SourceSpec& src,
                            const ForwardOptions& opt = {});

/// E^n = |u^n - u^{n-1}|²_M / τ² + (u^n, K u^{n-1}), the energy conserved by
/// the undamped scheme. Requires a full history and n >= 1.
double discrete_energy(const HybridSystem& sys, const TimeSeriesField& field, std::size_t n);
double discrete_energy(const HybridSystem& sys, std::span<const double> u, std::span<const double> u_prev, double tau);

/// Empty trace on the observation nodes of `sys` for the time grid.
ObservationTrace make_trace_layout(const HybridSystem& sys, const TimeGrid& tg);

}  // namespace acoustica
