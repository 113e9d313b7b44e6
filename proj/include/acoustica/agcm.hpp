#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "acoustica/objective.hpp"

namespace acoustica {

enum class StopReason { None, Tolerance, Stabilized, MaxIter, ZeroDirection };
std::string_view to_string(StopReason r);

enum class AgcmMode {
  /// Optimize on every level, refine, interpolate, repeat.
  RefineEachLevel,
  /// Optimize on the coarse mesh, carry the result to the finest mesh, optimize there.
  InterpThenOptimize,
};

struct AGCMConfig {
  double gamma0 = 0.01;
  double p_exponent = 0.9;
  double theta = 1e-5;
  int max_inner_iters = 20;
  int max_refinements = 3;
  int stabilization_window = 3;
  double stabilization_rel_change = 1e-3;
  /// Stop refining when the level-final gradient norm grows or stabilizes.
  bool level_stop = true;
  double min_angle_deg = 20.0;
  AgcmMode mode = AgcmMode::RefineEachLevel;

  void validate() const;
};

struct IterationRecord {
  int level = 0;
  int m = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  double grad_norm = 0.0;
  double functional = 0.0;
};

struct OptimizerState {
  int m = 0;
  int level = 0;
  std::optional<GradientField> g_prev;
  std::optional<GradientField> d_prev;
  double gamma_m = 0.0;
  std::vector<IterationRecord> history;
  StopReason stop_reason = StopReason::None;
};

/// γ^m = γ0 / (m + 1)^p
double gamma_schedule(double gamma0, double p, int m);

/// Fletcher-Reeves: d = -g at the start (or when ‖g_prev‖ = 0), else
/// d = -g + β d_prev with β = ‖g‖² / ‖g_prev‖². `beta` receives β (0 on restart).
GradientField cg_direction(const GradientField& g, const GradientField* g_prev, const GradientField* d_prev,
                           double* beta = nullptr);

/// α = -((g, d)) / (γ ‖d‖²); nullopt when ‖d‖ = 0.
std::optional<double> step_size(const GradientField& g, const GradientField& d, double gamma);

/// c + α d on G1, projected onto [lower, upper]; other elements untouched.
CoefficientField update_coefficient(const CoefficientField& c, const GradientField& d, double alpha);

/// Everything one refinement level needs.
struct LevelProblem {
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const FdGrid> grid;
  TimeGrid tg;
  SourceSpec src;
  ObservationTrace target;
  CoefficientField c0;
  double delta = 0.2;
  bool obstacle = true;
};

struct LevelResult {
  int level = 0;
  TimeGrid tg;
  CoefficientField c;
  OptimizerState state;
  /// Gradient norm of the last gradient computed on this level.
  double final_grad_norm = 0.0;
  std::optional<GradientField> last_gradient;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Forward solve, adjoint solve, gradient, CG update until a stop rule fires.
LevelResult run_inner_loop(const LevelProblem& problem, const AGCMConfig& cfg, int level,
                           const IterationObserver& observer = {});

/// Time step for a level: tau0 halved until the CFL bound for h_min holds.
TimeGrid level_time_grid(double T, double tau0, double t1, double cfl_safety, double h_min);

struct AgcmProblem {
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const FdGrid> grid;
  SourceSpec src;
  double T = 2.0;
  double tau0 = 0.002;
  double t1 = 0.0;
  double cfl_safety = 0.1;
  double delta = 0.2;
  double c0_value = 1.5;
  bool obstacle = true;
  /// Observed data on a given level.
  std::function<ObservationTrace(const std::shared_ptr<const TriMesh>&, const TimeGrid&)> target;
};

/// Outer refinement loop; one entry per optimized level.
std::vector<LevelResult> run_agcm(const AgcmProblem& problem, const AGCMConfig& cfg,
                                  const IterationObserver& observer = {});

}  // namespace acoustica
