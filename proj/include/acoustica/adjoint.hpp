#pragma once

#include <span>
#include <vector>

#include "acoustica/fields.hpp"
#include "acoustica/forward.hpp"

namespace acoustica {

/// z_δ(t): 1 up to T - δ, 0 from T - δ/2, C¹ cubic in between.
double compatibility_weight(double t, double T, double delta);

/// (u - ũ) z_δ(t) on the observation nodes.
struct ResidualSource {
  double tau = 0.0;
  std::size_t n_steps = 0;
  std::vector<int> nodes;
  std::vector<double> weights;
  std::vector<double> values;

  std::size_t width() const { return nodes.size(); }
  double at(std::size_t n, std::size_t k) const { return values[n * width() + k]; }
};

ResidualSource make_residual(const ObservationTrace& u, const ObservationTrace& target, double T, double delta);

struct AdjointOptions {
  std::vector<int> history_nodes;
  bool full_history = false;
  /// Record the adjoint energy |λ^n - λ^{n+1}|²_M/τ² + (λ^n, K λ^{n+1}).
  bool record_energy = false;
};

struct AdjointResult {
  /// λ indexed by forward time level; λ^N = 0.
  TimeSeriesField history;
  std::vector<double> energy;
};

/// Backward sweep of the discrete adjoint of forward_solve:
///   A^{k-1} λ^{k-1} = (2M - τ²K - D^k) λ^k - C^{k+1} λ^{k+1} - τ² r^k,
/// k = N..1, with λ^N = λ^{N+1} = 0 and r^k = w_k W (u - ũ) z_δ on the
/// observation nodes (w_k the trapezoid weights). A, C, D are the forward
/// step matrices, so the sweep is the exact transpose of the forward recursion.
AdjointResult adjoint_solve(const HybridSystem& sys, const TimeGrid& tg, const ResidualSource& residual,
                            const AdjointOptions& opt = {});

/// One interior step of the forward recursion as a map on (u^n, u^{n-1}) and
/// its exact transpose, for the dot-product test. `top_before` and
/// `top_after` select top damping on the two half steps.
class StepOperator {
 public:
  StepOperator(const HybridSystem& sys, double tau, bool top_before, bool top_after);

  std::size_t size() const { return n_; }
  /// (a1, a2) -> (u^{n+1}, a1)
  void apply(std::span<const double> a1, std::span<const double> a2, std::span<double> out1,
             std::span<double> out2) const;
  /// (p, q) -> ((2M - τ²K - D) A⁻¹ p + q, -C A⁻¹ p)
  void apply_adjoint(std::span<const double> p, std::span<const double> q, std::span<double> out1,
                     std::span<double> out2) const;

 private:
  const HybridSystem& sys_;
  double tau_;
  bool top_before_;
  bool top_after_;
  std::size_t n_;
  std::vector<double> a_;
  std::vector<double> c_;
  std::vector<double> d_;
};

/// Boundary damping mass on the union nodes.
std::vector<double> boundary_damping(const HybridSystem& sys, bool top, bool bottom);

}  // namespace acoustica
