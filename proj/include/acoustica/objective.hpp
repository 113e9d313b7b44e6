#pragma once

#include <vector>

#include "acoustica/adjoint.hpp"
#include "acoustica/coefficient.hpp"

namespace acoustica {

struct TikhonovConfig {
  double gamma = 0.01;
  double gamma0 = 0.01;
  CoefficientField c_ref;
  /// Width of the compatibility weight z_δ.
  double delta = 0.2;
  double T = 2.0;
};

/// Per-triangle values, zero outside G1.
struct GradientField {
  std::shared_ptr<const TriMesh> mesh;
  std::vector<double> values;

  static GradientField zeros(std::shared_ptr<const TriMesh> mesh);
};

/// Area-weighted L2 inner product over the G1 triangles.
double inner_g1(const TriMesh& mesh, const std::vector<double>& a, const std::vector<double>& b);
double norm_g1(const TriMesh& mesh, const std::vector<double>& a);
inline double inner_g1(const GradientField& a, const GradientField& b) { return inner_g1(*a.mesh, a.values, b.values); }
inline double norm_g1(const GradientField& a) { return norm_g1(*a.mesh, a.values); }

/// ½ Σ_n τ w_n z_δ(t_n) Σ_x W_x (u - ũ)² + ½ γ Σ_{K ⊂ G1} |K| (c̃_K - c̃_ref,K)²
/// with trapezoid weights w_n and lumped boundary lengths W_x.
double evaluate_functional(const ObservationTrace& trace, const ObservationTrace& target, const CoefficientField& c,
                           const TikhonovConfig& cfg);
double misfit_term(const ObservationTrace& trace, const ObservationTrace& target, double T, double delta);
double regularization_term(const CoefficientField& c, const CoefficientField& c_ref, double gamma);

/// Union indices of all vertices of G1 triangles: the nodes whose histories the gradient reads.
std::vector<int> g1_history_nodes(const HybridSystem& sys);

/// Gradient of the discrete functional with respect to c̃_K, divided by |K|:
///   g_K = γ (c̃_K - c̃_ref,K) - Σ_n τ avg_K[(λ^{n+1} - λ^n)/τ · (u^{n+1} - u^n)/τ] + avg_K[λ^0 (u^1 - u^0)] / τ
/// where avg_K is the mean over the three vertices of K (lumped mass).
GradientField assemble_gradient(const TimeSeriesField& u_hist, const TimeSeriesField& lambda_hist,
                                const HybridSystem& sys, const CoefficientField& c, const TikhonovConfig& cfg);

}  // namespace acoustica
