#include "acoustica/objective.hpp"

#include <algorithm>
#include <cmath>

#include "acoustica/errors.hpp"

namespace acoustica {

GradientField GradientField::zeros(std::shared_ptr<const TriMesh> mesh) {
  GradientField g;
  g.values.assign(mesh->num_triangles(), 0.0);
  g.mesh = std::move(mesh);
  return g;
}

double inner_g1(const TriMesh& mesh, const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != mesh.num_triangles() || b.size() != mesh.num_triangles()) {
    throw ShapeError("element fields do not match the mesh");
  }
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.region[t] == Region::G1) s += mesh.area(t) * a[t] * b[t];
  }
  return s;
}

double norm_g1(const TriMesh& mesh, const std::vector<double>& a) { return std::sqrt(inner_g1(mesh, a, a)); }

double misfit_term(const ObservationTrace& trace, const ObservationTrace& target, double T, double delta) {
  check_compatible(trace, target);
  double s = 0.0;
  for (std::size_t n = 0; n <= trace.n_steps; ++n) {
    const double w = (n == 0 || n == trace.n_steps) ? 0.5 : 1.0;
    const double z = compatibility_weight(trace.time(n), T, delta);
    if (z == 0.0) continue;
    double row = 0.0;
    for (std::size_t k = 0; k < trace.width(); ++k) {
      const double d = trace.at(n, k) - target.at(n, k);
      row += trace.weights[k] * d * d;
    }
    s += trace.tau * w * z * row;
  }
  return 0.5 * s;
}

double regularization_term(const CoefficientField& c, const CoefficientField& c_ref, double gamma) {
  if (c.mesh != c_ref.mesh) throw ShapeError("coefficient and reference live on different meshes");
  std::vector<double> d(c.values.size());
  for (std::size_t t = 0; t < d.size(); ++t) d[t] = c.values[t] - c_ref.values[t];
  return 0.5 * gamma * inner_g1(*c.mesh, d, d);
}

double evaluate_functional(const ObservationTrace& trace, const ObservationTrace& target, const CoefficientField& c,
                           const TikhonovConfig& cfg) {
  return misfit_term(trace, target, cfg.T, cfg.delta) + regularization_term(c, cfg.c_ref, cfg.gamma);
}

std::vector<int> g1_history_nodes(const HybridSystem& sys) {
  const TriMesh& m = sys.mesh();
  std::vector<int> nodes;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    if (m.region[t] != Region::G1) continue;
    for (int v : m.triangles[t]) nodes.push_back(sys.fe_to_union()[v]);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

GradientField assemble_gradient(const TimeSeriesField& u_hist, const TimeSeriesField& lambda_hist,
                                const HybridSystem& sys, const CoefficientField& c, const TikhonovConfig& cfg) {
  if (u_hist.n_steps != lambda_hist.n_steps || u_hist.tau != lambda_hist.tau) {
    throw ShapeError("forward and adjoint histories have different time levels");
  }
  if (c.mesh != sys.mesh_ptr() || cfg.c_ref.mesh != sys.mesh_ptr()) {
    throw ShapeError("coefficient fields do not belong to the system mesh");
  }
  const TriMesh& m = sys.mesh();
  const std::size_t N = u_hist.n_steps;
  const double tau = u_hist.tau;

  std::vector<int> ucol(sys.num_nodes(), -1), lcol(sys.num_nodes(), -1);
  for (std::size_t k = 0; k < u_hist.width(); ++k) ucol[u_hist.nodes[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < lambda_hist.width(); ++k) lcol[lambda_hist.nodes[k]] = static_cast<int>(k);

  // Per-node sums, evaluated once for every node used by a G1 triangle.
  const std::vector<int> nodes = g1_history_nodes(sys);
  std::vector<int> ui(nodes.size()), li(nodes.size());
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    ui[q] = ucol[nodes[q]];
    li[q] = lcol[nodes[q]];
    if (ui[q] < 0 || li[q] < 0) throw ShapeError("history does not cover the G1 vertices");
  }
  std::vector<double> s(nodes.size(), 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    std::span<const double> u0 = u_hist.step(n), u1 = u_hist.step(n + 1);
    std::span<const double> l0 = lambda_hist.step(n), l1 = lambda_hist.step(n + 1);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      s[q] += (l1[li[q]] - l0[li[q]]) * (u1[ui[q]] - u0[ui[q]]);
    }
  }
  std::vector<double> node_term(sys.num_nodes(), 0.0);
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double start = N >= 1 ? lambda_hist.at(0, li[q]) * (u_hist.at(1, ui[q]) - u_hist.at(0, ui[q])) : 0.0;
    node_term[nodes[q]] = (start - s[q]) / tau;
  }

  GradientField g = GradientField::zeros(sys.mesh_ptr());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    if (m.region[t] != Region::G1) continue;
    double avg = 0.0;
    for (int v : m.triangles[t]) avg += node_term[sys.fe_to_union()[v]];
    g.values[t] = cfg.gamma * (c.values[t] - cfg.c_ref.values[t]) + avg / 3.0;
  }
  return g;
}

}  // namespace acoustica
