#include <algorithm>
#include <cmath>
#include <random>

#include "acoustica/errors.hpp"
#include "acoustica/objective.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace acoustica;

namespace {

struct Problem {
  Discretization d;
  TimeGrid tg;
  SourceSpec src{40.0, 1.0};
  ObservationTrace target;
  double delta = 0.1;
};

Problem coarse_problem() {
  Problem p{build_geometry(testing::coarse_geometry()), {}};
  p.tg = TimeGrid::make(1.0, 0.01, p.src.duration());
  HybridSystem free(p.d.mesh, p.d.grid, CoefficientField::uniform(p.d.mesh, 1.0), false);
  p.target = forward_solve(free, p.tg, p.src).trace;
  return p;
}

double functional_at(const Problem& p, const CoefficientField& c, const TikhonovConfig& cfg) {
  HybridSystem sys(p.d.mesh, p.d.grid, c, true);
  return evaluate_functional(forward_solve(sys, p.tg, p.src).trace, p.target, c, cfg);
}

GradientField gradient_at(const Problem& p, const CoefficientField& c, const TikhonovConfig& cfg) {
  HybridSystem sys(p.d.mesh, p.d.grid, c, true);
  const std::vector<int> nodes = g1_history_nodes(sys);
  const ForwardResult f = forward_solve(sys, p.tg, p.src, {.history_nodes = nodes});
  const ResidualSource r = make_residual(f.trace, p.target, p.tg.T, p.delta);
  const AdjointResult a = adjoint_solve(sys, p.tg, r, {.history_nodes = nodes});
  return assemble_gradient(f.history, a.history, sys, c, cfg);
}

}  // namespace

TEST_CASE("functional vanishes at the data") {
  Problem p = coarse_problem();
  const CoefficientField c = CoefficientField::uniform(p.d.mesh, 1.5);
  TikhonovConfig cfg{0.01, 0.01, c, p.delta, p.tg.T};
  CHECK(evaluate_functional(p.target, p.target, c, cfg) == 0.0);
}

TEST_CASE("regularization term in closed form") {
  Problem p = coarse_problem();
  const CoefficientField ref = CoefficientField::uniform(p.d.mesh, 1.5, 2.5);
  const CoefficientField c = CoefficientField::uniform(p.d.mesh, 2.0, 2.5);
  TikhonovConfig cfg{0.01, 0.01, ref, p.delta, p.tg.T};
  const double g1 = p.d.mesh->region_area(Region::G1);
  CHECK(evaluate_functional(p.target, p.target, c, cfg) == doctest::Approx(0.5 * 0.01 * 0.25 * g1).epsilon(1e-13));
}

TEST_CASE("misfit matches a brute-force double loop") {
  Problem p = coarse_problem();
  std::mt19937_64 rng(3);
  ObservationTrace a = p.target, b = p.target;
  a.values = testing::random_vector(a.values.size(), rng);
  b.values = testing::random_vector(b.values.size(), rng);
  for (double& v : a.values) v *= 1e-2;
  for (double& v : b.values) v *= 1e-2;
  const CoefficientField c = CoefficientField::uniform(p.d.mesh, 1.5);
  TikhonovConfig cfg{0.01, 0.01, c, p.delta, p.tg.T};

  // Oracle: trapezoid in time, lumped edge lengths from the node coordinates.
  const double h = p.d.grid->h;
  double sum = 0.0;
  for (std::size_t n = 0; n <= a.n_steps; ++n) {
    const double t = n * a.tau;
    const double tw = (n == 0 || n == a.n_steps) ? 0.5 : 1.0;
    const double s = (t - (p.tg.T - p.delta)) / (0.5 * p.delta);
    const double z = s <= 0.0 ? 1.0 : s >= 1.0 ? 0.0 : 1.0 - 3.0 * s * s + 2.0 * s * s * s;
    for (std::size_t k = 0; k < a.width(); ++k) {
      const double x = a.coords[k].x;
      const double w = (std::abs(std::abs(x) - 1.1) < 1e-12) ? 0.5 * h : h;
      const double d = a.at(n, k) - b.at(n, k);
      sum += 0.5 * a.tau * tw * z * w * d * d;
    }
  }
  const double value = evaluate_functional(a, b, c, cfg);
  CHECK(value == doctest::Approx(sum).epsilon(1e-12));
  CHECK(value >= 0.0);

  ObservationTrace shorter = b;
  shorter.n_steps -= 1;
  shorter.values.resize(shorter.values.size() - shorter.width());
  CHECK_THROWS_AS(evaluate_functional(a, shorter, c, cfg), ShapeError);
}

TEST_CASE("gradient with a zero adjoint is the regularization term") {
  Problem p = coarse_problem();
  const CoefficientField ref = CoefficientField::uniform(p.d.mesh, 1.5, 2.5);
  CoefficientField c = ref;
  std::mt19937_64 rng(5);
  for (std::size_t t = 0; t < c.values.size(); ++t) {
    if (p.d.mesh->region[t] == Region::G1) c.values[t] = 1.5 + 0.5 * std::abs(testing::random_vector(1, rng)[0]);
  }
  HybridSystem sys(p.d.mesh, p.d.grid, c, true);
  const std::vector<int> nodes = g1_history_nodes(sys);
  const ForwardResult f = forward_solve(sys, p.tg, p.src, {.history_nodes = nodes});
  TimeSeriesField zero = f.history;
  std::fill(zero.data.begin(), zero.data.end(), 0.0);
  TikhonovConfig cfg{0.01, 0.01, ref, p.delta, p.tg.T};
  const GradientField g = assemble_gradient(f.history, zero, sys, c, cfg);
  for (std::size_t t = 0; t < g.values.size(); ++t) {
    if (p.d.mesh->region[t] == Region::G1) {
      CHECK(g.values[t] == 0.01 * (c.values[t] - ref.values[t]));
    } else {
      CHECK(g.values[t] == 0.0);
    }
  }
}

TEST_CASE("elements the wave never reaches carry only the regularization gradient") {
  Problem p = coarse_problem();
  p.tg = TimeGrid::make(0.25, 0.01, p.src.duration());
  p.delta = 0.05;
  HybridSystem free(p.d.mesh, p.d.grid, CoefficientField::uniform(p.d.mesh, 1.0), false);
  p.target = forward_solve(free, p.tg, p.src).trace;
  const CoefficientField ref = CoefficientField::uniform(p.d.mesh, 1.5, 2.5);
  const CoefficientField c = CoefficientField::uniform(p.d.mesh, 2.0, 2.5);
  TikhonovConfig cfg{0.01, 0.01, ref, p.delta, p.tg.T};
  const GradientField g = gradient_at(p, c, cfg);
  for (std::size_t t = 0; t < g.values.size(); ++t) {
    if (p.d.mesh->region[t] == Region::G1) CHECK(std::abs(g.values[t] - 0.005) <= 1e-10);
  }
}

TEST_CASE("gradient agrees with central differences of the functional") {
  Problem p = coarse_problem();
  const CoefficientField ref = CoefficientField::uniform(p.d.mesh, 1.5, 2.5);
  CoefficientField c = ref;
  std::mt19937_64 rng(11);
  for (std::size_t t = 0; t < c.values.size(); ++t) {
    if (p.d.mesh->region[t] == Region::G1) c.values[t] = 1.6 + 0.3 * std::abs(testing::random_vector(1, rng)[0]);
  }
  TikhonovConfig cfg{0.01, 0.01, ref, p.delta, p.tg.T};
  const GradientField g = gradient_at(p, c, cfg);
  CHECK(norm_g1(g) > 0.0);
  const double eps = 1e-3;
  double worst = 0.0;
  for (int dir = 0; dir < 3; ++dir) {
    std::vector<double> dc = testing::random_vector(c.values.size(), rng);
    for (std::size_t t = 0; t < dc.size(); ++t) {
      if (p.d.mesh->region[t] != Region::G1) dc[t] = 0.0;
    }
    CoefficientField cp = c, cm = c;
    for (std::size_t t = 0; t < dc.size(); ++t) {
      cp.values[t] += eps * dc[t];
      cm.values[t] -= eps * dc[t];
    }
    const double fd = (functional_at(p, cp, cfg) - functional_at(p, cm, cfg)) / (2.0 * eps);
    const double ad = inner_g1(*p.d.mesh, g.values, dc);
    worst = std::max(worst, std::abs(fd - ad) / std::abs(fd));
  }
  CHECK(worst <= 1e-2);
  MESSAGE("worst relative gradient error " << worst);
}

TEST_CASE("gradient of a symmetric problem is symmetric") {
  Problem p = coarse_problem();
  const CoefficientField ref = CoefficientField::uniform(p.d.mesh, 1.5, 2.5);
  CoefficientField c = ref;
  const TriMesh& m = *p.d.mesh;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    if (m.region[t] == Region::G1) c.values[t] = 1.5 + 0.5 * std::abs(m.centroid(t).x) + m.centroid(t).y;
  }
  TikhonovConfig cfg{0.01, 0.01, ref, p.delta, p.tg.T};
  const GradientField g = gradient_at(p, c, cfg);
  double worst = 0.0, peak = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const Vec2 q = m.centroid(t);
    for (std::size_t s = 0; s < m.num_triangles(); ++s) {
      const Vec2 r = m.centroid(s);
      if (std::abs(r.x + q.x) < 1e-12 && std::abs(r.y - q.y) < 1e-12) {
        worst = std::max(worst, std::abs(g.values[t] - g.values[s]));
      }
    }
    peak = std::max(peak, std::abs(g.values[t]));
    if (m.region[t] != Region::G1) CHECK(g.values[t] == 0.0);
  }
  CHECK(peak > 0.0);
  CHECK(worst <= 1e-9 * std::max(1.0, peak));
}
