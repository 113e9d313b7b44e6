#pragma once

#include <memory>
#include <random>
#include <vector>

#include "acoustica/hybrid.hpp"
#include "acoustica/mesh.hpp"

namespace testing {

/// Coarse layout used by the adjoint checks: h = 0.1.
inline acoustica::GeometryConfig coarse_geometry() {
  acoustica::GeometryConfig g;
  g.d = {-1.1, 1.1, -0.6, 0.6};
  g.dfem = {-1.0, 1.0, -0.5, 0.5};
  g.g1 = {-0.6, 0.6, -0.3, 0.3};
  g.g0 = {-0.2, 0.2, -0.1, 0.1};
  g.h = 0.1;
  return g;
}

/// h = 0.04 variant of the standard layout.
inline acoustica::GeometryConfig medium_geometry() {
  acoustica::GeometryConfig g;
  g.d = {-1.12, 1.12, -0.64, 0.64};
  g.dfem = {-1.0, 1.0, -0.52, 0.52};
  g.g1 = {-0.6, 0.6, -0.32, 0.32};
  g.g0 = {-0.4, 0.4, -0.12, 0.12};
  g.h = 0.04;
  return g;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

/// Union node index of the mirror image of every node.
inline std::vector<int> mirror_map(const acoustica::HybridSystem& sys) {
  std::vector<int> out(sys.num_nodes(), -1);
  const auto& nodes = sys.nodes();
  // Nodes are sorted by (x2, x1), so each row is symmetric about its centre.
  std::size_t a = 0;
  while (a < nodes.size()) {
    std::size_t b = a;
    while (b < nodes.size() && nodes[b].x.y == nodes[a].x.y) ++b;
    for (std::size_t k = a; k < b; ++k) out[k] = static_cast<int>(a + (b - 1 - k));
    a = b;
  }
  return out;
}

}  // namespace testing
