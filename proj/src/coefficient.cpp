#include "acoustica/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "acoustica/errors.hpp"

namespace acoustica {

CoefficientField CoefficientField::uniform(std::shared_ptr<const TriMesh> mesh, double g1_value) {
  return uniform(std::move(mesh), g1_value, std::max(1.0, g1_value));
}

CoefficientField CoefficientField::uniform(std::shared_ptr<const TriMesh> mesh, double g1_value, double upper) {
  if (g1_value < 1.0) throw ParameterError("coefficient must be >= 1");
  if (upper < 1.0) throw ParameterError("coefficient upper bound must be >= 1");
  CoefficientField f;
  f.values.resize(mesh->num_triangles(), 1.0);
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    if (mesh->region[t] == Region::G1) f.values[t] = g1_value;
  }
  f.mesh = std::move(mesh);
  f.upper = upper;
  return f;
}

double CoefficientField::min() const { return *std::min_element(values.begin(), values.end()); }
double CoefficientField::max() const { return *std::max_element(values.begin(), values.end()); }

double CoefficientField::max_over(Region r) const {
  double m = -1.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (mesh->region[t] == r) m = std::max(m, values[t]);
  }
  return m;
}

void CoefficientField::clamp() {
  for (std::size_t t = 0; t < values.size(); ++t) {
    values[t] = mesh->region[t] == Region::G1 ? std::clamp(values[t], lower, upper) : 1.0;
  }
}

bool CoefficientField::admissible(double tol) const {
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (mesh->region[t] == Region::G1) {
      if (values[t] < lower - tol || values[t] > upper + tol) return false;
    } else if (values[t] != 1.0) {
      return false;
    }
  }
  return true;
}

double mirror_asymmetry(const CoefficientField& c) {
  const TriMesh& mesh = *c.mesh;
  // Centroids are rounded onto a fine lattice so mirrored positions compare equal.
  const auto key = [](double x, double y) { return std::make_pair(std::llround(y * 1e9), std::llround(x * 1e9)); };
  std::map<std::pair<long long, long long>, std::size_t> index;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 g = mesh.centroid(t);
    index.emplace(key(g.x, g.y), t);
  }
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 g = mesh.centroid(t);
    const auto it = index.find(key(-g.x, g.y));
    if (it == index.end()) throw ShapeError("mesh is not mirror symmetric");
    worst = std::max(worst, std::abs(c.values[t] - c.values[it->second]));
    scale = std::max(scale, std::abs(c.values[t]));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

CoefficientField interpolate_coefficient(const CoefficientField& field, std::shared_ptr<const TriMesh> fine) {
  if (!fine || !field.mesh) throw LineageError("interpolate_coefficient: missing mesh");
  if (fine->parent_mesh != field.mesh) {
    throw LineageError("fine mesh was not refined from the mesh carrying the coefficient");
  }
  if (fine->parent.size() != fine->num_triangles()) throw LineageError("fine mesh has no parent map");
  if (field.values.size() != field.mesh->num_triangles()) throw ShapeError("coefficient size does not match its mesh");

  const TriMesh& coarse = *field.mesh;
  const auto neighbors = coarse.edge_neighbors();

  // Group children by parent to recognise red refinements (4 children).
  std::vector<int> child_count(coarse.num_triangles(), 0);
  for (int p : fine->parent) {
    if (p < 0 || static_cast<std::size_t>(p) >= coarse.num_triangles()) {
      throw LineageError("fine triangle has no valid parent");
    }
    ++child_count[p];
  }

  CoefficientField out;
  out.mesh = fine;
  out.lower = field.lower;
  out.upper = field.upper;
  out.values.resize(fine->num_triangles());
  for (std::size_t t = 0; t < fine->num_triangles(); ++t) {
    const int p = fine->parent[t];
    const double pv = field.values[p];
    const bool red = coarse.region[p] == Region::G1 && child_count[p] == 4;
    if (!red) {
      out.values[t] = pv;
      continue;
    }
    const auto& pv_idx = coarse.triangles[p];
    int corner = -1;
    for (int k = 0; k < 3; ++k) {
      const Vec2 cv = coarse.vertices[pv_idx[k]];
      for (int q : fine->triangles[t]) {
        if (fine->vertices[q] == cv) corner = k;
      }
    }
    if (corner < 0) {
      out.values[t] = pv;
      continue;
    }
    // Parent edges through the corner: (corner, corner+1) and (corner-1, corner).
    double sum = pv;
    int n = 1;
    for (int e : {corner, (corner + 2) % 3}) {
      const int nb = neighbors[p][e];
      if (nb >= 0 && coarse.region[nb] == Region::G1) {
        sum += field.values[nb];
        ++n;
      }
    }
    out.values[t] = sum / n;
  }
  out.clamp();
  return out;
}

}  // namespace acoustica
