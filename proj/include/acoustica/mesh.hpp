#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "acoustica/geometry.hpp"

namespace acoustica {

struct BoundaryEdge {
  int a;
  int b;
  BoundaryTag tag;
};

/// Conforming triangle mesh of D_FEM (G0 included, tagged).
///
/// Vertices are stored in lexicographic (x2, x1) order and triangles are
/// counter-clockwise. A refined mesh keeps a handle on the mesh it was
/// refined from together with `parent`, so that coefficients can be carried
/// across levels.
struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> region;
  std::vector<BoundaryEdge> boundary_edges;
  int level = 0;
  std::vector<int> parent;
  std::shared_ptr<const TriMesh> parent_mesh;
  std::optional<DomainGeometry> geometry;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  double area(std::size_t t) const;
  double total_area() const;
  double region_area(Region r) const;
  std::size_t count(Region r) const;
  double min_angle_deg(std::size_t t) const;
  double min_edge_length() const;
  Vec2 centroid(std::size_t t) const;

  /// neighbors[t][k] is the triangle across edge (v_k, v_{k+1}) or -1.
  std::vector<std::array<int, 3>> edge_neighbors() const;
};

/// Uniform square grid covering D. Node (i, j) sits at (i h, j h); the FE
/// region occupies the closed index rectangle [fem_i0, fem_i1] x [fem_j0, fem_j1].
struct FdGrid {
  double h = 0.0;
  int i_min = 0, i_max = 0, j_min = 0, j_max = 0;
  int fem_i0 = 0, fem_i1 = 0, fem_j0 = 0, fem_j1 = 0;
  /// Ring of nodes on ∂D_FEM; FD computes them, FE reads them.
  std::vector<int> interface_nodes_outer;
  /// Ring of nodes one spacing inside ∂D_FEM; FE computes them, FD reads them.
  std::vector<int> interface_nodes_inner;

  int nx() const { return i_max - i_min; }
  int ny() const { return j_max - j_min; }
  std::size_t num_nodes() const { return static_cast<std::size_t>(nx() + 1) * static_cast<std::size_t>(ny() + 1); }
  int flat(int i, int j) const { return (j - j_min) * (nx() + 1) + (i - i_min); }
  int i_of(int flat_index) const { return flat_index % (nx() + 1) + i_min; }
  int j_of(int flat_index) const { return flat_index / (nx() + 1) + j_min; }
  Vec2 coord(int i, int j) const { return {i * h, j * h}; }
  Vec2 coord(int flat_index) const { return coord(i_of(flat_index), j_of(flat_index)); }
  bool inside_fem_open(int i, int j) const { return i > fem_i0 && i < fem_i1 && j > fem_j0 && j < fem_j1; }
  bool on_fem_boundary(int i, int j) const;
  bool on_inner_layer(int i, int j) const;
  /// FD-owned nodes are all grid nodes outside the open FE rectangle.
  bool fd_owned(int i, int j) const { return !inside_fem_open(i, j); }
};

struct GeometryConfig {
  Rect d{-1.1, 1.1, -0.62, 0.62};
  Rect dfem{-1.0, 1.0, -0.52, 0.52};
  Rect g1{-0.6, 0.6, -0.32, 0.32};
  Rect g0{-0.4, 0.4, -0.12, 0.12};
  double h = 0.02;
};

struct Discretization {
  DomainGeometry geometry;
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const FdGrid> grid;
};

/// Builds the level-0 structured triangulation of D_FEM and the FD grid of D.
/// Every rectangle coordinate must be an integer multiple of h.
Discretization build_geometry(const GeometryConfig& cfg);

/// Structured triangulation of a symmetric lattice rectangle, all triangles tagged G2.
std::shared_ptr<const TriMesh> triangulate_rectangle(const Rect& r, double h);

/// Red-refines every triangle of `region` and closes the mesh by longest-edge
/// bisection outside it. Throws RefinementError if closure would touch the
/// FE/FD interface layer, leave a hanging node, or break the angle bound.
std::shared_ptr<const TriMesh> refine_symmetric(const std::shared_ptr<const TriMesh>& mesh, Region region = Region::G1,
                                                double min_angle_deg = 20.0);

/// Builds a mesh from raw data: sorts vertices, orients triangles, tags boundary edges.
std::shared_ptr<const TriMesh> make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                                         std::vector<Region> region, std::optional<DomainGeometry> geometry = std::nullopt);

/// No hanging nodes: every edge is shared by two triangles or lies on the outer boundary.
bool is_conforming(const TriMesh& mesh);

/// Vertex set and connectivity invariant under x1 -> -x1 (within `tol`).
bool is_mirror_symmetric(const TriMesh& mesh, double tol = 1e-12);

}  // namespace acoustica
