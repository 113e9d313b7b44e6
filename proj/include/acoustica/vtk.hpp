#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acoustica/hybrid.hpp"
#include "acoustica/mesh.hpp"

namespace acoustica {

/// A named scalar attached to points or cells.
struct VtkScalar {
  std::string name;
  std::span<const double> values;
};

/// Legacy ASCII unstructured grid of the triangle mesh with per-cell scalars.
/// Region is always written as an extra integer cell field.
void write_mesh_vtk(std::ostream& os, const TriMesh& mesh, const std::vector<VtkScalar>& cell_scalars,
                    std::string_view title = "mesh");
void write_mesh_vtk(const std::string& path, const TriMesh& mesh, const std::vector<VtkScalar>& cell_scalars,
                    std::string_view title = "mesh");

/// Nodal fields on the union FE ∪ FD node set: FE triangles plus FD grid squares.
void write_union_vtk(std::ostream& os, const HybridSystem& sys, const std::vector<VtkScalar>& point_scalars,
                     std::string_view title = "field");
void write_union_vtk(const std::string& path, const HybridSystem& sys, const std::vector<VtkScalar>& point_scalars,
                     std::string_view title = "field");

}  // namespace acoustica
