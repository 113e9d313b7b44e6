#include "acoustica/vtk.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "acoustica/errors.hpp"

namespace acoustica {

namespace {

void put_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

void write_header(std::ostream& os, std::string_view title, const std::vector<Vec2>& points) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << points.size() << " double\n";
  for (const Vec2& p : points) {
    put_number(os, p.x);
    os << ' ';
    put_number(os, p.y);
    os << " 0\n";
  }
}

void write_scalars(std::ostream& os, const std::vector<VtkScalar>& scalars, std::size_t n) {
  for (const VtkScalar& s : scalars) {
    if (s.values.size() != n) throw ShapeError("vtk scalar '" + s.name + "' has the wrong length");
    os << "SCALARS " << s.name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : s.values) {
      put_number(os, v);
      os << '\n';
    }
  }
}

template <class Writer>
void to_file(const std::string& path, Writer&& w) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  w(os);
  if (!os) throw Error("write failed: " + path);
}

}  // namespace

void write_mesh_vtk(std::ostream& os, const TriMesh& mesh, const std::vector<VtkScalar>& cell_scalars,
                    std::string_view title) {
  write_header(os, title, mesh.vertices);
  const std::size_t nt = mesh.num_triangles();
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (std::size_t k = 0; k < nt; ++k) os << "5\n";
  os << "CELL_DATA " << nt << '\n';
  os << "SCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : mesh.region) os << static_cast<int>(r) << '\n';
  write_scalars(os, cell_scalars, nt);
}

void write_mesh_vtk(const std::string& path, const TriMesh& mesh, const std::vector<VtkScalar>& cell_scalars,
                    std::string_view title) {
  to_file(path, [&](std::ostream& os) { write_mesh_vtk(os, mesh, cell_scalars, title); });
}

void write_union_vtk(std::ostream& os, const HybridSystem& sys, const std::vector<VtkScalar>& point_scalars,
                     std::string_view title) {
  std::vector<Vec2> points;
  points.reserve(sys.num_nodes());
  for (const UnionNode& n : sys.nodes()) points.push_back(n.x);
  write_header(os, title, points);

  const TriMesh& mesh = sys.mesh();
  const FdGrid& grid = sys.grid();
  const auto& fe = sys.fe_to_union();
  const auto& fd = sys.fd_to_union();

  std::vector<std::array<int, 3>> tris;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (sys.obstacle() && mesh.region[t] == Region::G0) continue;
    const auto& v = mesh.triangles[t];
    tris.push_back({fe[v[0]], fe[v[1]], fe[v[2]]});
  }
  // Grid squares whose four corners are all FD nodes.
  std::vector<std::array<int, 4>> quads;
  for (int j = grid.j_min; j < grid.j_max; ++j) {
    for (int i = grid.i_min; i < grid.i_max; ++i) {
      const std::array<int, 4> q{fd[grid.flat(i, j)], fd[grid.flat(i + 1, j)], fd[grid.flat(i + 1, j + 1)],
                                 fd[grid.flat(i, j + 1)]};
      if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[3] < 0) continue;
      if (i >= grid.fem_i0 && i < grid.fem_i1 && j >= grid.fem_j0 && j < grid.fem_j1) continue;
      quads.push_back(q);
    }
  }
  const std::size_t nc = tris.size() + quads.size();
  os << "CELLS " << nc << ' ' << 4 * tris.size() + 5 * quads.size() << '\n';
  for (const auto& t : tris) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& q : quads) os << "4 " << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
  os << "CELL_TYPES " << nc << '\n';
  for (std::size_t k = 0; k < tris.size(); ++k) os << "5\n";
  for (std::size_t k = 0; k < quads.size(); ++k) os << "9\n";
  if (!point_scalars.empty()) {
    os << "POINT_DATA " << points.size() << '\n';
    write_scalars(os, point_scalars, points.size());
  }
}

void write_union_vtk(const std::string& path, const HybridSystem& sys, const std::vector<VtkScalar>& point_scalars,
                     std::string_view title) {
  to_file(path, [&](std::ostream& os) { write_union_vtk(os, sys, point_scalars, title); });
}

}  // namespace acoustica
