#include "acoustica/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "acoustica/errors.hpp"

namespace acoustica {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

double signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)); }

double dist2(Vec2 a, Vec2 b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); }

bool lex_yx(Vec2 a, Vec2 b) { return a.y < b.y || (a.y == b.y && a.x < b.x); }

/// Integer lattice index of a coordinate that must be a multiple of h.
int lattice_index(double x, double h, const char* what) {
  const double k = x / h;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 * std::max(1.0, std::abs(k))) {
    std::ostringstream os;
    os << what << " coordinate " << x << " is not a multiple of h = " << h;
    throw DiscretizationError(os.str());
  }
  return static_cast<int>(r);
}

bool on_rect_boundary(const Rect& r, Vec2 p) {
  return r.contains(p) && (p.x == r.x0 || p.x == r.x1 || p.y == r.y0 || p.y == r.y1);
}

struct Canonical {
  std::shared_ptr<TriMesh> mesh;
  /// new triangle index -> index in the input arrays
  std::vector<int> tri_origin;
};

Canonical canonicalize(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles, std::vector<Region> region,
                       std::optional<DomainGeometry> geometry) {
  const std::size_t nv = vertices.size();
  std::vector<int> vorder(nv);
  std::iota(vorder.begin(), vorder.end(), 0);
  std::sort(vorder.begin(), vorder.end(), [&](int a, int b) { return lex_yx(vertices[a], vertices[b]); });
  std::vector<int> vnew(nv);
  auto out = std::make_shared<TriMesh>();
  out->vertices.resize(nv);
  for (std::size_t k = 0; k < nv; ++k) {
    vnew[vorder[k]] = static_cast<int>(k);
    out->vertices[k] = vertices[vorder[k]];
  }

  for (auto& t : triangles) {
    for (int& v : t) v = vnew[v];
    if (signed_area(out->vertices[t[0]], out->vertices[t[1]], out->vertices[t[2]]) < 0.0) std::swap(t[1], t[2]);
    // Start each triangle at its lexicographically smallest vertex.
    const auto first = std::min_element(t.begin(), t.end());
    std::rotate(t.begin(), first, t.end());
  }

  std::vector<Vec2> cent(triangles.size());
  for (std::size_t k = 0; k < triangles.size(); ++k) {
    const auto& t = triangles[k];
    const Vec2 a = out->vertices[t[0]], b = out->vertices[t[1]], c = out->vertices[t[2]];
    cent[k] = {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
  }
  std::vector<int> torder(triangles.size());
  std::iota(torder.begin(), torder.end(), 0);
  std::sort(torder.begin(), torder.end(), [&](int a, int b) {
    if (lex_yx(cent[a], cent[b])) return true;
    if (lex_yx(cent[b], cent[a])) return false;
    return triangles[a] < triangles[b];
  });

  out->triangles.resize(triangles.size());
  out->region.resize(triangles.size());
  for (std::size_t k = 0; k < triangles.size(); ++k) {
    out->triangles[k] = triangles[torder[k]];
    out->region[k] = region[torder[k]];
  }
  out->geometry = std::move(geometry);

  // Boundary edges: outer edges plus the walls of G0.
  std::map<EdgeKey, std::pair<int, int>> owners;
  for (std::size_t k = 0; k < out->triangles.size(); ++k) {
    const auto& t = out->triangles[k];
    for (int e = 0; e < 3; ++e) {
      auto [it, inserted] = owners.try_emplace(edge_key(t[e], t[(e + 1) % 3]), static_cast<int>(k), -1);
      if (!inserted) it->second.second = static_cast<int>(k);
    }
  }
  for (const auto& [key, tris] : owners) {
    if (tris.second < 0) {
      out->boundary_edges.push_back({key.first, key.second, BoundaryTag::Interface});
    } else if ((out->region[tris.first] == Region::G0) != (out->region[tris.second] == Region::G0)) {
      out->boundary_edges.push_back({key.first, key.second, BoundaryTag::S4Inner});
    }
  }
  return {std::move(out), std::move(torder)};
}

}  // namespace

double TriMesh::area(std::size_t t) const {
  const auto& v = triangles[t];
  return std::abs(signed_area(vertices[v[0]], vertices[v[1]], vertices[v[2]]));
}

namespace {

// Neumaier summation; plain accumulation over 1e5+ cells loses ~1e-11.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

double TriMesh::total_area() const {
  CompensatedSum s;
  for (std::size_t t = 0; t < triangles.size(); ++t) s.add(area(t));
  return s.value();
}

double TriMesh::region_area(Region r) const {
  CompensatedSum s;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    if (region[t] == r) s.add(area(t));
  }
  return s.value();
}

std::size_t TriMesh::count(Region r) const { return static_cast<std::size_t>(std::count(region.begin(), region.end(), r)); }

double TriMesh::min_angle_deg(std::size_t t) const {
  const auto& v = triangles[t];
  double best = 180.0;
  for (int k = 0; k < 3; ++k) {
    const Vec2 p = vertices[v[k]], a = vertices[v[(k + 1) % 3]], b = vertices[v[(k + 2) % 3]];
    const double ux = a.x - p.x, uy = a.y - p.y, wx = b.x - p.x, wy = b.y - p.y;
    const double ang = std::atan2(std::abs(ux * wy - uy * wx), ux * wx + uy * wy);
    best = std::min(best, ang * 180.0 / M_PI);
  }
  return best;
}

double TriMesh::min_edge_length() const {
  double best = INFINITY;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) best = std::min(best, dist2(vertices[t[k]], vertices[t[(k + 1) % 3]]));
  }
  return std::sqrt(best);
}

Vec2 TriMesh::centroid(std::size_t t) const {
  const auto& v = triangles[t];
  return {(vertices[v[0]].x + vertices[v[1]].x + vertices[v[2]].x) / 3.0,
          (vertices[v[0]].y + vertices[v[1]].y + vertices[v[2]].y) / 3.0};
}

std::vector<std::array<int, 3>> TriMesh::edge_neighbors() const {
  std::vector<std::array<int, 3>> nb(triangles.size(), {-1, -1, -1});
  std::map<EdgeKey, std::pair<int, int>> first;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int e = 0; e < 3; ++e) {
      const EdgeKey key = edge_key(triangles[t][e], triangles[t][(e + 1) % 3]);
      auto it = first.find(key);
      if (it == first.end()) {
        first.emplace(key, std::pair{static_cast<int>(t), e});
      } else {
        nb[t][e] = it->second.first;
        nb[it->second.first][it->second.second] = static_cast<int>(t);
      }
    }
  }
  return nb;
}

bool FdGrid::on_fem_boundary(int i, int j) const {
  const bool in = i >= fem_i0 && i <= fem_i1 && j >= fem_j0 && j <= fem_j1;
  return in && (i == fem_i0 || i == fem_i1 || j == fem_j0 || j == fem_j1);
}

bool FdGrid::on_inner_layer(int i, int j) const {
  const bool in = i >= fem_i0 + 1 && i <= fem_i1 - 1 && j >= fem_j0 + 1 && j <= fem_j1 - 1;
  return in && (i == fem_i0 + 1 || i == fem_i1 - 1 || j == fem_j0 + 1 || j == fem_j1 - 1);
}

std::shared_ptr<const TriMesh> make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                                         std::vector<Region> region, std::optional<DomainGeometry> geometry) {
  if (region.size() != triangles.size()) throw ShapeError("make_mesh: one region tag per triangle required");
  auto c = canonicalize(std::move(vertices), std::move(triangles), std::move(region), std::move(geometry));
  return c.mesh;
}

namespace {

struct RawTriangulation {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// Splits every h-square of the index rectangle along a diagonal mirrored across x1 = 0.
RawTriangulation structured_triangles(int i0, int i1, int j0, int j1, double h) {
  RawTriangulation raw;
  const int ni = i1 - i0 + 1;
  auto vid = [&](int i, int j) { return (j - j0) * ni + (i - i0); };
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) raw.vertices.push_back({i * h, j * h});
  }
  for (int j = j0; j < j1; ++j) {
    for (int i = i0; i < i1; ++i) {
      const int bl = vid(i, j), br = vid(i + 1, j), tr = vid(i + 1, j + 1), tl = vid(i, j + 1);
      if (2 * i + 1 > 0) {
        raw.triangles.push_back({bl, br, tr});
        raw.triangles.push_back({bl, tr, tl});
      } else {
        raw.triangles.push_back({bl, br, tl});
        raw.triangles.push_back({br, tr, tl});
      }
    }
  }
  return raw;
}

}  // namespace

std::shared_ptr<const TriMesh> triangulate_rectangle(const Rect& r, double h) {
  if (!(h > 0.0)) throw DiscretizationError("mesh size h must be positive");
  if (!r.mirror_symmetric()) throw GeometryError("rectangle must be symmetric about x1 = 0");
  const int i0 = lattice_index(r.x0, h, "rectangle"), i1 = lattice_index(r.x1, h, "rectangle");
  const int j0 = lattice_index(r.y0, h, "rectangle"), j1 = lattice_index(r.y1, h, "rectangle");
  if (i1 <= i0 || j1 <= j0) throw GeometryError("empty rectangle");
  RawTriangulation raw = structured_triangles(i0, i1, j0, j1, h);
  std::vector<Region> region(raw.triangles.size(), Region::G2);
  return canonicalize(std::move(raw.vertices), std::move(raw.triangles), std::move(region), std::nullopt).mesh;
}

Discretization build_geometry(const GeometryConfig& cfg) {
  if (!(cfg.h > 0.0)) throw DiscretizationError("mesh size h must be positive");
  DomainGeometry geo = make_geometry(cfg.d, cfg.dfem, cfg.g1, cfg.g0);
  const double h = cfg.h;

  auto grid = std::make_shared<FdGrid>();
  grid->h = h;
  grid->i_min = lattice_index(cfg.d.x0, h, "D");
  grid->i_max = lattice_index(cfg.d.x1, h, "D");
  grid->j_min = lattice_index(cfg.d.y0, h, "D");
  grid->j_max = lattice_index(cfg.d.y1, h, "D");
  grid->fem_i0 = lattice_index(cfg.dfem.x0, h, "D_FEM");
  grid->fem_i1 = lattice_index(cfg.dfem.x1, h, "D_FEM");
  grid->fem_j0 = lattice_index(cfg.dfem.y0, h, "D_FEM");
  grid->fem_j1 = lattice_index(cfg.dfem.y1, h, "D_FEM");
  for (const Rect* r : {&cfg.g1, &cfg.g0}) {
    lattice_index(r->x0, h, "G0/G1");
    lattice_index(r->x1, h, "G0/G1");
    lattice_index(r->y0, h, "G0/G1");
    lattice_index(r->y1, h, "G0/G1");
  }
  if (grid->fem_i1 - grid->fem_i0 < 2 || grid->fem_j1 - grid->fem_j0 < 2) {
    throw DiscretizationError("D_FEM must span at least two cells in each direction");
  }
  for (int j = grid->j_min; j <= grid->j_max; ++j) {
    for (int i = grid->i_min; i <= grid->i_max; ++i) {
      if (grid->on_fem_boundary(i, j)) grid->interface_nodes_outer.push_back(grid->flat(i, j));
      if (grid->on_inner_layer(i, j)) grid->interface_nodes_inner.push_back(grid->flat(i, j));
    }
  }

  RawTriangulation raw = structured_triangles(grid->fem_i0, grid->fem_i1, grid->fem_j0, grid->fem_j1, h);
  auto& vertices = raw.vertices;
  auto& tris = raw.triangles;
  std::vector<Region> region(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Vec2 a = vertices[tris[t][0]], b = vertices[tris[t][1]], c = vertices[tris[t][2]];
    region[t] = geo.region_of({(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0});
  }
  auto mesh = canonicalize(std::move(vertices), std::move(tris), std::move(region), geo).mesh;
  return {std::move(geo), std::move(mesh), std::move(grid)};
}

bool is_conforming(const TriMesh& mesh) {
  std::map<EdgeKey, int> count;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) ++count[edge_key(t[e], t[(e + 1) % 3])];
  }
  // A hanging node shows up as a vertex lying in the interior of a boundary-count edge.
  std::vector<std::pair<Vec2, Vec2>> lone;
  for (const auto& [key, n] : count) {
    if (n > 2) return false;
    if (n == 1) lone.emplace_back(mesh.vertices[key.first], mesh.vertices[key.second]);
  }
  if (mesh.geometry) {
    for (const auto& [a, b] : lone) {
      if (!on_rect_boundary(mesh.geometry->dfem, a) || !on_rect_boundary(mesh.geometry->dfem, b)) return false;
      if (a.x != b.x && a.y != b.y) return false;
    }
    return true;
  }
  // Without a reference geometry, check that no outer-edge midpoint is a mesh vertex.
  std::set<std::pair<double, double>> verts;
  for (const auto& v : mesh.vertices) verts.emplace(v.x, v.y);
  for (const auto& [a, b] : lone) {
    if (verts.count({(a.x + b.x) * 0.5, (a.y + b.y) * 0.5})) return false;
  }
  return true;
}

bool is_mirror_symmetric(const TriMesh& mesh, double tol) {
  auto quant = [tol](double x) { return std::llround(x / tol); };
  std::map<std::pair<long long, long long>, int> index;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    index.emplace(std::pair{quant(mesh.vertices[v].x), quant(mesh.vertices[v].y)}, static_cast<int>(v));
  }
  std::vector<int> mirror(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    auto it = index.find({quant(-mesh.vertices[v].x), quant(mesh.vertices[v].y)});
    if (it == index.end()) return false;
    mirror[v] = it->second;
  }
  std::set<std::pair<std::array<int, 3>, Region>> tris;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    auto s = mesh.triangles[t];
    std::sort(s.begin(), s.end());
    tris.emplace(s, mesh.region[t]);
  }
  for (const auto& [tri, reg] : tris) {
    std::array<int, 3> m{mirror[tri[0]], mirror[tri[1]], mirror[tri[2]]};
    std::sort(m.begin(), m.end());
    if (!tris.count({m, reg})) return false;
  }
  return true;
}

std::shared_ptr<const TriMesh> refine_symmetric(const std::shared_ptr<const TriMesh>& mesh, Region region,
                                                double min_angle_deg) {
  if (!mesh) throw RefinementError("refine_symmetric: null mesh");
  if (region != Region::G1) throw RefinementError("symmetric refinement is only defined for the design region G1");

  std::vector<Vec2> vertices = mesh->vertices;
  std::map<EdgeKey, int> midpoint;
  auto split_edge = [&](int a, int b) {
    auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), -1);
    if (inserted) {
      const Vec2 pa = vertices[a], pb = vertices[b];
      it->second = static_cast<int>(vertices.size());
      vertices.push_back({(pa.x + pb.x) * 0.5, (pa.y + pb.y) * 0.5});
    }
    return std::pair{it->second, inserted};
  };
  auto is_split = [&](int a, int b) { return midpoint.count(edge_key(a, b)) > 0; };

  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    if (mesh->region[t] != region) continue;
    const auto& v = mesh->triangles[t];
    for (int e = 0; e < 3; ++e) split_edge(v[e], v[(e + 1) % 3]);
  }

  auto touches_interface = [&](const std::array<int, 3>& v) {
    if (!mesh->geometry) return false;
    for (int k : v) {
      if (on_rect_boundary(mesh->geometry->dfem, vertices[k])) return true;
    }
    return false;
  };

  struct Leaf {
    std::array<int, 3> v;
    Region region;
    int parent;
  };
  std::vector<Leaf> leaves;
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    if (mesh->region[t] != region) leaves.push_back({mesh->triangles[t], mesh->region[t], static_cast<int>(t)});
  }

  // Longest-edge closure: a leaf with a split edge is bisected across its
  // longest edge until no leaf has a hanging node.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      for (;;) {
        const auto v = leaves[i].v;
        if (!is_split(v[0], v[1]) && !is_split(v[1], v[2]) && !is_split(v[2], v[0])) break;
        if (touches_interface(v)) {
          throw RefinementError("closure refinement reached the FE/FD interface layer; widen G2");
        }
        std::array<double, 3> len{};
        for (int e = 0; e < 3; ++e) len[e] = dist2(vertices[v[e]], vertices[v[(e + 1) % 3]]);
        const int e = static_cast<int>(std::max_element(len.begin(), len.end()) - len.begin());
        for (int o = 0; o < 3; ++o) {
          if (o != e && len[o] > len[e] * (1.0 - 1e-12)) {
            throw RefinementError("longest edge is not unique; symmetric closure is ambiguous");
          }
        }
        const int a = v[e], b = v[(e + 1) % 3], c = v[(e + 2) % 3];
        const auto [m, created] = split_edge(a, b);
        changed = changed || created;
        leaves[i].v = {a, m, c};
        leaves.push_back({{m, b, c}, leaves[i].region, leaves[i].parent});
      }
    }
  }

  std::vector<std::array<int, 3>> tris;
  std::vector<Region> regions;
  std::vector<int> parents;
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    if (mesh->region[t] != region) continue;
    const auto& v = mesh->triangles[t];
    const int mab = midpoint.at(edge_key(v[0], v[1]));
    const int mbc = midpoint.at(edge_key(v[1], v[2]));
    const int mca = midpoint.at(edge_key(v[2], v[0]));
    for (const auto& child : {std::array{v[0], mab, mca}, std::array{mab, v[1], mbc}, std::array{mca, mbc, v[2]},
                              std::array{mab, mbc, mca}}) {
      tris.push_back(child);
      regions.push_back(region);
      parents.push_back(static_cast<int>(t));
    }
  }
  for (const auto& leaf : leaves) {
    tris.push_back(leaf.v);
    regions.push_back(leaf.region);
    parents.push_back(leaf.parent);
  }

  auto c = canonicalize(std::move(vertices), std::move(tris), std::move(regions), mesh->geometry);
  auto& out = *c.mesh;
  out.level = mesh->level + 1;
  out.parent_mesh = mesh;
  out.parent.resize(out.num_triangles());
  for (std::size_t t = 0; t < out.num_triangles(); ++t) out.parent[t] = parents[c.tri_origin[t]];

  for (std::size_t t = 0; t < out.num_triangles(); ++t) {
    if (out.min_angle_deg(t) < min_angle_deg) {
      std::ostringstream os;
      os << "refined triangle " << t << " has minimal angle " << out.min_angle_deg(t) << " deg < " << min_angle_deg;
      throw RefinementError(os.str());
    }
  }
  if (!is_conforming(out)) throw RefinementError("refinement left a hanging node");
  return c.mesh;
}

}  // namespace acoustica
