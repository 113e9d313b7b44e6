#include "acoustica/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "acoustica/errors.hpp"

namespace acoustica {

HybridSystem::HybridSystem(std::shared_ptr<const TriMesh> mesh, std::shared_ptr<const FdGrid> grid, CoefficientField c,
                           bool obstacle)
    : mesh_(std::move(mesh)), grid_(std::move(grid)), c_(std::move(c)), obstacle_(obstacle) {
  if (!mesh_ || !grid_) throw ShapeError("HybridSystem needs a mesh and a grid");
  if (c_.mesh != mesh_ || c_.values.size() != mesh_->num_triangles()) {
    throw ShapeError("coefficient does not belong to the mesh");
  }
  const TriMesh& m = *mesh_;
  const FdGrid& g = *grid_;
  const double h = g.h;

  std::map<std::pair<double, double>, int> vertex_at;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) vertex_at.emplace(std::pair{m.vertices[v].x, m.vertices[v].y}, v);
  auto vertex_of = [&](int flat) {
    const Vec2 p = g.coord(flat);
    auto it = vertex_at.find({p.x, p.y});
    if (it == vertex_at.end()) {
      std::ostringstream os;
      os << "interface node (" << p.x << ", " << p.y << ") has no matching mesh vertex";
      throw DiscretizationError(os.str());
    }
    return it->second;
  };
  for (int f : g.interface_nodes_outer) outer_pairs_.emplace_back(f, vertex_of(f));
  for (int f : g.interface_nodes_inner) inner_pairs_.emplace_back(f, vertex_of(f));

  std::vector<char> fe_on_interface(m.num_vertices(), 0);
  for (const auto& [f, v] : outer_pairs_) fe_on_interface[v] = 1;
  std::vector<int> fe_inner_fd(m.num_vertices(), -1);
  for (const auto& [f, v] : inner_pairs_) fe_inner_fd[v] = f;

  // The FD stencil on ∂D_FEM coincides with the FE operator only if the
  // elements touching the interface are the structured half-squares with c̃ = 1.
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    if (!fe_on_interface[tri[0]] && !fe_on_interface[tri[1]] && !fe_on_interface[tri[2]]) continue;
    if (std::abs(m.area(t) - 0.5 * h * h) > 1e-9 * h * h || c_.values[t] != 1.0) {
      throw DiscretizationError("elements adjacent to the FE/FD interface must be unrefined with c = 1");
    }
  }

  // --- FE subdomain ---
  fe_mass_.assign(m.num_vertices(), 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * m.num_triangles());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    if (obstacle_ && m.region[t] == Region::G0) continue;
    const auto& tri = m.triangles[t];
    const Vec2 p0 = m.vertices[tri[0]], p1 = m.vertices[tri[1]], p2 = m.vertices[tri[2]];
    const double area = m.area(t);
    const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double cc[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    for (int i = 0; i < 3; ++i) {
      fe_mass_[tri[i]] += c_.values[t] * area / 3.0;
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], (b[i] * b[j] + cc[i] * cc[j]) / (4.0 * area));
    }
  }
  fe_stiffness_.resize(static_cast<Eigen::Index>(m.num_vertices()), static_cast<Eigen::Index>(m.num_vertices()));
  fe_stiffness_.setFromTriplets(trip.begin(), trip.end());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (!fe_on_interface[v] && fe_mass_[v] > 0.0) fe_owned_.push_back(static_cast<int>(v));
  }

  // --- FD subdomain ---
  const std::size_t nfd = g.num_nodes();
  fd_mass_.assign(nfd, 0.0);
  fd_top_.assign(nfd, 0.0);
  fd_bottom_.assign(nfd, 0.0);
  for (int j = g.j_min; j <= g.j_max; ++j) {
    for (int i = g.i_min; i <= g.i_max; ++i) {
      if (!g.fd_owned(i, j)) continue;
      const int f = g.flat(i, j);
      const bool side = i == g.i_min || i == g.i_max;
      const bool cap = j == g.j_min || j == g.j_max;
      fd_mass_[f] = (side ? 0.5 : 1.0) * (cap ? 0.5 : 1.0) * h * h;
      const double edge = (side ? 0.5 : 1.0) * h;
      if (j == g.j_max) fd_top_[f] = edge;
      if (j == g.j_min) fd_bottom_[f] = edge;
      fd_owned_.push_back(f);
      std::array<int, 4> nb{-1, -1, -1, -1};
      std::array<double, 4> w{0, 0, 0, 0};
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int ii = i + di[k], jj = j + dj[k];
        if (ii < g.i_min || ii > g.i_max || jj < g.j_min || jj > g.j_max) continue;
        nb[k] = g.flat(ii, jj);
        // Edges along ∂D belong to a single cell.
        const bool boundary_edge = dj[k] == 0 ? cap : side;
        w[k] = boundary_edge ? 0.5 : 1.0;
      }
      fd_nb_.push_back(nb);
      fd_nb_w_.push_back(w);
    }
  }

  // --- union node set ---
  std::vector<UnionNode> nodes;
  for (int f : fd_owned_) {
    const int i = g.i_of(f), j = g.j_of(f);
    UnionNode n{g.coord(f), f, -1, Owner::Fd};
    if (g.on_fem_boundary(i, j)) n.fe = vertex_of(f);
    nodes.push_back(n);
  }
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (fe_on_interface[v]) continue;
    nodes.push_back({m.vertices[v], fe_inner_fd[v], static_cast<int>(v), Owner::Fe});
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const UnionNode& a, const UnionNode& b) { return a.x.y < b.x.y || (a.x.y == b.x.y && a.x.x < b.x.x); });
  nodes_ = std::move(nodes);

  mass_.resize(nodes_.size());
  fe_to_union_.assign(m.num_vertices(), -1);
  fd_to_union_.assign(nfd, -1);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    mass_[k] = n.owner == Owner::Fd ? fd_mass_[n.fd] : fe_mass_[n.fe];
    if (n.fe >= 0) fe_to_union_[n.fe] = static_cast<int>(k);
    if (n.fd >= 0) fd_to_union_[n.fd] = static_cast<int>(k);
  }

  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    if (n.owner != Owner::Fd) continue;
    const int j = g.j_of(n.fd);
    if (j == g.j_min || j == g.j_max) {
      obs_nodes_.push_back(static_cast<int>(k));
      obs_weights_.push_back(j == g.j_max ? fd_top_[n.fd] : fd_bottom_[n.fd]);
      obs_tags_.push_back(j == g.j_max ? BoundaryTag::S1Top : BoundaryTag::S2Bottom);
    }
  }
  h_min_ = std::min(h, m.min_edge_length());
}

double HybridSystem::c_min() const {
  double cmin = INFINITY;
  for (std::size_t t = 0; t < c_.values.size(); ++t) {
    if (obstacle_ && mesh_->region[t] == Region::G0) continue;
    cmin = std::min(cmin, c_.values[t]);
  }
  return std::min(cmin, 1.0);
}

SubdomainState HybridSystem::make_state() const {
  return {std::vector<double>(grid_->num_nodes(), 0.0), std::vector<double>(mesh_->num_vertices(), 0.0),
          std::vector<double>(mesh_->num_vertices(), 0.0)};
}

void HybridSystem::scatter(std::span<const double> u, SubdomainState& s) const {
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k].fd >= 0) s.fd[nodes_[k].fd] = u[k];
    if (nodes_[k].fe >= 0) s.fe[nodes_[k].fe] = u[k];
  }
}

void HybridSystem::gather(const SubdomainState& s, std::span<double> u) const {
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    u[k] = n.owner == Owner::Fd ? s.fd[n.fd] : s.fe[n.fe];
  }
}

void HybridSystem::exchange(SubdomainState& s) const {
  for (const auto& [f, v] : outer_pairs_) s.fe[v] = s.fd[f];
  for (const auto& [f, v] : inner_pairs_) s.fd[f] = s.fe[v];
}

bool HybridSystem::step(const StepCoefficients& k, double tau, SubdomainState& cur, const SubdomainState& prev,
                        SubdomainState& next) const {
  const double tau2 = tau * tau;
  double checksum = 0.0;

  for (std::size_t q = 0; q < fd_owned_.size(); ++q) {
    const int f = fd_owned_[q];
    const double u = cur.fd[f];
    double ku = 0.0;
    for (int e = 0; e < 4; ++e) {
      if (fd_nb_[q][e] >= 0) ku += fd_nb_w_[q][e] * (u - cur.fd[fd_nb_[q][e]]);
    }
    const double m = fd_mass_[f];
    const double b_next = (k.damp_next_top ? fd_top_[f] : 0.0) + (k.damp_next_bottom ? fd_bottom_[f] : 0.0);
    const double b_prev = (k.damp_prev_top ? fd_top_[f] : 0.0) + (k.damp_prev_bottom ? fd_bottom_[f] : 0.0);
    const double b_cur = k.cur_top * fd_top_[f] + k.cur_bottom * fd_bottom_[f];
    double rhs = (2.0 * m - 0.5 * tau * b_cur) * u - tau2 * ku;
    if (k.prev_factor != 0.0) rhs -= k.prev_factor * (m - 0.5 * tau * b_prev) * prev.fd[f];
    if (!k.fd_source.empty()) rhs += tau2 * k.fd_source[f];
    const double val = rhs / (k.mass_factor * m + 0.5 * tau * b_next);
    next.fd[f] = val;
    checksum += val;
  }

  Eigen::Map<const Eigen::VectorXd> ucur(cur.fe.data(), static_cast<Eigen::Index>(cur.fe.size()));
  Eigen::Map<Eigen::VectorXd> ku(cur.fe_work.data(), static_cast<Eigen::Index>(cur.fe_work.size()));
  ku.noalias() = fe_stiffness_ * ucur;
  for (int v : fe_owned_) {
    const double m = fe_mass_[v];
    double rhs = 2.0 * m * cur.fe[v] - tau2 * ku[v];
    if (k.prev_factor != 0.0) rhs -= k.prev_factor * m * prev.fe[v];
    const double val = rhs / (k.mass_factor * m);
    next.fe[v] = val;
    checksum += val;
  }
  exchange(next);
  return std::isfinite(checksum);
}

void HybridSystem::apply_stiffness(std::span<const double> u, std::span<double> out) const {
  SubdomainState s = make_state();
  scatter(u, s);
  SubdomainState r = make_state();
  for (std::size_t q = 0; q < fd_owned_.size(); ++q) {
    const int f = fd_owned_[q];
    double ku = 0.0;
    for (int e = 0; e < 4; ++e) {
      if (fd_nb_[q][e] >= 0) ku += fd_nb_w_[q][e] * (s.fd[f] - s.fd[fd_nb_[q][e]]);
    }
    r.fd[f] = ku;
  }
  Eigen::Map<const Eigen::VectorXd> us(s.fe.data(), static_cast<Eigen::Index>(s.fe.size()));
  Eigen::VectorXd ku = fe_stiffness_ * us;
  for (int v : fe_owned_) r.fe[v] = ku[v];
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    out[k] = n.owner == Owner::Fd ? r.fd[n.fd] : r.fe[n.fe];
  }
}

}  // namespace acoustica
