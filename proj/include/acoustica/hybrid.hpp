#pragma once

#include <Eigen/SparseCore>
#include <memory>
#include <span>
#include <vector>

#include "acoustica/coefficient.hpp"
#include "acoustica/mesh.hpp"

namespace acoustica {

enum class Owner : std::uint8_t { Fd, Fe };

/// A node of the union FE ∪ FD node set. Interface nodes appear once and
/// carry both a grid index and a mesh vertex index.
struct UnionNode {
  Vec2 x;
  int fd = -1;
  int fe = -1;
  Owner owner = Owner::Fd;
};

/// Solution storage split by subdomain: `fd` is indexed by grid flat index,
/// `fe` by mesh vertex.
struct SubdomainState {
  std::vector<double> fd;
  std::vector<double> fe;
  /// Workspace for the FE stiffness product.
  std::vector<double> fe_work;
};

/// Coefficients of one explicit step
///   (a m + τ b_next / 2) u⁺ = (2 m - τ² K - τ b_cur / 2) u - p (m - τ b_prev / 2) u⁻ + τ² s
/// where b_* are absorbing boundary masses and s is a boundary load on the grid.
/// b_cur = cur_top W_top + cur_bottom W_bottom corrects for damping that
/// changes between the two half steps.
struct StepCoefficients {
  double mass_factor = 1.0;
  double prev_factor = 1.0;
  bool damp_next_top = false;
  bool damp_next_bottom = true;
  bool damp_prev_top = false;
  bool damp_prev_bottom = true;
  double cur_top = 0.0;
  double cur_bottom = 0.0;
  /// Grid-indexed load, or empty for none.
  std::span<const double> fd_source;
};

/// The FE/FD domain-decomposition operator for one mesh, grid and coefficient.
///
/// The FD part is the 5-point scheme on D_FDM with lumped half cells on ∂D.
/// The FE part is P1 with c̃-weighted lumped mass on D_FEM (G0 omitted when it
/// is an obstacle, which imposes ∂_n u = 0 on ∂G0). The two exchange values
/// through the outer (∂D_FEM) and inner (one spacing inside) node rings.
class HybridSystem {
 public:
  HybridSystem(std::shared_ptr<const TriMesh> mesh, std::shared_ptr<const FdGrid> grid, CoefficientField c,
               bool obstacle = true);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  const FdGrid& grid() const { return *grid_; }
  const std::shared_ptr<const FdGrid>& grid_ptr() const { return grid_; }
  const CoefficientField& coefficient() const { return c_; }
  bool obstacle() const { return obstacle_; }

  std::size_t num_nodes() const { return nodes_.size(); }
  const std::vector<UnionNode>& nodes() const { return nodes_; }
  std::span<const double> mass() const { return mass_; }
  bool active(std::size_t node) const { return mass_[node] > 0.0; }
  /// Union index of every mesh vertex.
  const std::vector<int>& fe_to_union() const { return fe_to_union_; }
  /// Union index of every grid node, -1 inside the open FE rectangle.
  const std::vector<int>& fd_to_union() const { return fd_to_union_; }

  /// Top and bottom boundary nodes of D in (x2, x1) order, with their lumped boundary lengths.
  const std::vector<int>& observation_nodes() const { return obs_nodes_; }
  const std::vector<double>& observation_weights() const { return obs_weights_; }
  const std::vector<BoundaryTag>& observation_tags() const { return obs_tags_; }
  std::span<const double> fd_top_weight() const { return fd_top_; }
  std::span<const double> fd_bottom_weight() const { return fd_bottom_; }

  double h_min() const { return h_min_; }
  double c_min() const;

  SubdomainState make_state() const;
  void scatter(std::span<const double> u, SubdomainState& s) const;
  void gather(const SubdomainState& s, std::span<double> u) const;
  /// Copies ∂D_FEM values FD -> FE and inner-ring values FE -> FD.
  void exchange(SubdomainState& s) const;
  /// One explicit step in each subdomain followed by the exchange. Returns
  /// false if a non-finite value was produced.
  bool step(const StepCoefficients& k, double tau, SubdomainState& cur, const SubdomainState& prev,
            SubdomainState& next) const;

  /// Global stiffness action on a union vector (zero rows at inactive nodes).
  void apply_stiffness(std::span<const double> u, std::span<double> out) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  std::shared_ptr<const FdGrid> grid_;
  CoefficientField c_;
  bool obstacle_;

  std::vector<UnionNode> nodes_;
  std::vector<double> mass_;
  std::vector<int> fe_to_union_;
  std::vector<int> fd_to_union_;

  // FD subdomain
  std::vector<int> fd_owned_;
  std::vector<double> fd_mass_;
  std::vector<std::array<int, 4>> fd_nb_;
  std::vector<std::array<double, 4>> fd_nb_w_;
  std::vector<double> fd_top_;
  std::vector<double> fd_bottom_;

  // FE subdomain
  std::vector<int> fe_owned_;
  std::vector<double> fe_mass_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> fe_stiffness_;

  std::vector<std::pair<int, int>> outer_pairs_;  // (grid flat, mesh vertex)
  std::vector<std::pair<int, int>> inner_pairs_;

  std::vector<int> obs_nodes_;
  std::vector<double> obs_weights_;
  std::vector<BoundaryTag> obs_tags_;
  double h_min_ = 0.0;
};

}  // namespace acoustica
