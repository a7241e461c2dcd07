#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "core/quasimode.hpp"

namespace pql {

/// Spatial discretisation shared by the heat solvers: node coordinates, trapezoid
/// quadrature weights, Dirichlet boundary flags and the weighted stiffness
/// matrix S = W (-Delta_h), which is symmetric on the interior block.
class SpaceGrid {
 public:
  enum class Kind { Rectangle, PolarDisk, PolarSector };

  static SpaceGrid rectangle(double lx, double ly, std::size_t nx, std::size_t ny);
  /// Disk of radius `radius`; `n_r` rings besides the origin, `n_phi` nodes per ring.
  static SpaceGrid polar_disk(double radius, std::size_t n_r, std::size_t n_phi);
  /// Annular sector r in [r_in, r_out], phi in [phi_lo, phi_hi] (disk-centred polar coordinates).
  static SpaceGrid polar_sector(double r_in, double r_out, double phi_lo, double phi_hi, std::size_t n_r,
                                std::size_t n_phi);

  Kind kind() const { return kind_; }
  std::size_t size() const { return nodes_.size(); }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  bool is_boundary(std::size_t i) const { return boundary_[i]; }
  /// Side id of a boundary node. Rectangle: 0 (y=0), 1 (x=Lx), 2 (y=Ly), 3 (x=0).
  /// Polar: 0 outer arc, 1 inner arc, 2 phi = phi_lo, 3 phi = phi_hi. Interior nodes: -1.
  int side(std::size_t i) const { return side_[i]; }
  /// Arc parameter along the side: x or y for rectangles, the angle phi for arcs, the radius for radial edges.
  double boundary_param(std::size_t i) const { return param_[i]; }

  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& boundary_nodes() const { return boundary_list_; }
  /// Position of a node inside interior() or -1.
  long interior_index(std::size_t i) const { return interior_pos_[i]; }
  /// Rows: interior nodes; columns: all nodes.
  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
  /// Weights of the interior rows of the symmetric system.
  const Eigen::VectorXd& interior_mass() const { return mass_; }

  /// Outward normal derivative stencil (one-sided, second order) at a boundary node:
  /// coefficients for the node itself and its two inward neighbours.
  struct NormalStencil {
    std::size_t nodes[3];
    double coeffs[3];
  };
  bool has_normal_stencil(std::size_t i) const { return stencil_pos_[i] >= 0; }
  const NormalStencil& normal_stencil(std::size_t i) const;

  /// Shape information used by serialisation: logical dimensions and spacings.
  std::size_t dim1() const { return dim1_; }
  std::size_t dim2() const { return dim2_; }
  double spacing1() const { return h1_; }
  double spacing2() const { return h2_; }

 private:
  void finalize(const std::vector<Eigen::Triplet<double>>& triplets);
  void add_stencil(std::size_t b, std::size_t n1, std::size_t n2, double h);

  Kind kind_ = Kind::Rectangle;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  std::vector<bool> boundary_;
  std::vector<int> side_;
  std::vector<double> param_;
  std::vector<std::size_t> interior_, boundary_list_;
  std::vector<long> interior_pos_;
  Eigen::SparseMatrix<double> stiffness_;
  Eigen::VectorXd mass_;
  std::vector<NormalStencil> stencils_;
  std::vector<long> stencil_pos_;
  std::size_t dim1_ = 0, dim2_ = 0;
  double h1_ = 0.0, h2_ = 0.0;
};

/// Piece of the boundary: one side and a closed parameter interval on it.
struct BoundaryArc {
  int side = 0;
  double lo = 0.0;
  double hi = 0.0;
  bool contains(const SpaceGrid& g, std::size_t node) const;
};

}  // namespace pql
