#pragma once

#include <array>
#include <functional>
#include <ostream>
#include <vector>

#include "core/numerics.hpp"

namespace pql {

/// Dirichlet mode sin(j pi x / Lx) sin(k pi y / Ly).
struct ModeIndex {
  int j = 1;
  int k = 1;
  bool operator==(const ModeIndex&) const = default;
};

struct EigenGroup {
  double lambda = 0.0;
  std::vector<ModeIndex> modes;
  std::size_t multiplicity() const { return modes.size(); }
};

/// Closed-form Dirichlet eigen-data of the rectangle (0, Lx) x (0, Ly), grouped by eigenvalue.
class EigenData {
 public:
  EigenData(double lx, double ly, std::vector<EigenGroup> groups) : lx_(lx), ly_(ly), groups_(std::move(groups)) {}
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  std::size_t group_count() const { return groups_.size(); }
  const EigenGroup& group(std::size_t k) const;
  const std::vector<EigenGroup>& groups() const { return groups_; }
  /// Index of the group with eigenvalue lambda (relative tolerance), or -1.
  long find_group(double lambda, double tol = 1e-9) const;

  /// Orthonormal eigenfunction value.
  double phi(const ModeIndex& m, double x, double y) const;
  /// Inward normal derivative of phi on side s (0: y=0, 1: x=Lx, 2: y=Ly, 3: x=0) at parameter t
  /// (x on sides 0 and 2, y on sides 1 and 3).
  double trace(const ModeIndex& m, int side, double t) const;
  double side_length(int side) const { return side % 2 == 0 ? lx_ : ly_; }

 private:
  double lx_, ly_;
  std::vector<EigenGroup> groups_;
};

EigenData eigen_table(double lx, double ly, double lambda_max);

/// Boundary function in sine-series form: side s carries sum_m coeffs[s][m-1] sin(m pi t / L_s).
struct BoundarySeries {
  std::array<std::vector<double>, 4> coeffs;
  double eval(const EigenData& ed, int side, double t) const;
  static BoundarySeries single(int side, int mode, double amplitude = 1.0);
  /// Inward normal trace of a mode, which is a single sine on each side.
  static BoundarySeries trace_of(const EigenData& ed, const ModeIndex& m);
};

/// Projects a callable boundary function (side, parameter) onto sine series with `modes` terms per side.
BoundarySeries project_boundary(const EigenData& ed, const std::function<double(int, double)>& f, int modes,
                                std::size_t quad_nodes = 2049);

/// int_{dM} f * (inward normal derivative of phi_m).
double boundary_pairing(const EigenData& ed, const BoundarySeries& f, const ModeIndex& m);

/// Coefficients of S_k f on the eigenfunctions of group k.
std::vector<double> sk_apply(const EigenData& ed, const BoundarySeries& f, std::size_t k);

/// Gram matrix of the inward traces of group k and its 2-norm condition number.
struct TraceGram {
  std::vector<std::vector<double>> matrix;
  double condition = 0.0;
};
TraceGram trace_gram(const EigenData& ed, std::size_t k);

/// u_z^f in coefficient form: coeffs[k][j] multiplies the j-th eigenfunction of group k.
struct FixedFrequencySolution {
  double z = 0.0;
  std::vector<std::vector<double>> coeffs;
  double eval(const EigenData& ed, double x, double y) const;
};

FixedFrequencySolution fixed_frequency_solution(const EigenData& ed, const BoundarySeries& f, double z,
                                                std::size_t truncation);

/// Coefficient table of q against the eigenfunctions of each group, by tensor trapezoid with
/// `nodes` points per direction (exact for band-limited q below the Nyquist limit).
std::vector<std::vector<double>> q_coefficients(const EigenData& ed, const std::function<double(double, double)>& q,
                                                std::size_t nodes = 257);

/// The z-map f, z -> int_M q u_z^f given q's coefficient table.
class MomentOracle {
 public:
  MomentOracle(const EigenData& ed, std::vector<std::vector<double>> q_coeffs, std::size_t truncation);
  double operator()(const BoundarySeries& f, double z) const;
  const std::vector<std::vector<double>>& q_coeffs() const { return q_; }

 private:
  const EigenData* ed_;
  std::vector<std::vector<double>> q_;
  std::size_t K_;
};

struct ResidueResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
};

/// Neville extrapolation to delta = 0 of delta * moment(lambda_k - delta) from offsets delta0 / 2^i, i = 0..levels-1.
ResidueResult residue_extract(const std::function<double(double)>& moment, const EigenData& ed, std::size_t k,
                              double delta0 = 1e-4, std::size_t levels = 3, double tol = 1e-6);

struct RecoveryResult {
  std::vector<std::vector<double>> coeffs;   // recovered coefficients per group
  std::vector<double> condition;             // condition number of each group's pairing system
};

/// Per group: least squares on residues of the f-family against the pairing matrix.
RecoveryResult recover_q(const std::function<double(const BoundarySeries&, double)>& moments, const EigenData& ed,
                         const std::vector<BoundarySeries>& family, std::size_t groups, double delta0 = 1e-4,
                         double max_condition = 1e10);

/// Default family: the first `count` sine modes on side 0 followed by the first `count` on side 3.
std::vector<BoundarySeries> default_family(std::size_t count);

/// Residues of the truncated z-map from samples on a z-interval, by least squares on the pole basis.
std::vector<double> residues_from_interval(const std::vector<double>& z, const std::vector<double>& values,
                                           const EigenData& ed, std::size_t truncation);

/// Compares the series u_0^f with a finite-difference Laplace solve on an n x n grid; returns the largest
/// discrepancy of the low eigen-coefficients (groups < check_groups).
double fixed_frequency_fd_check(const EigenData& ed, const BoundarySeries& f, std::size_t n, std::size_t check_groups);

void write_eigen_groups_csv(const EigenData& ed, std::ostream& out);
void write_coefficients_csv(const EigenData& ed, const std::vector<std::vector<double>>& coeffs, std::ostream& out);

}  // namespace pql
