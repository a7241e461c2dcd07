#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "core/grids.hpp"
#include "core/quasimode.hpp"

namespace pql {

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t steps = 1;
  double dt() const { return (t1 - t0) / static_cast<double>(steps); }
  double time(std::size_t n) const { return n == steps ? t1 : t0 + static_cast<double>(n) * dt(); }
};

using SpaceTimeFn = std::function<double(double t, const Point& x)>;

/// Values on every time level of a TimeGrid and every node of a SpaceGrid.
struct SpaceTimeField {
  std::shared_ptr<const SpaceGrid> grid;
  TimeGrid time;
  std::vector<Eigen::VectorXd> levels;

  static SpaceTimeField zeros(std::shared_ptr<const SpaceGrid> g, const TimeGrid& t);
  static SpaceTimeField sample(std::shared_ptr<const SpaceGrid> g, const TimeGrid& t, const SpaceTimeFn& f);
  /// Space-time L2 norm, trapezoid in time and in space.
  double l2_norm() const;
  double max_abs() const;
  /// Reverses the time direction: level n becomes level steps - n.
  SpaceTimeField reversed() const;
};

SpaceTimeField operator-(const SpaceTimeField& a, const SpaceTimeField& b);
SpaceTimeField operator*(double s, const SpaceTimeField& a);

/// Dirichlet data on the boundary nodes, one row per time level.
struct BoundaryData {
  std::vector<std::size_t> nodes;          // boundary node ids (grid order)
  std::vector<Eigen::VectorXd> levels;     // levels[n][k] is the value at nodes[k]
  BoundaryArc arc;

  /// Samples g on the nodes of `arc`; everything else is zero. `at_start` selects
  /// whether the data must vanish at t0 (forward) or at t1 (adjoint).
  static BoundaryData sample(const SpaceGrid& g, const TimeGrid& t, const BoundaryArc& arc, const SpaceTimeFn& f,
                             bool vanish_at_start = true);
  static BoundaryData zeros(const SpaceGrid& g, const TimeGrid& t);
  BoundaryData reversed() const;
  BoundaryData scaled(double s) const;
};

struct SolverOptions {
  /// Number of initial implicit Euler steps (damps the start-up transient of Crank-Nicolson).
  std::size_t implicit_startup_steps = 0;
};

/// Crank-Nicolson for u_t - Delta u + q u = source, u(t0) = 0, u = f on the boundary.
/// `source_field` takes precedence over `source_fn` when both are given.
SpaceTimeField solve_forward(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                             const BoundaryData& f, const SpaceTimeFn& source_fn = {},
                             const SpaceTimeField* source_field = nullptr, const SolverOptions& options = {});

/// Solves -w_t - Delta w + q w = 0 backward from w(t1) = 0 with boundary data h.
SpaceTimeField solve_adjoint(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                             const BoundaryData& h, const SolverOptions& options = {});

struct RemainderOptions {
  double horizon = 1.0;       // T
  double margin = 0.1;        // delta
  std::size_t steps = 16;
  std::size_t startup_steps = 2;
  double sector_depth = 0.25; // r_disk in [1 - depth, 1]
  double sector_half_angle = 0.35;
  double spacing_factor = 0.2;  // radial spacing = min(max_spacing, spacing_factor / tau)
  double max_spacing = 2e-3;
  double min_spacing = 2.5e-4;
};

struct RemainderResult {
  SpaceTimeField field;      // R scaled by exp(-log_scale)
  double log_scale = 0.0;    // true R = field * exp(log_scale)
  double log_norm_R = -INFINITY;
  double log_norm_F = -INFINITY;
  double log_norm_G = -INFINITY;
  double duration = 0.0;
  /// log(sqrt(T) (||F|| + ||G||)) for the energy inequality.
  double log_energy_bound = -INFINITY;
  bool energy_inequality = false;
};

/// Conjugated remainder problem (d/ds - Delta + tau_eff^2) R = F + G on a disk sector around p,
/// zero boundary data and zero initial (forward) or final (adjoint) value, duration T - delta.
RemainderResult solve_remainder(const QuasimodeSpec& spec, const RemainderOptions& options = {});

struct DtnSample {
  std::vector<double> times;
  std::vector<std::size_t> nodes;
  std::vector<double> params;
  std::vector<Eigen::VectorXd> values;  // values[n][k]: outward normal derivative at nodes[k], time level n

  double l2_norm(const SpaceGrid& g, const TimeGrid& t) const;
};

DtnSample normal_derivative(const SpaceTimeField& u, const BoundaryArc& gamma);
DtnSample operator-(const DtnSample& a, const DtnSample& b);
DtnSample operator*(double s, const DtnSample& a);

DtnSample dtn_map(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                  const BoundaryData& f, const BoundaryArc& gamma);
DtnSample frechet_dtn(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                      const BoundaryData& f, const BoundaryArc& gamma);

struct IdentityCheck {
  double boundary_side = 0.0;  // integral of h (S_q1 - S_q2) f over (0,T) x Gamma
  double interior_side = 0.0;  // integral of (q1 - q2) w1 w2 over M
  double discrepancy = 0.0;
};

IdentityCheck integral_identity_check(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time,
                                      const SpaceTimeFn& q1, const SpaceTimeFn& q2, const BoundaryData& f,
                                      const BoundaryData& h, const BoundaryArc& gamma);

/// a(t, x, u) with its u-derivatives.
struct Nonlinearity {
  std::function<double(double, const Point&, double)> a;
  std::function<double(double, const Point&, double)> a_u;
  /// Second u-derivative at u = 0.
  std::function<double(double, const Point&)> a_uu0;

  static Nonlinearity zero();
  /// c(t,x) u^2.
  static Nonlinearity quadratic(std::function<double(double, const Point&)> c);
  static Nonlinearity cubic(double c = 1.0);
};

struct NewtonOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 25;
};

SpaceTimeField solve_semilinear(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const Nonlinearity& a,
                                const BoundaryData& f, const NewtonOptions& options = {});

struct SecondLinearizationResult {
  std::vector<double> eps;
  std::vector<double> error;        // ||v_mixed - v_pde|| / ||v_pde||, or ||v_mixed|| when v_pde = 0
  std::vector<double> mixed_norm;
  double pde_norm = 0.0;
  double observed_order = 0.0;      // fitted slope of log error against log eps
  bool relative = true;
  std::vector<std::string> warnings;
};

SecondLinearizationResult second_linearization_check(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time,
                                                     const Nonlinearity& a, const BoundaryData& f1,
                                                     const BoundaryData& f2, const std::vector<double>& eps_list,
                                                     const NewtonOptions& options = {});

/// Self-describing binary layout: magic "PQLF", version, grid kind, dims, spacings, t0, T, payload.
void write_field_binary(const SpaceTimeField& f, std::ostream& out);
struct FieldHeader {
  std::uint32_t version = 0;
  std::uint32_t grid_kind = 0;
  std::uint64_t levels = 0, dim1 = 0, dim2 = 0, nodes = 0;
  double dt = 0, h1 = 0, h2 = 0, t0 = 0, t1 = 0;
};
/// Reads a field written by write_field_binary; values[n][i] row-major.
FieldHeader read_field_binary(std::istream& in, std::vector<std::vector<double>>& values);
void write_field_slice_csv(const SpaceTimeField& f, std::size_t level, std::ostream& out);
void write_dtn_csv(const DtnSample& d, std::ostream& out);

}  // namespace pql
