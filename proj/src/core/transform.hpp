#pragma once

#include <Eigen/Dense>
#include <functional>
#include <ostream>
#include <utility>
#include <vector>

#include "core/heat_solver.hpp"
#include "core/numerics.hpp"
#include "core/product_expansion.hpp"
#include "core/quasimode.hpp"

namespace pql {

/// I^k f(r) = int_{lo}^r (r-s)^{k-1}/(k-1)! f(s) ds, trapezoid in s at every node (O(m^2)).
GridFunction iterated_integral(const GridFunction& f, int k);
/// I^0 f, ..., I^{k_max} f by repeated cumulative trapezoid (O(k m)).
std::vector<GridFunction> iterated_integrals_nested(const GridFunction& f, int k_max);

/// Both sides of the integration-by-parts identity, all scaled by e^{2 tau eps0}.
struct IbpCheck {
  double direct = 0.0;           // int Q e^{-2 tau r} tau^{-k} b_k dr
  double integrated = 0.0;       // int 2^k e^{-2 tau r} I^k(Q b_k) dr
  double boundary_string = 0.0;  // e^{-4 eps0 tau} sum_j 2^{k-j} tau^{-j} I^{k-j+1}(Q b_k)(2 eps0)
  double discrepancy = 0.0;      // |direct - integrated - boundary_string|
  double relative = 0.0;         // discrepancy / |direct| (0 when both vanish)
  double log_scale = 0.0;        // true values are scaled values times exp(log_scale)
};

/// Uses the nodes of Qf; b_k is evaluated from the table's closed form. Requires 1 <= k <= pt.order().
IbpCheck ibp_identity_check(const GridFunction& Qf, const ProductTable& pt, int k, double tau);
/// Samples Q with spacing about h_tau / tau and with half that spacing, then combines both by one Romberg step.
IbpCheck ibp_identity_check(const std::function<double(double)>& Q, const ProductTable& pt, int k, double tau,
                            double h_tau = 2e-3);

struct MomentFunction {
  GridFunction Q;
  double lambda = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

struct MomentOptions {
  double horizon = 1.0;
  double margin = 0.1;
  std::size_t nodes_t = 65;
  std::size_t nodes_theta = 257;
};

/// Q(r) = int_delta^{T-delta} int_0^pi q(t, x(r,theta)) e^{4 lambda t} Y_s1 Y_s2 dtheta dt, with q set
/// to zero outside the unit disk.
MomentFunction moment_Q(const SpaceTimeFn& q, const Geometry& g, const RadialGrid& grid, double lambda, double sigma1,
                        double sigma2, const MomentOptions& options = {});

struct LaplaceValue {
  double value = 0.0;       // scaled value
  double log_scale = 0.0;   // true value = value * exp(log_scale)
  double log_abs() const { return value == 0.0 ? -INFINITY : std::log(std::abs(value)) + log_scale; }
};

/// int over [a, b] of e^{-2 tau r} sum_{k<=N} 2^k I^k(Q b_k)(r) dr with N = N(tau); [a, b] defaults to the whole grid.
LaplaceValue weighted_laplace(const MomentFunction& Q, const ProductTable& pt, double tau);
LaplaceValue weighted_laplace_interval(const MomentFunction& Q, const ProductTable& pt, double tau, double a, double b);
/// Route before integration by parts: int Q e^{-2 tau r} sum_k b_k tau^{-k} dr.
LaplaceValue weighted_laplace_direct(const MomentFunction& Q, const ProductTable& pt, double tau);

/// Kernel B(r, s) on the triangle eps0 < s < r < eps0 + eps2 (uniform grid, lower triangle stored).
struct VolterraKernel {
  UniformGrid grid;
  int m_terms = 0;
  Eigen::MatrixXd values;              // values(i, j) = B(r_i, r_j) for j <= i
  std::vector<double> increments;      // increments[k-1] = sup_D |k-th term|, k = 1..pt.order()
  double tail_bound = 0.0;             // bound on sup_D |E_m| for m = m_terms
  DecayFit tail_fit;                   // log increments against k over the fitted window; default when too few are nonzero
  double sup_norm() const;
};

VolterraKernel kernel_B(const ProductTable& pt, int m_terms, double eps2, std::size_t nodes = 65);
/// Kernel given by an explicit function on an arbitrary grid (tests, randomized trials).
VolterraKernel make_kernel(const UniformGrid& grid, const std::function<double(double, double)>& B);
/// Slope of log increments against k on [k_lo, k_hi].
DecayFit kernel_tail_slope(const VolterraKernel& kernel, int k_lo, int k_hi);

/// H + int_{lo}^r B(r,s) H(s) ds = rhs by trapezoid marching.
GridFunction volterra_solve(const VolterraKernel& kernel, const GridFunction& rhs);
/// Discrete residual Q + int B Q - eta with the marching quadrature.
GridFunction volterra_residual(const VolterraKernel& kernel, const GridFunction& Q, const GridFunction& eta);

struct GronwallCertificate {
  double measured = 0.0;          // ||Q||_inf
  double continuous_bound = 0.0;  // ||eta|| exp(||B|| L)
  double discrete_bound = 0.0;    // rigorous bound for the marching solution
  double certified = 0.0;         // the bound used for the verdict (discrete)
  double residual = 0.0;
  bool dominates = false;
};

GronwallCertificate gronwall_certificate(const VolterraKernel& kernel, const GridFunction& Q, const GridFunction& eta,
                                         double tolerance = 1e-9);

struct LaplaceSamples {
  std::vector<std::pair<double, double>> points;  // (tau, value of int_0^{eps2} e^{2 tau r} H dr)
};

/// Forward model on a uniform grid of (0, eps2) by fine trapezoid quadrature.
LaplaceSamples laplace_forward(const std::function<double(double)>& H, double eps2, const std::vector<double>& taus,
                               std::size_t quad_nodes = 4001);
/// `count` tau values with 2 tau eps2 evenly spaced over [-s_max, s_max].
std::vector<double> symmetric_tau_window(double eps2, double s_max, std::size_t count);

struct LaplaceInversion {
  GridFunction H;
  double condition = 0.0;       // condition number of the row-scaled system
  double ridge = 0.0;
  double residual = 0.0;        // relative residual of the scaled system
};

LaplaceInversion laplace_invert(const LaplaceSamples& samples, const UniformGrid& grid, double ridge);
/// Picks the ridge by the discrepancy principle for a relative noise level.
LaplaceInversion laplace_invert_discrepancy(const LaplaceSamples& samples, const UniformGrid& grid, double noise_level);

/// Least-squares polynomial fit of values on a parameter grid; returns the coefficient vector (monomial basis
/// in the affinely mapped parameter on [-1, 1]).
std::vector<double> polynomial_fit(const std::vector<double>& params, const std::vector<double>& values, int degree);

/// Vanishing-on-grid inference: every fitted coefficient below tol.
struct AnalyticVanishing {
  std::vector<double> coefficients;
  double max_coefficient = 0.0;
  bool vanishes = false;
};
AnalyticVanishing analytic_vanishing_test(const std::vector<double>& params, const std::vector<double>& values,
                                          int degree, double tol);

struct UniquenessOptions {
  MomentOptions moment;
  std::size_t annulus_nodes = 33;
  std::size_t kernel_order = 40;
  std::size_t parameter_points = 9;
  int fit_degree = 4;
  double tolerance = 1e-12;
};

struct UniquenessReport {
  double max_Q_annulus = 0.0;          // sup |Q| on [eps0, eps0+eps2] over the lambda and sigma grids
  double max_H = 0.0;                  // sup |H| with H = Q + int B Q
  double max_laplace_sample = 0.0;     // sup over a symmetric tau window of |int e^{2 tau r} H|
  double gronwall_certified = 0.0;
  double lambda_max_coefficient = 0.0;
  double sigma_max_coefficient = 0.0;
  bool zero = false;
};

/// End-to-end uniqueness chain on the annulus [eps0, eps0 + eps2] for a given q.
UniquenessReport uniqueness_pipeline(const SpaceTimeFn& q, const Geometry& g, const UniquenessOptions& options = {});

void write_laplace_sweep_csv(const std::vector<std::pair<double, double>>& sweep, std::ostream& out);
void write_kernel_csv(const VolterraKernel& kernel, std::ostream& out);
void write_moment_csv(const MomentFunction& Q, std::ostream& out);

}  // namespace pql
