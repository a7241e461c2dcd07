#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "core/amplitudes.hpp"
#include "core/numerics.hpp"

namespace pql {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct GeometryCertificates {
  bool tangency = false;          // B(x0, eps0) touches the closed disk only at p
  double tangency_gap = 0.0;      // min of |x - x0| - eps0 over sampled boundary points away from p
  bool cap_containment = false;   // cap angle of B(x0, r) on the circle stays below gamma for 64 radii
  double max_cap_angle = 0.0;
  bool half_plane = false;        // the line x = 1 + eps0 misses the disk
  double max_x = 0.0;
};

/// Unit disk, boundary point p = (1, 0), arc Gamma of half-width gamma, exterior point x0 = (1 + eps0, 0).
struct Geometry {
  double gamma = 0.0;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  Point p{1.0, 0.0};
  Point x0{};
  GeometryCertificates certificates{};
};

/// Half-angle of the arc B(x0, r) cuts out of the unit circle.
double cap_angle(double eps0, double r);

Geometry setup_geometry(double gamma, std::size_t m_angular);
/// Geometry with an explicitly chosen eps0 (eps1, eps2 derived as in setup_geometry).
Geometry geometry_from_eps0(double gamma, double eps0, std::size_t m_angular);
std::string geometry_report(const Geometry& g);

/// Patch polar coordinates around x0: x = x0 + r (-sin theta, cos theta), theta in [0, pi] on the disk.
struct PatchPolar {
  double r;
  double theta;
};
PatchPolar to_patch_polar(const Geometry& g, Point x);
Point from_patch_polar(const Geometry& g, double r, double theta);

double angular_factor(double sigma, double theta);

enum class CutoffProfile { ExpBridge = 1, ExpBridgeSquared = 2 };

struct CutoffValue {
  double value = 0.0;
  double grad_x = 0.0;
  double grad_y = 0.0;
  double laplacian = 0.0;
};

/// 1 on B(p, eps0/4), 0 outside B(p, eps0/2), smooth radial bridge in |x - p| in between.
double cutoff_chi(const Geometry& g, Point x, CutoffProfile profile = CutoffProfile::ExpBridge);
CutoffValue cutoff_chi_derivatives(const Geometry& g, Point x, CutoffProfile profile = CutoffProfile::ExpBridge);

enum class Role { Forward, Adjoint };

struct QuasimodeSpec {
  Geometry geometry;
  Role role = Role::Forward;
  double tau = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  int dimension = 2;
  CutoffProfile profile = CutoffProfile::ExpBridge;
  double tau_eff = 0.0;
  int order = 0;
  PartialSum amplitude;
};

/// Validates tau > 1 + min{2, 64e/eps0}; tau_eff = tau +- lambda/tau; N from the base tau.
QuasimodeSpec make_quasimode_spec(const Geometry& g, Role role, double tau, double lambda, double sigma,
                                  CutoffProfile profile = CutoffProfile::ExpBridge);

/// Principal part sampled on the patch grid [eps0, 2 eps0] x [0, pi].
/// Stored values are e^{tau_eff eps0} * U chi; the true value is value * exp(log_scale).
struct QuasimodeField {
  QuasimodeSpec spec;
  UniformGrid r_grid;
  UniformGrid theta_grid;
  std::vector<double> values;  // row-major [r][theta]
  double log_scale = 0.0;
  double time_rate = 0.0;      // time factor is exp(time_rate * t)
  double at(std::size_t i, std::size_t j) const { return values[i * theta_grid.size() + j]; }
};

QuasimodeField assemble_principal(const QuasimodeSpec& spec, std::size_t m_r = 129, std::size_t m_theta = 129);

/// e^{tau_eff eps0} times the uncut principal part e^{-tau_eff r} A(r) Y(theta) and its gradient.
struct ScaledValue {
  double value;
  double grad_x;
  double grad_y;
};
ScaledValue principal_uncut_scaled(const QuasimodeSpec& spec, Point x);
/// e^{tau_eff eps0} times the cut-off principal part at x.
double principal_scaled(const QuasimodeSpec& spec, Point x);

/// F in log-magnitude form.
LogReal residual_F_log(const QuasimodeSpec& spec, double r, double theta);
double residual_F(const QuasimodeSpec& spec, double r, double theta);
double residual_F_scaled(const QuasimodeSpec& spec, Point x);
/// [Delta, chi] U = 2 grad chi . grad U + (Delta chi) U.
double residual_G(const QuasimodeSpec& spec, Point x);
double residual_G_scaled(const QuasimodeSpec& spec, Point x);

/// Max deviation of the FD-evaluated conjugated operator from its closed form, relative to
/// the size of the time-derivative term. Dimension 2 uses the full amplitude; dimension 3
/// uses the radial solution e^{-tau r}/r (sigma = 0).
double verify_conjugation_identity(const QuasimodeSpec& spec, double h);
double verify_conjugation_identity_3d(double tau, double eps0, double h);

struct ResidualSample {
  double tau = 0.0;
  double log_norm_F = -INFINITY;
  double log_norm_G = -INFINITY;
  double log_norm_sum = -INFINITY;
};

struct ResidualDecay {
  DecayFit fit;
  std::vector<ResidualSample> samples;
};

struct ResidualDecayOptions {
  Role role = Role::Forward;
  double lambda = 0.0;
  double sigma = 0.0;
  CutoffProfile profile = CutoffProfile::ExpBridge;
  std::size_t nodes_u = 241;
  std::size_t nodes_theta = 241;
  std::size_t workers = 1;
};

/// log of the L2(Omega) norms of F and G for one spec.
ResidualSample residual_norms(const QuasimodeSpec& spec, std::size_t nodes_u, std::size_t nodes_theta);
ResidualDecay verify_residual_decay(const Geometry& g, const std::vector<double>& tau_list,
                                    const ResidualDecayOptions& options = {});

void write_residual_sweep_csv(const ResidualDecay& d, std::ostream& out);

}  // namespace pql
