#include "core/quasimode.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "core/product_expansion.hpp"

namespace pql {

double cap_angle(double eps0, double r) {
  const double c = (1.0 + (1.0 + eps0) * (1.0 + eps0) - r * r) / (2.0 * (1.0 + eps0));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

namespace {

double eps1_dense(double eps0, std::size_t m) {
  const Point x0{1.0 + eps0, 0.0};
  auto gap = [&](double x, double y) { return std::hypot(x - x0.x, y - x0.y) - eps0; };
  double best = INFINITY;
  // Boundary arc of the annulus eps0/4 <= |x - p| <= eps0/2 on the unit circle.
  const double phi_lo = 2.0 * std::asin(eps0 / 8.0);
  const double phi_hi = 2.0 * std::asin(eps0 / 4.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double phi = phi_lo + (phi_hi - phi_lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    best = std::min({best, gap(std::cos(phi), std::sin(phi)), gap(std::cos(phi), -std::sin(phi))});
  }
  // Interior samples in polar coordinates around p.
  for (std::size_t i = 0; i < m; ++i) {
    const double rho = eps0 / 4.0 + (eps0 / 4.0) * static_cast<double>(i) / static_cast<double>(m - 1);
    for (std::size_t j = 0; j < 2 * m; ++j) {
      const double psi = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(2 * m);
      const double x = 1.0 + rho * std::cos(psi), y = rho * std::sin(psi);
      if (x * x + y * y <= 1.0) best = std::min(best, gap(x, y));
    }
  }
  return best;
}

GeometryCertificates certify(const Geometry& g, std::size_t m) {
  GeometryCertificates c;
  const Point x0 = g.x0;
  double gap = INFINITY;
  const std::size_t nb = std::max<std::size_t>(m, 64) * 8;
  for (std::size_t i = 1; i <= nb; ++i) {
    const double phi = kPi * static_cast<double>(i) / static_cast<double>(nb);
    gap = std::min(gap, std::hypot(std::cos(phi) - x0.x, std::sin(phi)) - g.eps0);
  }
  c.tangency_gap = gap;
  const double at_p = std::hypot(1.0 - x0.x, 0.0) - g.eps0;
  c.tangency = gap > 0.0 && std::abs(at_p) <= 1e-14;
  c.max_cap_angle = 0.0;
  bool ok = true;
  for (int i = 0; i < 64; ++i) {
    const double r = g.eps0 * (1.0 + static_cast<double>(i) / 63.0);
    const double th = cap_angle(g.eps0, r);
    c.max_cap_angle = std::max(c.max_cap_angle, th);
    ok = ok && th <= g.gamma * (1.0 + 1e-12) && r >= g.eps0;
  }
  c.cap_containment = ok;
  double max_x = -INFINITY;
  for (std::size_t i = 0; i <= nb; ++i) {
    const double phi = -kPi + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(nb);
    const double x = std::cos(phi), y = std::sin(phi);
    if (std::hypot(x - x0.x, y - x0.y) <= 2.0 * g.eps0) max_x = std::max(max_x, x);
  }
  c.max_x = max_x;
  c.half_plane = max_x < 1.0 + g.eps0;
  return c;
}

}  // namespace

Geometry geometry_from_eps0(double gamma, double eps0, std::size_t m_angular) {
  require(gamma > 0.0 && gamma < kPi / 2, ErrorCode::InvalidArgument, "gamma must lie in (0, pi/2)");
  require(m_angular >= 8, ErrorCode::InvalidArgument, "m_angular must be at least 8");
  require(eps0 >= 1e-6, ErrorCode::Configuration, "eps0 underflows the sampling resolution; increase gamma");
  Geometry g;
  g.gamma = gamma;
  g.eps0 = eps0;
  g.x0 = Point{1.0 + eps0, 0.0};
  g.eps1 = eps1_dense(eps0, m_angular);
  require(g.eps1 > 0.0, ErrorCode::Configuration, "dense sampling found no positive eps1");
  g.eps2 = g.eps1 / (64.0 * kE);
  g.certificates = certify(g, m_angular);
  return g;
}

Geometry setup_geometry(double gamma, std::size_t m_angular) {
  require(gamma > 0.0 && gamma < kPi / 2, ErrorCode::InvalidArgument, "gamma must lie in (0, pi/2)");
  const double cap_limit = 0.2;
  auto excess = [&](double e) { return cap_angle(e, 2.0 * e) - gamma; };
  double eps0 = cap_limit;
  if (excess(cap_limit) > 0.0) {
    double lo = 0.0, hi = cap_limit;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) > 0.0 ? hi : lo) = mid;
    }
    eps0 = lo;
  }
  return geometry_from_eps0(gamma, eps0, m_angular);
}

std::string geometry_report(const Geometry& g) {
  std::ostringstream s;
  s << std::setprecision(12);
  s << "[geometry]\n"
    << "domain = unit disk\n"
    << "p = (" << g.p.x << ", " << g.p.y << ")\n"
    << "x0 = (" << g.x0.x << ", " << g.x0.y << ")\n"
    << "gamma = " << g.gamma << "\n"
    << "eps0 = " << g.eps0 << "\n"
    << "eps1 = " << g.eps1 << "\n"
    << "eps2 = " << g.eps2 << "\n"
    << "C1_tangency = " << (g.certificates.tangency ? "pass" : "fail") << " (gap " << g.certificates.tangency_gap << ")\n"
    << "C2_cap_containment = " << (g.certificates.cap_containment ? "pass" : "fail") << " (max cap angle "
    << g.certificates.max_cap_angle << ")\n"
    << "C3_half_plane = " << (g.certificates.half_plane ? "pass" : "fail") << " (max x " << g.certificates.max_x << ")\n";
  return s.str();
}

PatchPolar to_patch_polar(const Geometry& g, Point x) {
  const double dx = x.x - g.x0.x, dy = x.y - g.x0.y;
  return {std::hypot(dx, dy), std::atan2(-dx, dy)};
}

Point from_patch_polar(const Geometry& g, double r, double theta) {
  return {g.x0.x - r * std::sin(theta), g.x0.y + r * std::cos(theta)};
}

double angular_factor(double sigma, double theta) {
  require(sigma >= 0.0 && sigma <= 1.0, ErrorCode::InvalidArgument, "sigma must lie in [0, 1]");
  require(theta >= 0.0 && theta <= kPi, ErrorCode::Domain, "theta outside [0, pi]");
  return std::exp(sigma * theta);
}

namespace {

struct BridgeValue {
  double s, ds, dss;
};

// Smooth step S(s) = f(s)/(f(s)+f(1-s)), f(s) = exp(-s^{-k}), written as a logistic in L = s^{-k} - (1-s)^{-k}.
BridgeValue bridge(double s, int k) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  const double a = std::pow(s, -k), b = std::pow(1.0 - s, -k);
  const double L = a - b;
  if (std::abs(L) > 700.0) return {L > 0 ? 0.0 : 1.0, 0.0, 0.0};
  const double S = 1.0 / (1.0 + std::exp(L));
  const double SS = L > 0 ? std::exp(-L) / ((1.0 + std::exp(-L)) * (1.0 + std::exp(-L))) : S * (1.0 - S);
  const double dL = -k * (std::pow(1.0 - s, -k - 1) + std::pow(s, -k - 1));
  const double ddL = -k * (k + 1.0) * (std::pow(1.0 - s, -k - 2) - std::pow(s, -k - 2));
  const double dS = -SS * dL;
  const double ddS = -dS * (1.0 - 2.0 * S) * dL - SS * ddL;
  return {S, dS, ddS};
}

}  // namespace

CutoffValue cutoff_chi_derivatives(const Geometry& g, Point x, CutoffProfile profile) {
  const double dx = x.x - g.p.x, dy = x.y - g.p.y;
  const double rho = std::hypot(dx, dy);
  const double w = g.eps0 / 4.0;
  if (rho <= w) return {1.0, 0.0, 0.0, 0.0};
  if (rho >= 2.0 * w) return {0.0, 0.0, 0.0, 0.0};
  const BridgeValue b = bridge((rho - w) / w, static_cast<int>(profile));
  const double d1 = -b.ds / w, d2 = -b.dss / (w * w);
  return {1.0 - b.s, d1 * dx / rho, d1 * dy / rho, d2 + d1 / rho};
}

double cutoff_chi(const Geometry& g, Point x, CutoffProfile profile) { return cutoff_chi_derivatives(g, x, profile).value; }

QuasimodeSpec make_quasimode_spec(const Geometry& g, Role role, double tau, double lambda, double sigma,
                                  CutoffProfile profile) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  require(sigma >= 0.0 && sigma <= 1.0, ErrorCode::InvalidArgument, "sigma must lie in [0, 1]");
  require(g.eps0 > 0.0, ErrorCode::InvalidArgument, "geometry not initialised");
  require(tau > tau_lower_bound(2, g.eps0), ErrorCode::Precondition, "tau below 1 + min{2, 64e/eps0}");
  QuasimodeSpec s;
  s.geometry = g;
  s.role = role;
  s.tau = tau;
  s.lambda = lambda;
  s.sigma = sigma;
  s.profile = profile;
  s.tau_eff = role == Role::Forward ? tau + lambda / tau : tau - lambda / tau;
  s.order = truncation_order(g.eps0, tau);
  s.amplitude = PartialSum{amplitude_coeffs(2, sigma, s.order), s.tau_eff, g.eps0};
  return s;
}

ScaledValue principal_uncut_scaled(const QuasimodeSpec& spec, Point x) {
  const PatchPolar pp = to_patch_polar(spec.geometry, x);
  const double tau = spec.tau_eff;
  const AValue A = eval_A_unchecked(spec.amplitude, pp.r);
  const double E = std::exp(-tau * (pp.r - spec.geometry.eps0));
  const double Y = std::exp(spec.sigma * pp.theta);
  const double u = E * A.value * Y;
  const double ur = E * (A.derivative - tau * A.value) * Y;
  const double ut = spec.sigma * u;
  const double st = std::sin(pp.theta), ct = std::cos(pp.theta);
  // e_r = (-sin, cos), e_theta = (-cos, -sin)
  return {u, -st * ur - ct * ut / pp.r, ct * ur - st * ut / pp.r};
}

double principal_scaled(const QuasimodeSpec& spec, Point x) {
  const double chi = cutoff_chi(spec.geometry, x, spec.profile);
  if (chi == 0.0) return 0.0;
  return chi * principal_uncut_scaled(spec, x).value;
}

QuasimodeField assemble_principal(const QuasimodeSpec& spec, std::size_t m_r, std::size_t m_theta) {
  QuasimodeField f;
  f.spec = spec;
  f.r_grid = make_radial_grid(spec.geometry.eps0, m_r);
  f.theta_grid = make_uniform_grid(0.0, kPi, m_theta);
  f.values.resize(m_r * m_theta);
  for (std::size_t i = 0; i < m_r; ++i)
    for (std::size_t j = 0; j < m_theta; ++j)
      f.values[i * m_theta + j] =
          principal_scaled(spec, from_patch_polar(spec.geometry, f.r_grid.node(i), f.theta_grid.node(j)));
  f.log_scale = -spec.tau_eff * spec.geometry.eps0;
  f.time_rate = spec.role == Role::Forward ? spec.tau_eff * spec.tau_eff : -spec.tau_eff * spec.tau_eff;
  return f;
}

LogReal residual_F_log(const QuasimodeSpec& spec, double r, double theta) {
  require(r > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
  const Point x = from_patch_polar(spec.geometry, r, theta);
  const double chi = cutoff_chi(spec.geometry, x, spec.profile);
  const int N = spec.order;
  const double n = spec.dimension;
  const LogReal& c = spec.amplitude.table.coeff_log(N);
  if (chi == 0.0 || c.is_zero()) return {};
  const double kappa = (N - 0.5 * (n - 3)) * (N + 0.5 * (n - 1)) + spec.sigma * spec.sigma;
  const double tau = spec.tau_eff;
  const double log_mag = c.log_abs - N * std::log(tau) + std::log(kappa) - tau * r +
                         (-0.5 * (n - 1) - N - 2) * std::log(r) + spec.sigma * theta + std::log(chi);
  return {c.sign, log_mag};
}

double residual_F(const QuasimodeSpec& spec, double r, double theta) { return residual_F_log(spec, r, theta).to_double(); }

double residual_F_scaled(const QuasimodeSpec& spec, Point x) {
  const PatchPolar pp = to_patch_polar(spec.geometry, x);
  return residual_F_log(spec, pp.r, pp.theta).scaled_log(spec.tau_eff * spec.geometry.eps0).to_double();
}

double residual_G_scaled(const QuasimodeSpec& spec, Point x) {
  const CutoffValue c = cutoff_chi_derivatives(spec.geometry, x, spec.profile);
  if (c.grad_x == 0.0 && c.grad_y == 0.0 && c.laplacian == 0.0) return 0.0;
  const ScaledValue u = principal_uncut_scaled(spec, x);
  return 2.0 * (c.grad_x * u.grad_x + c.grad_y * u.grad_y) + c.laplacian * u.value;
}

double residual_G(const QuasimodeSpec& spec, Point x) {
  return residual_G_scaled(spec, x) * std::exp(-spec.tau_eff * spec.geometry.eps0);
}

namespace {

using ld = long double;

ld uncut_ld(const QuasimodeSpec& spec, ld x, ld y) {
  const ld dx = x - static_cast<ld>(spec.geometry.x0.x), dy = y - static_cast<ld>(spec.geometry.x0.y);
  const ld r = std::sqrt(dx * dx + dy * dy);
  const ld theta = std::atan2(-dx, dy);
  const ld tau = spec.tau_eff;
  const AmplitudeTable& t = spec.amplitude.table;
  ld A = 0.0L;
  for (int k = t.order(); k >= 0; --k)
    A += static_cast<ld>(t.coeff(k)) * std::pow(r, static_cast<ld>(t.radial_power(k))) / std::pow(tau, static_cast<ld>(k));
  return std::exp(-tau * (r - static_cast<ld>(spec.geometry.eps0))) * A * std::exp(static_cast<ld>(spec.sigma) * theta);
}

}  // namespace

double verify_conjugation_identity(const QuasimodeSpec& spec, double h) {
  require(h > 0.0, ErrorCode::InvalidArgument, "grid spacing must be positive");
  const double eps0 = spec.geometry.eps0;
  const ld tau = spec.tau_eff;
  const ld H = h;
  const ld k = H / tau;
  const ld time_factor = std::sinh(tau * tau * k) / k;  // central difference of exp(+-tau^2 t) at t = 0
  const int N = spec.order;
  const AmplitudeTable& t = spec.amplitude.table;
  const ld kappa = (N + 0.5L) * (N + 0.5L) + static_cast<ld>(spec.sigma) * spec.sigma;
  const ld cN = t.coeff(N);
  double max_dev = 0.0, scale = 0.0;
  const double radii[] = {1.1, 1.3, 1.5, 1.7, 1.9};
  const double thetas[] = {0.3, 0.9, kPi / 2, 2.2, 2.8};
  for (double rf : radii)
    for (double th : thetas) {
      const ld r = rf * eps0;
      const Point x = from_patch_polar(spec.geometry, static_cast<double>(r), th);
      const ld X = x.x, Y = x.y;
      const ld u = uncut_ld(spec, X, Y);
      const ld lap = (uncut_ld(spec, X + H, Y) + uncut_ld(spec, X - H, Y) + uncut_ld(spec, X, Y + H) +
                      uncut_ld(spec, X, Y - H) - 4.0L * u) /
                     (H * H);
      const ld fd = time_factor * u - lap;
      const ld exact = -cN * std::pow(tau, static_cast<ld>(-N)) * kappa *
                       std::exp(-tau * (r - static_cast<ld>(eps0))) * std::pow(r, static_cast<ld>(-0.5 - N - 2)) *
                       std::exp(static_cast<ld>(spec.sigma) * th);
      max_dev = std::max(max_dev, static_cast<double>(std::abs(fd - exact)));
      scale = std::max(scale, static_cast<double>(std::abs(tau * tau * u)));
    }
  return max_dev / scale;
}

double verify_conjugation_identity_3d(double tau_d, double eps0, double h) {
  require(h > 0.0 && tau_d > 0.0 && eps0 > 0.0, ErrorCode::InvalidArgument, "positive tau, eps0, h required");
  const ld tau = tau_d, H = h, e0 = eps0;
  auto U = [&](ld x, ld y, ld z) {
    const ld r = std::sqrt(x * x + y * y + z * z);
    return std::exp(-tau * (r - e0)) / r;
  };
  const ld k = H / tau;
  const ld time_factor = std::sinh(tau * tau * k) / k;
  const ld dirs[][3] = {{-1, 0, 0}, {-0.6L, 0.8L, 0}, {-0.6L, 0, -0.8L}, {-0.48L, 0.6L, 0.64L}, {0, 0, 1}};
  double max_dev = 0.0, scale = 0.0;
  for (double rf : {1.1, 1.3, 1.5, 1.7, 1.9})
    for (const auto& d : dirs) {
      const ld x = rf * e0 * d[0], y = rf * e0 * d[1], z = rf * e0 * d[2];
      const ld u = U(x, y, z);
      const ld lap = (U(x + H, y, z) + U(x - H, y, z) + U(x, y + H, z) + U(x, y - H, z) + U(x, y, z + H) +
                      U(x, y, z - H) - 6.0L * u) /
                     (H * H);
      max_dev = std::max(max_dev, static_cast<double>(std::abs(time_factor * u - lap)));
      scale = std::max(scale, static_cast<double>(tau * tau * u));
    }
  return max_dev / scale;
}

ResidualSample residual_norms(const QuasimodeSpec& spec, std::size_t nodes_u, std::size_t nodes_theta) {
  require(nodes_u >= 3 && nodes_theta >= 3, ErrorCode::InvalidArgument, "quadrature needs at least 3 nodes");
  const Geometry& g = spec.geometry;
  const double eps0 = g.eps0;
  // r = eps0 + u^2 on the part of Omega inside r <= 1.5 eps0; theta covers the arc of the circle inside the disk.
  const UniformGrid ug = make_uniform_grid(0.0, std::sqrt(0.5 * eps0), nodes_u);
  std::vector<double> logF, wF;
  double sumG = 0.0;
  for (std::size_t i = 0; i < nodes_u; ++i) {
    const double u = ug.node(i);
    const double r = eps0 + u * u;
    const double cb = ((1.0 + eps0) * (1.0 + eps0) + r * r - 1.0) / (2.0 * (1.0 + eps0) * r);
    const double beta = std::acos(std::clamp(cb, -1.0, 1.0));
    const double wu = ug.spacing() * ((i == 0 || i + 1 == nodes_u) ? 0.5 : 1.0) * 2.0 * u * r;
    if (wu == 0.0 || beta == 0.0) continue;
    const double ht = 2.0 * beta / static_cast<double>(nodes_theta - 1);
    for (std::size_t j = 0; j < nodes_theta; ++j) {
      const double th = kPi / 2 - beta + ht * static_cast<double>(j);
      const double w = wu * ht * ((j == 0 || j + 1 == nodes_theta) ? 0.5 : 1.0);
      const LogReal F = residual_F_log(spec, r, th);
      if (!F.is_zero()) {
        logF.push_back(2.0 * F.log_abs);
        wF.push_back(w);
      }
      const double G = residual_G_scaled(spec, from_patch_polar(g, r, th));
      sumG += w * G * G;
    }
  }
  ResidualSample s;
  s.tau = spec.tau;
  if (!logF.empty()) {
    const double mx = *std::max_element(logF.begin(), logF.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < logF.size(); ++i) acc += wF[i] * std::exp(logF[i] - mx);
    s.log_norm_F = 0.5 * (mx + std::log(acc));
  }
  if (sumG > 0.0) s.log_norm_G = 0.5 * std::log(sumG) - spec.tau_eff * eps0;
  const double hi = std::max(s.log_norm_F, s.log_norm_G);
  s.log_norm_sum = std::isfinite(hi) ? hi + std::log(std::exp(s.log_norm_F - hi) + std::exp(s.log_norm_G - hi)) : -INFINITY;
  return s;
}

ResidualDecay verify_residual_decay(const Geometry& g, const std::vector<double>& tau_list,
                                    const ResidualDecayOptions& options) {
  require(tau_list.size() >= 3, ErrorCode::InvalidArgument, "residual sweep needs at least 3 tau values");
  ResidualDecay out;
  out.samples = parallel_map<ResidualSample>(tau_list.size(), options.workers, [&](std::size_t i) {
    const QuasimodeSpec spec = make_quasimode_spec(g, options.role, tau_list[i], options.lambda, options.sigma, options.profile);
    return residual_norms(spec, options.nodes_u, options.nodes_theta);
  });
  std::vector<double> x, y;
  for (const auto& s : out.samples) {
    require(std::isfinite(s.log_norm_sum), ErrorCode::Numerical, "residual norm vanished; slope undefined");
    x.push_back(s.tau);
    y.push_back(s.log_norm_sum);
  }
  out.fit = fit_log_linear(x, y);
  return out;
}

void write_residual_sweep_csv(const ResidualDecay& d, std::ostream& out) {
  out << "tau,norm_F,norm_G,log_norm_F,log_norm_G\n" << std::setprecision(17);
  for (const auto& s : d.samples)
    out << s.tau << ',' << std::exp(s.log_norm_F) << ',' << std::exp(s.log_norm_G) << ',' << s.log_norm_F << ','
        << s.log_norm_G << '\n';
}

}  // namespace pql
