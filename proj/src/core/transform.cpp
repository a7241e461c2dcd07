#include "core/transform.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <iomanip>

namespace pql {

GridFunction iterated_integral(const GridFunction& f, int k) {
  require(k >= 0, ErrorCode::InvalidArgument, "iterated integral order must be nonnegative");
  if (k == 0) return f;
  const UniformGrid& g = f.grid;
  const double h = g.spacing();
  const double log_fact = std::lgamma(static_cast<double>(k));
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double r = g.node(i);
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 : 1.0;
      const double d = r - g.node(j);
      const double kern = k == 1 ? 1.0 : (d <= 0.0 ? 0.0 : std::exp((k - 1) * std::log(d) - log_fact));
      acc += w * kern * f.values[j];
    }
    out[i] = h * acc;
  }
  return GridFunction(g, std::move(out));
}

std::vector<GridFunction> iterated_integrals_nested(const GridFunction& f, int k_max) {
  require(k_max >= 0, ErrorCode::InvalidArgument, "iterated integral order must be nonnegative");
  std::vector<GridFunction> out{f};
  for (int k = 1; k <= k_max; ++k)
    out.emplace_back(f.grid, cumulative_trapezoid(out.back().values, f.grid.spacing()));
  return out;
}

namespace {

// Trapezoid integral over [a, b] of the piecewise-linear interpolant of v on grid g.
double trapezoid_window(const UniformGrid& g, const std::vector<double>& v, double a, double b) {
  a = std::max(a, g.lo());
  b = std::min(b, g.hi());
  if (b <= a) return 0.0;
  const double h = g.spacing();
  auto interp = [&](double x) {
    const double u = (x - g.lo()) / h;
    std::size_t i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))), g.size() - 2);
    const double t = u - static_cast<double>(i);
    return (1.0 - t) * v[i] + t * v[i + 1];
  };
  const std::size_t i0 = static_cast<std::size_t>(std::ceil((a - g.lo()) / h - 1e-12));
  const std::size_t i1 = std::min(g.size() - 1, static_cast<std::size_t>(std::floor((b - g.lo()) / h + 1e-12)));
  if (i0 > i1) return 0.5 * (b - a) * (interp(a) + interp(b));
  double acc = 0.5 * (g.node(i0) - a) * (interp(a) + v[i0]);
  for (std::size_t i = i0; i < i1; ++i) acc += 0.5 * h * (v[i] + v[i + 1]);
  acc += 0.5 * (b - g.node(i1)) * (v[i1] + interp(b));
  return acc;
}

std::vector<double> weight_profile(const UniformGrid& g, double tau) {
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = std::exp(-2.0 * tau * (g.node(i) - g.lo()));
  return w;
}

}  // namespace

IbpCheck ibp_identity_check(const GridFunction& Qf, const ProductTable& pt, int k, double tau) {
  require(k >= 1 && k <= pt.order(), ErrorCode::InvalidArgument, "ibp check needs 1 <= k <= table order");
  require(tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  const UniformGrid& g = Qf.grid;
  std::vector<double> qb(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) qb[i] = Qf.values[i] * pt.eval_b(k, g.node(i));
  const std::vector<double> w = weight_profile(g, tau);
  const auto I = iterated_integrals_nested(GridFunction(g, qb), k);
  const double h = g.spacing();
  IbpCheck c;
  c.log_scale = -2.0 * tau * g.lo();
  std::vector<double> tmp(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = qb[i] * w[i];
  c.direct = quad_trapezoid(tmp, h) * std::pow(tau, -k);
  for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = I[static_cast<std::size_t>(k)].values[i] * w[i];
  c.integrated = std::ldexp(quad_trapezoid(tmp, h), k);
  double s = 0.0;
  for (int j = 1; j <= k; ++j) s += std::ldexp(1.0, k - j) * std::pow(tau, -j) * I[static_cast<std::size_t>(k - j + 1)].values.back();
  c.boundary_string = std::exp(-2.0 * tau * (g.hi() - g.lo())) * s;
  c.discrepancy = std::abs(c.direct - c.integrated - c.boundary_string);
  c.relative = c.direct != 0.0 ? c.discrepancy / std::abs(c.direct) : c.discrepancy;
  return c;
}

IbpCheck ibp_identity_check(const std::function<double(double)>& Q, const ProductTable& pt, int k, double tau,
                            double h_tau) {
  require(h_tau > 0.0, ErrorCode::InvalidArgument, "spacing factor must be positive");
  const double eps0 = pt.eps0();
  const auto m = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(eps0 * tau / h_tau)), 2) + 1;
  const IbpCheck coarse = ibp_identity_check(GridFunction::sample(make_radial_grid(eps0, m), Q), pt, k, tau);
  const IbpCheck fine = ibp_identity_check(GridFunction::sample(make_radial_grid(eps0, 2 * m - 1), Q), pt, k, tau);
  // Romberg step: every side has an h^2 error expansion on uniform grids.
  auto extrapolate = [](double f, double c) { return (4.0 * f - c) / 3.0; };
  IbpCheck c;
  c.log_scale = fine.log_scale;
  c.direct = extrapolate(fine.direct, coarse.direct);
  c.integrated = extrapolate(fine.integrated, coarse.integrated);
  c.boundary_string = extrapolate(fine.boundary_string, coarse.boundary_string);
  c.discrepancy = std::abs(c.direct - c.integrated - c.boundary_string);
  c.relative = c.direct != 0.0 ? c.discrepancy / std::abs(c.direct) : c.discrepancy;
  return c;
}

MomentFunction moment_Q(const SpaceTimeFn& q, const Geometry& g, const RadialGrid& grid, double lambda, double sigma1,
                        double sigma2, const MomentOptions& o) {
  require(o.horizon > 2.0 * o.margin && o.margin >= 0.0, ErrorCode::InvalidArgument, "need T > 2 delta >= 0");
  require(o.nodes_t >= 2 && o.nodes_theta >= 2, ErrorCode::InvalidArgument, "moment quadrature needs >= 2 nodes");
  const UniformGrid tg(o.margin, o.horizon - o.margin, o.nodes_t);
  const UniformGrid thg(0.0, kPi, o.nodes_theta);
  std::vector<double> tw(tg.size()), thw(thg.size());
  for (std::size_t n = 0; n < tg.size(); ++n)
    tw[n] = tg.spacing() * ((n == 0 || n + 1 == tg.size()) ? 0.5 : 1.0) * std::exp(4.0 * lambda * tg.node(n));
  for (std::size_t j = 0; j < thg.size(); ++j)
    thw[j] = thg.spacing() * ((j == 0 || j + 1 == thg.size()) ? 0.5 : 1.0) *
             angular_factor(sigma1, thg.node(j)) * angular_factor(sigma2, thg.node(j));
  MomentFunction M;
  M.lambda = lambda;
  M.sigma1 = sigma1;
  M.sigma2 = sigma2;
  M.Q = GridFunction::sample(grid, [&](double r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < thg.size(); ++j) {
      const Point x = from_patch_polar(g, r, thg.node(j));
      if (x.x * x.x + x.y * x.y > 1.0) continue;
      double inner = 0.0;
      for (std::size_t n = 0; n < tg.size(); ++n) inner += tw[n] * q(tg.node(n), x);
      acc += thw[j] * inner;
    }
    return acc;
  });
  return M;
}

namespace {

int laplace_order(const ProductTable& pt, double tau) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  const int N = truncation_order(pt.eps0(), tau);
  require(N <= pt.order(), ErrorCode::Precondition, "product table order is smaller than N(tau)");
  return N;
}

std::vector<double> integrated_symbol(const MomentFunction& Q, const ProductTable& pt, int N) {
  const UniformGrid& g = Q.Q.grid;
  std::vector<double> S(g.size(), 0.0);
  for (int k = 0; k <= N; ++k) {
    std::vector<double> qb(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) qb[i] = Q.Q.values[i] * pt.eval_b(k, g.node(i));
    const auto I = iterated_integrals_nested(GridFunction(g, qb), k);
    for (std::size_t i = 0; i < g.size(); ++i) S[i] += std::ldexp(I.back().values[i], k);
  }
  return S;
}

}  // namespace

LaplaceValue weighted_laplace_interval(const MomentFunction& Q, const ProductTable& pt, double tau, double a, double b) {
  const int N = laplace_order(pt, tau);
  const UniformGrid& g = Q.Q.grid;
  std::vector<double> S = integrated_symbol(Q, pt, N);
  const std::vector<double> w = weight_profile(g, tau);
  for (std::size_t i = 0; i < g.size(); ++i) S[i] *= w[i];
  return {trapezoid_window(g, S, a, b), -2.0 * tau * g.lo()};
}

LaplaceValue weighted_laplace(const MomentFunction& Q, const ProductTable& pt, double tau) {
  return weighted_laplace_interval(Q, pt, tau, Q.Q.grid.lo(), Q.Q.grid.hi());
}

LaplaceValue weighted_laplace_direct(const MomentFunction& Q, const ProductTable& pt, double tau) {
  const int N = laplace_order(pt, tau);
  const UniformGrid& g = Q.Q.grid;
  const std::vector<double> w = weight_profile(g, tau);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int k = N; k >= 0; --k) s = s / tau + pt.eval_b(k, g.node(i));
    v[i] = Q.Q.values[i] * w[i] * s;
  }
  return {quad_trapezoid(v, g.spacing()), -2.0 * tau * g.lo()};
}

double VolterraKernel::sup_norm() const {
  double m = 0.0;
  for (long i = 0; i < values.rows(); ++i)
    for (long j = 0; j <= i; ++j) m = std::max(m, std::abs(values(i, j)));
  return m;
}

VolterraKernel kernel_B(const ProductTable& pt, int m_terms, double eps2, std::size_t nodes) {
  require(m_terms >= 1, ErrorCode::InvalidArgument, "kernel needs at least one term");
  require(m_terms <= pt.order(), ErrorCode::InvalidArgument, "kernel order exceeds the product table order");
  require(eps2 > 0.0 && nodes >= 3, ErrorCode::InvalidArgument, "kernel grid needs eps2 > 0 and >= 3 nodes");
  const double eps0 = pt.eps0();
  VolterraKernel K;
  K.grid = UniformGrid(eps0, eps0 + eps2, nodes);
  K.m_terms = m_terms;
  const long m = static_cast<long>(nodes);
  K.values = Eigen::MatrixXd::Zero(m, m);
  std::vector<std::vector<double>> bk(static_cast<std::size_t>(m_terms) + 1, std::vector<double>(nodes));
  for (int k = 1; k <= m_terms; ++k)
    for (std::size_t j = 0; j < nodes; ++j) bk[static_cast<std::size_t>(k)][j] = pt.eval_b(k, K.grid.node(j));
  for (long i = 0; i < m; ++i)
    for (long j = 0; j <= i; ++j) {
      const double d = K.grid.node(static_cast<std::size_t>(i)) - K.grid.node(static_cast<std::size_t>(j));
      double acc = 0.0, pw = 2.0;  // 2^k d^{k-1} / (k-1)!
      for (int k = 1; k <= m_terms; ++k) {
        acc += pw * bk[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        pw *= 2.0 * d / k;
      }
      K.values(i, j) = acc;
    }
  // Increments: sup over D of the k-th term; sup in r is attained at r = eps0 + eps2.
  const UniformGrid sg(eps0, eps0 + eps2, 257);
  for (int k = 1; k <= pt.order(); ++k) {
    double best = -INFINITY;
    for (std::size_t j = 0; j < sg.size(); ++j) {
      const double s = sg.node(j);
      const double b = std::abs(pt.eval_b(k, s));
      if (b == 0.0) continue;
      const double d = eps0 + eps2 - s;
      if (k > 1 && d <= 0.0) continue;
      const double lt = k * std::log(2.0) - std::lgamma(static_cast<double>(k)) + (k > 1 ? (k - 1) * std::log(d) : 0.0) +
                        std::log(b);
      best = std::max(best, lt);
    }
    K.increments.push_back(std::isfinite(best) ? std::exp(best) : 0.0);
  }
  const int kmax = pt.order();
  double tail = 0.0;
  for (int k = m_terms + 1; k <= kmax; ++k) tail += K.increments[static_cast<std::size_t>(k - 1)];
  if (kmax >= 2) {
    const double a = K.increments[static_cast<std::size_t>(kmax - 1)], b = K.increments[static_cast<std::size_t>(kmax - 2)];
    if (b > 0.0 && a < b) tail += a * (a / b) / (1.0 - a / b);
    else if (a > 0.0) tail = INFINITY;
  }
  K.tail_bound = tail;
  if (kmax >= 7) {
    const int lo = std::min(5, kmax - 2), hi = std::min(40, kmax);
    const auto positive = std::count_if(K.increments.begin() + (lo - 1), K.increments.begin() + hi, [](double v) { return v > 0.0; });
    if (positive >= 3) K.tail_fit = kernel_tail_slope(K, lo, hi);
  }
  return K;
}

VolterraKernel make_kernel(const UniformGrid& grid, const std::function<double(double, double)>& B) {
  require(grid.size() >= 2, ErrorCode::InvalidArgument, "kernel grid needs at least 2 nodes");
  VolterraKernel K;
  K.grid = grid;
  const long m = static_cast<long>(grid.size());
  K.values = Eigen::MatrixXd::Zero(m, m);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j <= i; ++j) K.values(i, j) = B(grid.node(static_cast<std::size_t>(i)), grid.node(static_cast<std::size_t>(j)));
  return K;
}

DecayFit kernel_tail_slope(const VolterraKernel& kernel, int k_lo, int k_hi) {
  require(k_lo >= 1 && k_hi <= static_cast<int>(kernel.increments.size()) && k_hi - k_lo >= 2, ErrorCode::InvalidArgument,
          "tail window must contain at least 3 increments");
  std::vector<std::pair<double, double>> pts;
  for (int k = k_lo; k <= k_hi; ++k)
    if (kernel.increments[static_cast<std::size_t>(k - 1)] > 0.0) pts.emplace_back(k, kernel.increments[static_cast<std::size_t>(k - 1)]);
  return fit_exponential_slope(pts);
}

GridFunction volterra_solve(const VolterraKernel& K, const GridFunction& rhs) {
  require(rhs.grid == K.grid, ErrorCode::InvalidArgument, "right-hand side lives on a different grid");
  const double h = K.grid.spacing();
  const std::size_t m = K.grid.size();
  std::vector<double> H(m, 0.0);
  H[0] = rhs.values[0];
  for (std::size_t i = 1; i < m; ++i) {
    const long li = static_cast<long>(i);
    double acc = 0.5 * K.values(li, 0) * H[0];
    for (std::size_t j = 1; j < i; ++j) acc += K.values(li, static_cast<long>(j)) * H[j];
    const double diag = 1.0 + 0.5 * h * K.values(li, li);
    require(std::abs(diag) > 1e-10, ErrorCode::Numerical, "Volterra diagonal weight vanishes; reduce the step size");
    H[i] = (rhs.values[i] - h * acc) / diag;
  }
  return GridFunction(K.grid, std::move(H));
}

GridFunction volterra_residual(const VolterraKernel& K, const GridFunction& Q, const GridFunction& eta) {
  require(Q.grid == K.grid && eta.grid == K.grid, ErrorCode::InvalidArgument, "grid mismatch in Volterra residual");
  const double h = K.grid.spacing();
  std::vector<double> r(K.grid.size());
  r[0] = Q.values[0] - eta.values[0];
  for (std::size_t i = 1; i < r.size(); ++i) {
    const long li = static_cast<long>(i);
    double acc = 0.5 * K.values(li, 0) * Q.values[0] + 0.5 * K.values(li, li) * Q.values[i];
    for (std::size_t j = 1; j < i; ++j) acc += K.values(li, static_cast<long>(j)) * Q.values[j];
    r[i] = Q.values[i] + h * acc - eta.values[i];
  }
  return GridFunction(K.grid, std::move(r));
}

GronwallCertificate gronwall_certificate(const VolterraKernel& K, const GridFunction& Q, const GridFunction& eta,
                                         double tolerance) {
  GronwallCertificate c;
  c.residual = volterra_residual(K, Q, eta).sup_norm();
  const double eta_n = eta.sup_norm();
  c.measured = Q.sup_norm();
  require(c.residual <= tolerance * std::max({1.0, eta_n, c.measured}), ErrorCode::Precondition,
          "Q does not satisfy the Volterra relation within tolerance");
  const double beta = K.sup_norm(), h = K.grid.spacing();
  c.continuous_bound = eta_n * std::exp(beta * K.grid.length());
  const double E = eta_n + c.residual;
  const double denom = 1.0 - 0.5 * h * beta;
  if (denom <= 0.0) {
    c.discrete_bound = INFINITY;
  } else {
    std::vector<double> M(K.grid.size());
    M[0] = E;
    double running = 0.5 * M[0];
    double best = M[0];
    for (std::size_t i = 1; i < M.size(); ++i) {
      M[i] = (E + h * beta * running) / denom;
      running += M[i];
      best = std::max(best, M[i]);
    }
    c.discrete_bound = best;
  }
  c.certified = c.discrete_bound;
  c.dominates = c.measured <= c.certified * (1.0 + 1e-12);
  return c;
}

LaplaceSamples laplace_forward(const std::function<double(double)>& H, double eps2, const std::vector<double>& taus,
                               std::size_t quad_nodes) {
  require(eps2 > 0.0 && quad_nodes >= 3, ErrorCode::InvalidArgument, "forward model needs eps2 > 0 and >= 3 nodes");
  const UniformGrid g(0.0, eps2, quad_nodes);
  const GridFunction h = GridFunction::sample(g, H);
  LaplaceSamples s;
  std::vector<double> v(g.size());
  for (double t : taus) {
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::exp(2.0 * t * g.node(i)) * h.values[i];
    s.points.emplace_back(t, quad_trapezoid(v, g.spacing()));
  }
  return s;
}

std::vector<double> symmetric_tau_window(double eps2, double s_max, std::size_t count) {
  require(eps2 > 0.0 && s_max > 0.0 && count >= 2, ErrorCode::InvalidArgument, "invalid tau window");
  std::vector<double> t = lin_spaced(-s_max, s_max, count);
  for (double& x : t) x /= 2.0 * eps2;
  return t;
}

namespace {

struct ScaledSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

ScaledSystem laplace_system(const LaplaceSamples& s, const UniformGrid& g) {
  const long rows = static_cast<long>(s.points.size()), cols = static_cast<long>(g.size());
  require(rows >= cols, ErrorCode::InvalidArgument, "need at least as many samples as grid nodes");
  ScaledSystem sys{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
  for (long i = 0; i < rows; ++i) {
    const double t = s.points[static_cast<std::size_t>(i)].first;
    double mx = 0.0;
    for (long j = 0; j < cols; ++j) {
      const double w = g.spacing() * ((j == 0 || j + 1 == cols) ? 0.5 : 1.0);
      sys.A(i, j) = w * std::exp(2.0 * t * g.node(static_cast<std::size_t>(j)));
      mx = std::max(mx, std::abs(sys.A(i, j)));
    }
    require(std::isfinite(mx) && mx > 0.0, ErrorCode::Numerical, "Laplace system row overflow");
    sys.A.row(i) /= mx;
    sys.b[i] = s.points[static_cast<std::size_t>(i)].second / mx;
  }
  return sys;
}

LaplaceInversion solve_tikhonov(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd, const ScaledSystem& sys,
                                const UniformGrid& g, double ridge) {
  const Eigen::VectorXd& sv = svd.singularValues();
  const double alpha = ridge * sv[0];
  const Eigen::VectorXd ub = svd.matrixU().transpose() * sys.b;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.A.cols());
  for (long i = 0; i < sv.size(); ++i) {
    const double f = sv[i] / (sv[i] * sv[i] + alpha * alpha);
    x += f * ub[i] * svd.matrixV().col(i);
  }
  LaplaceInversion inv;
  inv.H = GridFunction(g, std::vector<double>(x.data(), x.data() + x.size()));
  inv.ridge = ridge;
  inv.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  const double bn = sys.b.norm();
  inv.residual = bn > 0.0 ? (sys.A * x - sys.b).norm() / bn : 0.0;
  return inv;
}

}  // namespace

LaplaceInversion laplace_invert(const LaplaceSamples& samples, const UniformGrid& grid, double ridge) {
  require(ridge > 0.0, ErrorCode::InvalidArgument, "ridge must be positive");
  const ScaledSystem sys = laplace_system(samples, grid);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return solve_tikhonov(svd, sys, grid, ridge);
}

LaplaceInversion laplace_invert_discrepancy(const LaplaceSamples& samples, const UniformGrid& grid, double noise_level) {
  require(noise_level > 0.0 && noise_level < 1.0, ErrorCode::InvalidArgument, "noise level must lie in (0, 1)");
  const ScaledSystem sys = laplace_system(samples, grid);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double lo = -16.0, hi = 0.0;
  LaplaceInversion best = solve_tikhonov(svd, sys, grid, std::pow(10.0, lo));
  if (best.residual >= noise_level || sys.b.norm() == 0.0) return best;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    LaplaceInversion cand = solve_tikhonov(svd, sys, grid, std::pow(10.0, mid));
    if (cand.residual <= noise_level) {
      lo = mid;
      best = std::move(cand);
    } else {
      hi = mid;
    }
  }
  return best;
}

std::vector<double> polynomial_fit(const std::vector<double>& params, const std::vector<double>& values, int degree) {
  require(params.size() == values.size(), ErrorCode::InvalidArgument, "parameter and value counts differ");
  require(degree >= 0 && params.size() > static_cast<std::size_t>(degree), ErrorCode::InvalidArgument,
          "polynomial fit needs more points than the degree");
  const auto [mn, mx] = std::minmax_element(params.begin(), params.end());
  const double c = 0.5 * (*mn + *mx), s = *mx > *mn ? 0.5 * (*mx - *mn) : 1.0;
  Eigen::MatrixXd V(static_cast<long>(params.size()), degree + 1);
  Eigen::VectorXd y(static_cast<long>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x = (params[i] - c) / s;
    double p = 1.0;
    for (int d = 0; d <= degree; ++d, p *= x) V(static_cast<long>(i), d) = p;
    y[static_cast<long>(i)] = values[i];
  }
  const Eigen::VectorXd coef = V.colPivHouseholderQr().solve(y);
  return {coef.data(), coef.data() + coef.size()};
}

AnalyticVanishing analytic_vanishing_test(const std::vector<double>& params, const std::vector<double>& values,
                                          int degree, double tol) {
  AnalyticVanishing a;
  a.coefficients = polynomial_fit(params, values, degree);
  for (double c : a.coefficients) a.max_coefficient = std::max(a.max_coefficient, std::abs(c));
  a.vanishes = a.max_coefficient <= tol;
  return a;
}

UniquenessReport uniqueness_pipeline(const SpaceTimeFn& q, const Geometry& g, const UniquenessOptions& o) {
  require(o.parameter_points > static_cast<std::size_t>(o.fit_degree), ErrorCode::InvalidArgument,
          "parameter grid must exceed the fit degree");
  UniquenessReport rep;
  const RadialGrid annulus(g.eps0, g.eps0 + g.eps2, o.annulus_nodes);
  const std::vector<double> grid_params = lin_spaced(0.0, 1.0, o.parameter_points);
  std::vector<std::vector<double>> q_lambda, q_sigma;  // [param][r]
  const int order = static_cast<int>(o.kernel_order);
  for (double lam : grid_params) {
    const MomentFunction M = moment_Q(q, g, annulus, lam, 0.0, 0.0, o.moment);
    q_lambda.push_back(M.Q.values);
    rep.max_Q_annulus = std::max(rep.max_Q_annulus, M.Q.sup_norm());
    const ProductTable pt(2, lam, 0.0, 0.0, order, make_radial_grid(g.eps0, 3));
    const VolterraKernel K = kernel_B(pt, order, g.eps2, o.annulus_nodes);
    std::vector<double> Hv(annulus.size());
    const GridFunction Bq = volterra_residual(K, M.Q, GridFunction::zeros(annulus));  // Q + int B Q
    for (std::size_t i = 0; i < annulus.size(); ++i) Hv[i] = Bq.values[i];
    const GridFunction H(annulus, Hv);
    rep.max_H = std::max(rep.max_H, H.sup_norm());
    const GronwallCertificate cert = gronwall_certificate(K, M.Q, H, 1e-9);
    rep.gronwall_certified = std::max(rep.gronwall_certified, cert.certified);
    // H on (0, eps2) is the reflection r -> eps0 + eps2 - r of the annulus values.
    const std::vector<double> taus = symmetric_tau_window(g.eps2, 20.0, 32);
    const std::vector<double> rev(Hv.rbegin(), Hv.rend());
    const UniformGrid hg(0.0, g.eps2, annulus.size());
    for (double t : taus) {
      std::vector<double> v(hg.size());
      for (std::size_t i = 0; i < hg.size(); ++i) v[i] = std::exp(2.0 * t * hg.node(i)) * rev[i];
      rep.max_laplace_sample = std::max(rep.max_laplace_sample, std::abs(quad_trapezoid(v, hg.spacing())));
    }
  }
  for (double sig : grid_params) {
    const MomentFunction M = moment_Q(q, g, annulus, 0.0, sig, sig, o.moment);
    q_sigma.push_back(M.Q.values);
    rep.max_Q_annulus = std::max(rep.max_Q_annulus, M.Q.sup_norm());
  }
  for (std::size_t i = 0; i < annulus.size(); ++i) {
    std::vector<double> vl, vs;
    for (std::size_t p = 0; p < grid_params.size(); ++p) {
      vl.push_back(q_lambda[p][i]);
      vs.push_back(q_sigma[p][i]);
    }
    rep.lambda_max_coefficient =
        std::max(rep.lambda_max_coefficient, analytic_vanishing_test(grid_params, vl, o.fit_degree, o.tolerance).max_coefficient);
    rep.sigma_max_coefficient =
        std::max(rep.sigma_max_coefficient, analytic_vanishing_test(grid_params, vs, o.fit_degree, o.tolerance).max_coefficient);
  }
  rep.zero = rep.max_Q_annulus <= o.tolerance && rep.max_H <= o.tolerance && rep.max_laplace_sample <= o.tolerance &&
             rep.lambda_max_coefficient <= o.tolerance && rep.sigma_max_coefficient <= o.tolerance;
  return rep;
}

void write_laplace_sweep_csv(const std::vector<std::pair<double, double>>& sweep, std::ostream& out) {
  out << "tau,value\n" << std::setprecision(17);
  for (const auto& [t, v] : sweep) out << t << ',' << v << '\n';
}

void write_kernel_csv(const VolterraKernel& K, std::ostream& out) {
  out << "r,s,B\n" << std::setprecision(17);
  for (long i = 0; i < K.values.rows(); ++i)
    for (long j = 0; j <= i; ++j)
      out << K.grid.node(static_cast<std::size_t>(i)) << ',' << K.grid.node(static_cast<std::size_t>(j)) << ',' << K.values(i, j) << '\n';
}

void write_moment_csv(const MomentFunction& Q, std::ostream& out) {
  out << "r,Q\n" << std::setprecision(17);
  for (std::size_t i = 0; i < Q.Q.size(); ++i) out << Q.Q.grid.node(i) << ',' << Q.Q.values[i] << '\n';
}

}  // namespace pql
