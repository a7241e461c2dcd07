#include "core/heat_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cstring>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>

namespace pql {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

SpaceTimeField SpaceTimeField::zeros(std::shared_ptr<const SpaceGrid> g, const TimeGrid& t) {
  SpaceTimeField f;
  f.time = t;
  f.levels.assign(t.steps + 1, VectorXd::Zero(static_cast<long>(g->size())));
  f.grid = std::move(g);
  return f;
}

SpaceTimeField SpaceTimeField::sample(std::shared_ptr<const SpaceGrid> g, const TimeGrid& t, const SpaceTimeFn& fn) {
  SpaceTimeField f = zeros(g, t);
  for (std::size_t n = 0; n <= t.steps; ++n)
    for (std::size_t i = 0; i < g->size(); ++i) f.levels[n][static_cast<long>(i)] = fn(t.time(n), g->node(i));
  return f;
}

namespace {

double time_weight(const TimeGrid& t, std::size_t n) {
  return t.dt() * ((n == 0 || n == t.steps) ? 0.5 : 1.0);
}

// Trapezoid weights along the nodes of an arc, ordered by their parameter.
std::vector<double> arc_weights(const SpaceGrid& g, const std::vector<std::size_t>& nodes) {
  std::vector<double> w(nodes.size(), 0.0);
  if (nodes.size() < 2) return w;
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return g.boundary_param(nodes[a]) < g.boundary_param(nodes[b]); });
  const bool angular = g.kind() != SpaceGrid::Kind::Rectangle;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const std::size_t a = order[k], b = order[k + 1];
    double len = g.boundary_param(nodes[b]) - g.boundary_param(nodes[a]);
    if (angular) len *= std::hypot(g.node(nodes[a]).x, g.node(nodes[a]).y);
    w[a] += 0.5 * len;
    w[b] += 0.5 * len;
  }
  return w;
}

}  // namespace

double SpaceTimeField::l2_norm() const {
  double s = 0.0;
  const auto& w = grid->weights();
  for (std::size_t n = 0; n < levels.size(); ++n) {
    double a = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) a += w[i] * levels[n][static_cast<long>(i)] * levels[n][static_cast<long>(i)];
    s += time_weight(time, n) * a;
  }
  return std::sqrt(s);
}

double SpaceTimeField::max_abs() const {
  double m = 0.0;
  for (const auto& l : levels) m = std::max(m, l.cwiseAbs().maxCoeff());
  return m;
}

SpaceTimeField SpaceTimeField::reversed() const {
  SpaceTimeField f = *this;
  std::reverse(f.levels.begin(), f.levels.end());
  return f;
}

SpaceTimeField operator-(const SpaceTimeField& a, const SpaceTimeField& b) {
  require(a.levels.size() == b.levels.size(), ErrorCode::InvalidArgument, "field level counts differ");
  SpaceTimeField c = a;
  for (std::size_t n = 0; n < c.levels.size(); ++n) c.levels[n] -= b.levels[n];
  return c;
}

SpaceTimeField operator*(double s, const SpaceTimeField& a) {
  SpaceTimeField c = a;
  for (auto& l : c.levels) l *= s;
  return c;
}

BoundaryData BoundaryData::zeros(const SpaceGrid& g, const TimeGrid& t) {
  BoundaryData b;
  b.nodes = g.boundary_nodes();
  b.levels.assign(t.steps + 1, VectorXd::Zero(static_cast<long>(b.nodes.size())));
  return b;
}

BoundaryData BoundaryData::sample(const SpaceGrid& g, const TimeGrid& t, const BoundaryArc& arc, const SpaceTimeFn& f,
                                  bool vanish_at_start) {
  BoundaryData b = zeros(g, t);
  b.arc = arc;
  for (std::size_t k = 0; k < b.nodes.size(); ++k) {
    if (!arc.contains(g, b.nodes[k])) continue;
    for (std::size_t n = 0; n <= t.steps; ++n) b.levels[n][static_cast<long>(k)] = f(t.time(n), g.node(b.nodes[k]));
  }
  const VectorXd& edge = vanish_at_start ? b.levels.front() : b.levels.back();
  require(edge.size() == 0 || edge.cwiseAbs().maxCoeff() <= 1e-12, ErrorCode::Precondition,
          vanish_at_start ? "boundary data must vanish at the initial time" : "boundary data must vanish at the final time");
  return b;
}

BoundaryData BoundaryData::reversed() const {
  BoundaryData b = *this;
  std::reverse(b.levels.begin(), b.levels.end());
  return b;
}

BoundaryData BoundaryData::scaled(double s) const {
  BoundaryData b = *this;
  for (auto& l : b.levels) l *= s;
  return b;
}

namespace {

/// One Crank-Nicolson (or implicit Euler) step on the weighted interior system
///   W (u - u_old)/dt + 1/2 [S u + W (d u + c)] + 1/2 [S u_old + W r_old] = 1/2 W (s_old + s_new),
/// where S u includes the boundary values of the new level.
class Stepper {
 public:
  Stepper(const SpaceGrid& g, double dt) : g_(g), dt_(dt) {
    const SpMat& S = g.stiffness();
    std::vector<Eigen::Triplet<double>> t;
    for (int col = 0; col < S.outerSize(); ++col)
      for (SpMat::InnerIterator it(S, col); it; ++it) {
        const long c = g.interior_index(static_cast<std::size_t>(it.col()));
        if (c >= 0) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(c), it.value());
      }
    const long n = static_cast<long>(g.interior().size());
    sii_.resize(n, n);
    sii_.setFromTriplets(t.begin(), t.end());
    sii_.makeCompressed();
  }

  VectorXd step(bool implicit, const VectorXd& u_old_full, const VectorXd& r_old, const VectorXd& d_new,
                const VectorXd& c_new, const VectorXd& s_old, const VectorXd& s_new, const VectorXd& b_new_full) {
    const VectorXd& W = g_.interior_mass();
    const VectorXd u_old = interior(u_old_full);
    VectorXd rhs;
    if (implicit) {
      rhs = W.cwiseProduct(u_old) / dt_ - g_.stiffness() * b_new_full - W.cwiseProduct(c_new) + W.cwiseProduct(s_new);
    } else {
      rhs = W.cwiseProduct(u_old) / dt_ - 0.5 * (g_.stiffness() * u_old_full) - 0.5 * W.cwiseProduct(r_old) -
            0.5 * (g_.stiffness() * b_new_full) - 0.5 * W.cwiseProduct(c_new) + 0.5 * W.cwiseProduct(s_old + s_new);
    }
    Factor& f = factor(implicit, d_new);
    VectorXd x = f.ldlt ? VectorXd(f.ldlt->solve(rhs)) : VectorXd(f.lu->solve(rhs));
    require(x.allFinite(), ErrorCode::Numerical, "linear solve produced non-finite values");
    return x;
  }

  VectorXd interior(const VectorXd& full) const {
    VectorXd v(static_cast<long>(g_.interior().size()));
    for (std::size_t k = 0; k < g_.interior().size(); ++k) v[static_cast<long>(k)] = full[static_cast<long>(g_.interior()[k])];
    return v;
  }

  VectorXd full(const VectorXd& interior_values, const VectorXd& b_new_full) const {
    VectorXd u = b_new_full;
    for (std::size_t k = 0; k < g_.interior().size(); ++k)
      u[static_cast<long>(g_.interior()[k])] = interior_values[static_cast<long>(k)];
    return u;
  }

  /// Infinity norm of the weighted CN residual divided by the mass, for damping decisions.
  double residual(const VectorXd& u_full, const VectorXd& u_old_full, const VectorXd& a_new, const VectorXd& a_old) const {
    const VectorXd& W = g_.interior_mass();
    const VectorXd r = W.cwiseProduct(interior(u_full) - interior(u_old_full)) / dt_ +
                       0.5 * (g_.stiffness() * u_full + W.cwiseProduct(a_new)) +
                       0.5 * (g_.stiffness() * u_old_full + W.cwiseProduct(a_old));
    return r.size() ? r.cwiseQuotient(W).cwiseAbs().maxCoeff() : 0.0;
  }

 private:
  struct Factor {
    bool valid = false;
    VectorXd diag;
    std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt;
    std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
  };

  Factor& factor(bool implicit, const VectorXd& d) {
    Factor& f = implicit ? implicit_ : cn_;
    if (f.valid && f.diag.size() == d.size() && f.diag == d) return f;
    const VectorXd& W = g_.interior_mass();
    const double theta = implicit ? 1.0 : 0.5;
    SpMat M = theta * sii_;
    VectorXd diag = W / dt_ + theta * W.cwiseProduct(d);
    for (long i = 0; i < M.rows(); ++i) M.coeffRef(i, i) += diag[i];
    M.makeCompressed();
    f.lu.reset();
    f.ldlt = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
    f.ldlt->compute(M);
    bool ok = f.ldlt->info() == Eigen::Success && (f.ldlt->vectorD().array() > 0).all();
    if (!ok) {
      f.ldlt.reset();
      f.lu = std::make_unique<Eigen::SparseLU<SpMat>>();
      f.lu->compute(M);
      require(f.lu->info() == Eigen::Success, ErrorCode::Numerical, "singular time-step matrix");
    }
    f.diag = d;
    f.valid = true;
    return f;
  }

  const SpaceGrid& g_;
  double dt_;
  SpMat sii_;
  Factor cn_, implicit_;
};

using LevelProvider = std::function<VectorXd(std::size_t)>;

VectorXd boundary_full(const SpaceGrid& g, const BoundaryData& f, std::size_t n) {
  VectorXd b = VectorXd::Zero(static_cast<long>(g.size()));
  for (std::size_t k = 0; k < f.nodes.size(); ++k) b[static_cast<long>(f.nodes[k])] = f.levels[n][static_cast<long>(k)];
  return b;
}

VectorXd sample_interior(const SpaceGrid& g, const SpaceTimeFn& fn, double t) {
  VectorXd v = VectorXd::Zero(static_cast<long>(g.interior().size()));
  if (!fn) return v;
  for (std::size_t k = 0; k < g.interior().size(); ++k) v[static_cast<long>(k)] = fn(t, g.node(g.interior()[k]));
  return v;
}

void check_boundary_shape(const SpaceGrid& g, const TimeGrid& t, const BoundaryData& f) {
  require(f.nodes == g.boundary_nodes(), ErrorCode::InvalidArgument, "boundary data built for a different grid");
  require(f.levels.size() == t.steps + 1, ErrorCode::InvalidArgument, "boundary data built for a different time grid");
}

SpaceTimeField forward_impl(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const LevelProvider& q,
                            const BoundaryData& f, const LevelProvider& src, const SolverOptions& options) {
  const SpaceGrid& g = *grid;
  require(time.steps >= 1 && time.t1 > time.t0, ErrorCode::InvalidArgument, "time grid must have positive length");
  check_boundary_shape(g, time, f);
  SpaceTimeField out = SpaceTimeField::zeros(grid, time);
  out.levels[0] = boundary_full(g, f, 0);
  Stepper stepper(g, time.dt());
  VectorXd q_old = q(0), s_old = src(0);
  const VectorXd zero = VectorXd::Zero(static_cast<long>(g.interior().size()));
  for (std::size_t n = 0; n < time.steps; ++n) {
    const VectorXd q_new = q(n + 1), s_new = src(n + 1);
    const VectorXd b_new = boundary_full(g, f, n + 1);
    const VectorXd r_old = q_old.cwiseProduct(stepper.interior(out.levels[n]));
    const bool implicit = n < options.implicit_startup_steps;
    const VectorXd x = stepper.step(implicit, out.levels[n], r_old, q_new, zero, s_old, s_new, b_new);
    out.levels[n + 1] = stepper.full(x, b_new);
    q_old = q_new;
    s_old = s_new;
  }
  return out;
}

}  // namespace

SpaceTimeField solve_forward(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                             const BoundaryData& f, const SpaceTimeFn& source_fn, const SpaceTimeField* source_field,
                             const SolverOptions& options) {
  const SpaceGrid& g = *grid;
  LevelProvider qp = [&](std::size_t n) { return sample_interior(g, q, time.time(n)); };
  LevelProvider sp;
  if (source_field) {
    require(source_field->levels.size() == time.steps + 1 && source_field->grid->size() == g.size(),
            ErrorCode::InvalidArgument, "source field shape mismatch");
    sp = [&](std::size_t n) {
      VectorXd v(static_cast<long>(g.interior().size()));
      for (std::size_t k = 0; k < g.interior().size(); ++k)
        v[static_cast<long>(k)] = source_field->levels[n][static_cast<long>(g.interior()[k])];
      return v;
    };
  } else {
    sp = [&](std::size_t n) { return sample_interior(g, source_fn, time.time(n)); };
  }
  return forward_impl(grid, time, qp, f, sp, options);
}

SpaceTimeField solve_adjoint(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                             const BoundaryData& h, const SolverOptions& options) {
  check_boundary_shape(*grid, time, h);
  require(h.levels.back().size() == 0 || h.levels.back().cwiseAbs().maxCoeff() <= 1e-12, ErrorCode::Precondition,
          "adjoint boundary data must vanish at the final time");
  SpaceTimeFn q_rev;
  if (q) q_rev = [&](double t, const Point& x) { return q(time.t0 + time.t1 - t, x); };
  return solve_forward(grid, time, q_rev, h.reversed(), {}, nullptr, options).reversed();
}

RemainderResult solve_remainder(const QuasimodeSpec& spec, const RemainderOptions& o) {
  require(o.horizon > o.margin && o.margin >= 0.0, ErrorCode::InvalidArgument, "need T > delta >= 0");
  require(o.steps >= 2, ErrorCode::InvalidArgument, "remainder solve needs at least 2 time steps");
  const double tau = spec.tau_eff;
  const double h = std::clamp(o.spacing_factor / tau, o.min_spacing, o.max_spacing);
  const std::size_t n_r = static_cast<std::size_t>(std::ceil(o.sector_depth / h)) + 1;
  const std::size_t n_phi = static_cast<std::size_t>(std::ceil(2.0 * o.sector_half_angle / h)) + 1;
  auto grid = std::make_shared<const SpaceGrid>(
      SpaceGrid::polar_sector(1.0 - o.sector_depth, 1.0, -o.sector_half_angle, o.sector_half_angle, n_r, n_phi));
  const SpaceGrid& g = *grid;
  VectorXd F = VectorXd::Zero(static_cast<long>(g.size())), G = F;
  for (std::size_t i = 0; i < g.size(); ++i) {
    F[static_cast<long>(i)] = residual_F_scaled(spec, g.node(i));
    G[static_cast<long>(i)] = residual_G_scaled(spec, g.node(i));
  }
  const VectorXd H = F + G;
  VectorXd H_int(static_cast<long>(g.interior().size()));
  for (std::size_t k = 0; k < g.interior().size(); ++k) H_int[static_cast<long>(k)] = H[static_cast<long>(g.interior()[k])];

  RemainderResult res;
  res.duration = o.horizon - o.margin;
  res.log_scale = -tau * spec.geometry.eps0;
  const TimeGrid time{0.0, res.duration, o.steps};
  const VectorXd qv = VectorXd::Constant(static_cast<long>(g.interior().size()), tau * tau);
  SolverOptions so;
  so.implicit_startup_steps = o.startup_steps;
  SpaceTimeField R = forward_impl(grid, time, [&](std::size_t) { return qv; }, BoundaryData::zeros(g, time),
                                  [&](std::size_t) { return H_int; }, so);
  if (spec.role == Role::Forward) {
    R.time = TimeGrid{o.margin, o.horizon, o.steps};
  } else {
    R = R.reversed();  // R(T - delta) = 0 for the backward problem
  }
  res.field = std::move(R);
  auto log_norm = [&](const VectorXd& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.weight(i) * v[static_cast<long>(i)] * v[static_cast<long>(i)];
    return s > 0.0 ? 0.5 * std::log(s) + res.log_scale : -INFINITY;
  };
  res.log_norm_F = log_norm(F);
  res.log_norm_G = log_norm(G);
  const double nr = res.field.l2_norm();
  res.log_norm_R = nr > 0.0 ? std::log(nr) + res.log_scale : -INFINITY;
  const double hi = std::max(res.log_norm_F, res.log_norm_G);
  if (std::isfinite(hi)) {
    res.log_energy_bound =
        0.5 * std::log(o.horizon) + hi + std::log(std::exp(res.log_norm_F - hi) + std::exp(res.log_norm_G - hi));
  }
  res.energy_inequality = res.log_norm_R <= res.log_energy_bound || !std::isfinite(res.log_norm_R);
  return res;
}

double DtnSample::l2_norm(const SpaceGrid& g, const TimeGrid& t) const {
  const std::vector<double> w = arc_weights(g, nodes);
  double s = 0.0;
  for (std::size_t n = 0; n < values.size(); ++n) {
    double a = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) a += w[k] * values[n][static_cast<long>(k)] * values[n][static_cast<long>(k)];
    s += time_weight(t, n) * a;
  }
  return std::sqrt(s);
}

DtnSample normal_derivative(const SpaceTimeField& u, const BoundaryArc& gamma) {
  const SpaceGrid& g = *u.grid;
  DtnSample d;
  for (std::size_t i : g.boundary_nodes())
    if (gamma.contains(g, i) && g.has_normal_stencil(i)) {
      d.nodes.push_back(i);
      d.params.push_back(g.boundary_param(i));
    }
  for (std::size_t n = 0; n < u.levels.size(); ++n) {
    d.times.push_back(u.time.time(n));
    VectorXd v(static_cast<long>(d.nodes.size()));
    for (std::size_t k = 0; k < d.nodes.size(); ++k) {
      const auto& st = g.normal_stencil(d.nodes[k]);
      double acc = 0.0;
      for (int m = 0; m < 3; ++m) acc += st.coeffs[m] * u.levels[n][static_cast<long>(st.nodes[m])];
      v[static_cast<long>(k)] = acc;
    }
    d.values.push_back(std::move(v));
  }
  return d;
}

DtnSample operator-(const DtnSample& a, const DtnSample& b) {
  require(a.nodes == b.nodes && a.values.size() == b.values.size(), ErrorCode::InvalidArgument, "DtN samples differ in shape");
  DtnSample c = a;
  for (std::size_t n = 0; n < c.values.size(); ++n) c.values[n] -= b.values[n];
  return c;
}

DtnSample operator*(double s, const DtnSample& a) {
  DtnSample c = a;
  for (auto& v : c.values) v *= s;
  return c;
}

DtnSample dtn_map(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                  const BoundaryData& f, const BoundaryArc& gamma) {
  return normal_derivative(solve_forward(grid, time, q, f), gamma);
}

namespace {

SpaceTimeField linearized_solution(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                                   const SpaceTimeField& u0) {
  SpaceTimeField src = SpaceTimeField::zeros(grid, time);
  if (q) {
    for (std::size_t n = 0; n <= time.steps; ++n)
      for (std::size_t i = 0; i < grid->size(); ++i)
        src.levels[n][static_cast<long>(i)] = -q(time.time(n), grid->node(i)) * u0.levels[n][static_cast<long>(i)];
  }
  return solve_forward(grid, time, {}, BoundaryData::zeros(*grid, time), {}, &src);
}

}  // namespace

DtnSample frechet_dtn(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const SpaceTimeFn& q,
                      const BoundaryData& f, const BoundaryArc& gamma) {
  const SpaceTimeField u0 = solve_forward(grid, time, {}, f);
  return normal_derivative(linearized_solution(grid, time, q, u0), gamma);
}

IdentityCheck integral_identity_check(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time,
                                      const SpaceTimeFn& q1, const SpaceTimeFn& q2, const BoundaryData& f,
                                      const BoundaryData& h, const BoundaryArc& gamma) {
  const SpaceGrid& g = *grid;
  const SpaceTimeField w1 = solve_forward(grid, time, {}, f);
  const SpaceTimeField w2 = solve_adjoint(grid, time, {}, h);
  const DtnSample s1 = normal_derivative(linearized_solution(grid, time, q1, w1), gamma);
  const DtnSample s2 = normal_derivative(linearized_solution(grid, time, q2, w1), gamma);
  const std::vector<double> aw = arc_weights(g, s1.nodes);
  std::vector<long> hpos(g.size(), -1);
  for (std::size_t k = 0; k < h.nodes.size(); ++k) hpos[h.nodes[k]] = static_cast<long>(k);
  IdentityCheck c;
  for (std::size_t n = 0; n <= time.steps; ++n) {
    const double wt = time_weight(time, n);
    double b = 0.0;
    for (std::size_t k = 0; k < s1.nodes.size(); ++k)
      b += aw[k] * h.levels[n][hpos[s1.nodes[k]]] * (s1.values[n][static_cast<long>(k)] - s2.values[n][static_cast<long>(k)]);
    c.boundary_side += wt * b;
    double v = 0.0;
    const double t = time.time(n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double dq = (q1 ? q1(t, g.node(i)) : 0.0) - (q2 ? q2(t, g.node(i)) : 0.0);
      v += g.weight(i) * dq * w1.levels[n][static_cast<long>(i)] * w2.levels[n][static_cast<long>(i)];
    }
    c.interior_side += wt * v;
  }
  c.discrepancy = std::abs(c.boundary_side - c.interior_side);
  return c;
}

Nonlinearity Nonlinearity::zero() {
  return {[](double, const Point&, double) { return 0.0; }, [](double, const Point&, double) { return 0.0; },
          [](double, const Point&) { return 0.0; }};
}

Nonlinearity Nonlinearity::quadratic(std::function<double(double, const Point&)> c) {
  return {[c](double t, const Point& x, double u) { return c(t, x) * u * u; },
          [c](double t, const Point& x, double u) { return 2.0 * c(t, x) * u; },
          [c](double t, const Point& x) { return 2.0 * c(t, x); }};
}

Nonlinearity Nonlinearity::cubic(double c) {
  return {[c](double, const Point&, double u) { return c * u * u * u; },
          [c](double, const Point&, double u) { return 3.0 * c * u * u; }, [](double, const Point&) { return 0.0; }};
}

namespace {

void check_hypothesis(const SpaceGrid& g, const TimeGrid& t, const Nonlinearity& a) {
  require(a.a && a.a_u, ErrorCode::InvalidArgument, "nonlinearity needs a and a_u");
  for (std::size_t n : {std::size_t{0}, t.steps / 2, t.steps})
    for (std::size_t i = 0; i < g.size(); i += std::max<std::size_t>(1, g.size() / 16)) {
      const double v = a.a(t.time(n), g.node(i), 0.0), d = a.a_u(t.time(n), g.node(i), 0.0);
      require(v == 0.0 && d == 0.0, ErrorCode::InvalidArgument, "nonlinearity violates a(t,x,0) = a_u(t,x,0) = 0");
    }
}

}  // namespace

SpaceTimeField solve_semilinear(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time, const Nonlinearity& a,
                                const BoundaryData& f, const NewtonOptions& options) {
  const SpaceGrid& g = *grid;
  check_boundary_shape(g, time, f);
  check_hypothesis(g, time, a);
  SpaceTimeField out = SpaceTimeField::zeros(grid, time);
  out.levels[0] = boundary_full(g, f, 0);
  Stepper stepper(g, time.dt());
  const auto& I = g.interior();
  const long m = static_cast<long>(I.size());
  auto eval = [&](const std::function<double(double, const Point&, double)>& fn, double t, const VectorXd& u_int) {
    VectorXd v(m);
    for (long k = 0; k < m; ++k) v[k] = fn(t, g.node(I[static_cast<std::size_t>(k)]), u_int[k]);
    return v;
  };
  const VectorXd zero = VectorXd::Zero(m);
  for (std::size_t n = 0; n < time.steps; ++n) {
    const double t_old = time.time(n), t_new = time.time(n + 1);
    const VectorXd& u_old = out.levels[n];
    const VectorXd a_old = eval(a.a, t_old, stepper.interior(u_old));
    const VectorXd b_new = boundary_full(g, f, n + 1);
    VectorXd uk = stepper.full(stepper.interior(u_old), b_new);
    bool converged = false;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      const VectorXd uk_int = stepper.interior(uk);
      const VectorXd ak = eval(a.a, t_new, uk_int);
      const VectorXd dk = eval(a.a_u, t_new, uk_int);
      const VectorXd ck = ak - dk.cwiseProduct(uk_int);
      VectorXd cand = stepper.full(stepper.step(false, u_old, a_old, dk, ck, zero, zero, b_new), b_new);
      const double r0 = stepper.residual(uk, u_old, ak, a_old);
      double r1 = stepper.residual(cand, u_old, eval(a.a, t_new, stepper.interior(cand)), a_old);
      double theta = 1.0;
      while (r1 > 1.5 * r0 && theta > 1e-3) {
        theta *= 0.5;
        cand = uk + theta * (cand - uk);
        r1 = stepper.residual(cand, u_old, eval(a.a, t_new, stepper.interior(cand)), a_old);
      }
      const double diff = (cand - uk).cwiseAbs().maxCoeff();
      uk = cand;
      if (!uk.allFinite()) break;
      if (diff == 0.0 || diff <= options.tolerance * uk.cwiseAbs().maxCoeff()) {
        converged = true;
        break;
      }
    }
    require(converged, ErrorCode::DataTooLarge, "Newton iteration did not converge; boundary data too large");
    out.levels[n + 1] = uk;
  }
  return out;
}

SecondLinearizationResult second_linearization_check(std::shared_ptr<const SpaceGrid> grid, const TimeGrid& time,
                                                     const Nonlinearity& a, const BoundaryData& f1,
                                                     const BoundaryData& f2, const std::vector<double>& eps_list,
                                                     const NewtonOptions& options) {
  require(!eps_list.empty(), ErrorCode::InvalidArgument, "need at least one epsilon");
  require(a.a_uu0 != nullptr, ErrorCode::InvalidArgument, "nonlinearity needs its second derivative at 0");
  const SpaceGrid& g = *grid;
  SecondLinearizationResult res;
  const SpaceTimeField u1 = solve_forward(grid, time, {}, f1);
  const SpaceTimeField u2 = solve_forward(grid, time, {}, f2);
  SpaceTimeField src = SpaceTimeField::zeros(grid, time);
  for (std::size_t n = 0; n <= time.steps; ++n)
    for (std::size_t i = 0; i < g.size(); ++i)
      src.levels[n][static_cast<long>(i)] = -a.a_uu0(time.time(n), g.node(i)) * u1.levels[n][static_cast<long>(i)] *
                                            u2.levels[n][static_cast<long>(i)];
  const SpaceTimeField v_pde = solve_forward(grid, time, {}, BoundaryData::zeros(g, time), {}, &src);
  res.pde_norm = v_pde.l2_norm();
  res.relative = res.pde_norm > 0.0;
  BoundaryData f12 = f1;
  for (std::size_t n = 0; n < f12.levels.size(); ++n) f12.levels[n] += f2.levels[n];
  for (double e : eps_list) {
    require(e > 0.0, ErrorCode::InvalidArgument, "epsilon values must be positive");
    BoundaryData fe = f1.scaled(e);
    for (std::size_t n = 0; n < fe.levels.size(); ++n) fe.levels[n] += e * f2.levels[n];
    const SpaceTimeField u_ee = solve_semilinear(grid, time, a, fe, options);
    const SpaceTimeField u_e0 = solve_semilinear(grid, time, a, f1.scaled(e), options);
    const SpaceTimeField u_0e = solve_semilinear(grid, time, a, f2.scaled(e), options);
    const SpaceTimeField mixed = (1.0 / (e * e)) * ((u_ee - u_e0) - u_0e);
    const double mn = mixed.l2_norm();
    res.eps.push_back(e);
    res.mixed_norm.push_back(mn);
    res.error.push_back(res.relative ? (mixed - v_pde).l2_norm() / res.pde_norm : mn);
    if (res.relative && e * e * res.pde_norm < 1e-9 * u_ee.l2_norm()) {
      res.warnings.push_back("cancellation: eps^2 ||v|| is below 1e-9 of ||u|| at eps = " + std::to_string(e));
    }
  }
  if (res.eps.size() >= 2) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < res.eps.size(); ++i) {
      if (res.error[i] <= 0.0) continue;
      x.push_back(std::log(res.eps[i]));
      y.push_back(std::log(res.error[i]));
    }
    if (x.size() >= 3) {
      res.observed_order = fit_log_linear(x, y).slope;
    } else if (x.size() == 2) {
      res.observed_order = (y[1] - y[0]) / (x[1] - x[0]);
    }
  }
  return res;
}

void write_field_binary(const SpaceTimeField& f, std::ostream& out) {
  const SpaceGrid& g = *f.grid;
  out.write("PQLF", 4);
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(g.kind()));
  put_u64(f.levels.size());
  put_u64(g.dim1());
  put_u64(g.dim2());
  put_u64(g.size());
  put_f64(f.time.dt());
  put_f64(g.spacing1());
  put_f64(g.spacing2());
  put_f64(f.time.t0);
  put_f64(f.time.t1);
  for (const auto& l : f.levels) out.write(reinterpret_cast<const char*>(l.data()), static_cast<std::streamsize>(sizeof(double) * l.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "failed to write field");
}

FieldHeader read_field_binary(std::istream& in, std::vector<std::vector<double>>& values) {
  char magic[4];
  in.read(magic, 4);
  require(in && std::memcmp(magic, "PQLF", 4) == 0, ErrorCode::Io, "not a field file");
  FieldHeader h;
  auto get = [&](auto& v) { in.read(reinterpret_cast<char*>(&v), sizeof v); };
  get(h.version);
  get(h.grid_kind);
  get(h.levels);
  get(h.dim1);
  get(h.dim2);
  get(h.nodes);
  get(h.dt);
  get(h.h1);
  get(h.h2);
  get(h.t0);
  get(h.t1);
  require(in && h.version == 1, ErrorCode::Io, "unsupported field file version");
  values.assign(h.levels, std::vector<double>(h.nodes));
  for (auto& l : values) in.read(reinterpret_cast<char*>(l.data()), static_cast<std::streamsize>(sizeof(double) * l.size()));
  require(static_cast<bool>(in), ErrorCode::Io, "truncated field file");
  return h;
}

void write_field_slice_csv(const SpaceTimeField& f, std::size_t level, std::ostream& out) {
  require(level < f.levels.size(), ErrorCode::InvalidArgument, "time level out of range");
  out << "x,y,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < f.grid->size(); ++i)
    out << f.grid->node(i).x << ',' << f.grid->node(i).y << ',' << f.levels[level][static_cast<long>(i)] << '\n';
}

void write_dtn_csv(const DtnSample& d, std::ostream& out) {
  out << "t,s,value\n" << std::setprecision(17);
  for (std::size_t n = 0; n < d.values.size(); ++n)
    for (std::size_t k = 0; k < d.nodes.size(); ++k) out << d.times[n] << ',' << d.params[k] << ',' << d.values[n][static_cast<long>(k)] << '\n';
}

}  // namespace pql
