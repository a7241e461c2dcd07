#include <sstream>

#include "core/heat_solver.hpp"
#include "test_support.hpp"

using namespace pql;

namespace {

constexpr double kT = 0.5;

std::shared_ptr<const SpaceGrid> unit_square(std::size_t n) {
  return std::make_shared<const SpaceGrid>(SpaceGrid::rectangle(1.0, 1.0, n, n));
}

double max_level_error(const SpaceTimeField& u, const SpaceTimeFn& exact, std::size_t level) {
  double e = 0.0;
  const double t = u.time.time(level);
  for (std::size_t i = 0; i < u.grid->size(); ++i)
    e = std::max(e, std::abs(u.levels[level][static_cast<long>(i)] - exact(t, u.grid->node(i))));
  return e;
}

// Manufactured u = sin(pi t) sin(pi x) sin(pi y): zero initial and boundary values.
double exact_u(double t, const Point& x) { return std::sin(kPi * t) * std::sin(kPi * x.x) * std::sin(kPi * x.y); }

double error_sine(std::size_t n, double q) {
  auto g = unit_square(n);
  const TimeGrid tg{0.0, kT, n - 1};
  auto src = [q](double t, const Point& x) {
    return (kPi * std::cos(kPi * t) + (2 * kPi * kPi + q) * std::sin(kPi * t)) * std::sin(kPi * x.x) * std::sin(kPi * x.y);
  };
  SpaceTimeFn qf;
  if (q != 0.0) qf = [q](double, const Point&) { return q; };
  const SpaceTimeField u = solve_forward(g, tg, qf, BoundaryData::zeros(*g, tg), src);
  return max_level_error(u, exact_u, tg.steps);
}

// Manufactured u = t (x^2 - y^2) with the source x^2 - y^2 and boundary data on all four sides.
double error_boundary(std::size_t n) {
  auto g = unit_square(n);
  const TimeGrid tg{0.0, kT, n - 1};
  auto exact = [](double t, const Point& x) { return t * (x.x * x.x - x.y * x.y); };
  BoundaryData f = BoundaryData::zeros(*g, tg);
  for (std::size_t k = 0; k < f.nodes.size(); ++k)
    for (std::size_t m = 0; m <= tg.steps; ++m) f.levels[m][static_cast<long>(k)] = exact(tg.time(m), g->node(f.nodes[k]));
  const SpaceTimeField u =
      solve_forward(g, tg, {}, f, [](double, const Point& x) { return x.x * x.x - x.y * x.y; });
  return max_level_error(u, exact, tg.steps);
}

BoundaryData side_bump(const SpaceGrid& g, const TimeGrid& tg, int side, bool vanish_at_start = true) {
  const BoundaryArc arc{side, 0.2, 0.8};
  return BoundaryData::sample(
      g, tg, arc,
      [&](double t, const Point& x) {
        const double s = side % 2 == 0 ? x.x : x.y;
        const double w = std::pow(std::sin(kPi * (s - 0.2) / 0.6), 2);
        const double time = vanish_at_start ? std::sin(kPi * t / (2 * tg.t1)) : std::sin(kPi * (tg.t1 - t) / (2 * tg.t1));
        return w * time * time;
      },
      vanish_at_start);
}

}  // namespace

TEST_CASE("zero data gives the zero solution") {
  auto g = unit_square(17);
  const TimeGrid tg{0.0, kT, 8};
  CHECK(solve_forward(g, tg, {}, BoundaryData::zeros(*g, tg)).max_abs() == 0.0);
  CHECK(solve_adjoint(g, tg, {}, BoundaryData::zeros(*g, tg)).max_abs() == 0.0);
}

TEST_CASE("manufactured interior solution converges at second order") {
  for (double q : {0.0, 1.0}) {
    const double e1 = error_sine(17, q), e2 = error_sine(33, q), e3 = error_sine(65, q);
    INFO("q = " << q << " errors " << e1 << " " << e2 << " " << e3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.2));
  }
}

TEST_CASE("manufactured solution with boundary data") {
  // the exact solution is quadratic in space and linear in time, so the scheme reproduces it
  CHECK(error_boundary(9) <= 1e-11);
  CHECK(error_boundary(17) <= 1e-11);
}

TEST_CASE("adjoint equals the forward solve in reversed time") {
  auto g = unit_square(21);
  const TimeGrid tg{0.0, kT, 20};
  const BoundaryData h = side_bump(*g, tg, 1, false);
  const SpaceTimeField w = solve_adjoint(g, tg, {}, h);
  const SpaceTimeField u = solve_forward(g, tg, {}, h.reversed());
  for (std::size_t n = 0; n <= tg.steps; ++n) CHECK((w.levels[n] - u.levels[tg.steps - n]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.levels.back().cwiseAbs().maxCoeff() == 0.0);
  CHECK_PQL_ERROR(BoundaryData::sample(*g, tg, BoundaryArc{1, 0.2, 0.8}, [](double, const Point&) { return 1.0; }, false),
                  ErrorCode::Precondition);
}

TEST_CASE("adjoint manufactured solution converges at second order") {
  // w = sin(pi (T - t)) sin(pi x) sin(pi y) solves -w_t - Delta w = source with w(T) = 0; run it as the
  // forward problem in s = T - t with the same source.
  auto err = [](std::size_t n) {
    auto g = unit_square(n);
    const TimeGrid tg{0.0, kT, n - 1};
    auto src = [](double s, const Point& x) {
      return (kPi * std::cos(kPi * s) + 2 * kPi * kPi * std::sin(kPi * s)) * std::sin(kPi * x.x) * std::sin(kPi * x.y);
    };
    const SpaceTimeField u = solve_forward(g, tg, {}, BoundaryData::zeros(*g, tg), src).reversed();
    auto exact = [](double t, const Point& x) { return exact_u(kT - t, x); };
    return max_level_error(u, exact, 0);
  };
  CHECK(err(17) / err(33) == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("discrete maximum principle") {
  for (std::size_t n : {17u, 33u}) {
    auto g = unit_square(n);
    const TimeGrid tg{0.0, 1.0, 2 * (n - 1)};
    const BoundaryData f = side_bump(*g, tg, 0);
    SolverOptions o;
    o.implicit_startup_steps = 2;
    const SpaceTimeField u = solve_forward(g, tg, [](double, const Point& x) { return 1.0 + x.x; }, f, {}, nullptr, o);
    double lo = 0.0, hi = 0.0;
    for (const auto& l : u.levels) {
      lo = std::min(lo, l.minCoeff());
      hi = std::max(hi, l.maxCoeff());
    }
    CHECK(lo >= -0.02);
    CHECK(hi <= 1.02);
  }
}

TEST_CASE("DtN map") {
  auto g = unit_square(33);
  const TimeGrid tg{0.0, 1.5, 96};
  const BoundaryArc gamma{1, 0.0, 1.0};
  SUBCASE("zero data") {
    const DtnSample d = dtn_map(g, tg, {}, BoundaryData::zeros(*g, tg), gamma);
    for (const auto& v : d.values) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("steady harmonic flux after burn-in") {
    // f = ramp(t) sin(pi y) on x = 1; the steady state sinh(pi x) sin(pi y) / sinh(pi) has flux pi coth(pi) sin(pi y)
    auto ramp = [](double t) { return t < 0.2 ? std::pow(std::sin(kPi * t / 0.4), 2) : 1.0; };
    const BoundaryData f = BoundaryData::sample(*g, tg, gamma, [&](double t, const Point& x) {
      return ramp(t) * std::sin(kPi * x.y);
    });
    const DtnSample d = dtn_map(g, tg, {}, f, gamma);
    const auto& last = d.values.back();
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < d.nodes.size(); ++k) {
      const double y = g->node(d.nodes[k]).y;
      const double exact = kPi * std::cosh(kPi) / std::sinh(kPi) * std::sin(kPi * y);
      err = std::max(err, std::abs(last[static_cast<long>(k)] - exact));
      scale = std::max(scale, std::abs(exact));
    }
    CHECK(err <= 5e-3 * scale);
  }
}

TEST_CASE("Frechet derivative of the DtN map") {
  auto g = unit_square(21);
  const TimeGrid tg{0.0, kT, 20};
  const BoundaryArc gamma{1, 0.2, 0.8};
  const BoundaryData f = side_bump(*g, tg, 1);
  auto q = [](double t, const Point& x) { return (1 + t) * std::exp(-((x.x - 0.5) * (x.x - 0.5) + (x.y - 0.3) * (x.y - 0.3)) / 0.02); };
  SUBCASE("zero coefficient") {
    const DtnSample d = frechet_dtn(g, tg, [](double, const Point&) { return 0.0; }, f, gamma);
    for (const auto& v : d.values) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("linear in q") {
    const DtnSample d1 = frechet_dtn(g, tg, q, f, gamma);
    const DtnSample d3 = frechet_dtn(g, tg, [&](double t, const Point& x) { return 3.0 * q(t, x); }, f, gamma);
    double diff = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < d1.values.size(); ++n) {
      diff = std::max(diff, (d3.values[n] - 3.0 * d1.values[n]).cwiseAbs().maxCoeff());
      scale = std::max(scale, d1.values[n].cwiseAbs().maxCoeff());
    }
    CHECK(scale > 0.0);
    CHECK(diff <= 1e-12 * scale);
  }
  SUBCASE("difference quotients converge at first order") {
    const DtnSample lin = frechet_dtn(g, tg, q, f, gamma);
    const DtnSample base = dtn_map(g, tg, {}, f, gamma);
    std::vector<double> errs;
    for (double s : {1e-1, 1e-2, 1e-3}) {
      const DtnSample ds = dtn_map(g, tg, [&](double t, const Point& x) { return s * q(t, x); }, f, gamma);
      errs.push_back(((1.0 / s) * (ds - base) - lin).l2_norm(*g, tg));
    }
    CHECK(errs[0] / errs[1] == doctest::Approx(10.0).epsilon(0.2));
    CHECK(errs[1] / errs[2] == doctest::Approx(10.0).epsilon(0.2));
  }
}

TEST_CASE("integral identity") {
  auto g = unit_square(21);
  const TimeGrid tg{0.0, kT, 20};
  const BoundaryArc gamma{1, 0.2, 0.8};
  const BoundaryData f = side_bump(*g, tg, 1, true);
  const BoundaryData h = side_bump(*g, tg, 1, false);
  auto q1 = [](double, const Point& x) { return std::exp(-((x.x - 0.6) * (x.x - 0.6) + (x.y - 0.5) * (x.y - 0.5)) / 0.03); };
  auto q2 = [](double, const Point&) { return 0.0; };
  SUBCASE("equal coefficients") {
    const IdentityCheck c = integral_identity_check(g, tg, q1, q1, f, h, gamma);
    CHECK(c.boundary_side == 0.0);
    CHECK(c.interior_side == 0.0);
    CHECK(c.discrepancy == 0.0);
  }
  SUBCASE("swap antisymmetry") {
    const IdentityCheck a = integral_identity_check(g, tg, q1, q2, f, h, gamma);
    const IdentityCheck b = integral_identity_check(g, tg, q2, q1, f, h, gamma);
    CHECK(a.interior_side != 0.0);
    CHECK(b.interior_side == doctest::Approx(-a.interior_side).epsilon(1e-12));
    CHECK(b.boundary_side == doctest::Approx(-a.boundary_side).epsilon(1e-9));
    CHECK(a.discrepancy <= 0.05 * std::abs(a.interior_side));
  }
}

TEST_CASE("semilinear solves") {
  auto g = unit_square(17);
  const TimeGrid tg{0.0, kT, 16};
  const BoundaryData f0 = side_bump(*g, tg, 0);
  SUBCASE("zero data") {
    CHECK(solve_semilinear(g, tg, Nonlinearity::quadratic([](double, const Point&) { return 1.0; }),
                           BoundaryData::zeros(*g, tg))
              .max_abs() == 0.0);
  }
  SUBCASE("zero nonlinearity reproduces the linear solve") {
    const SpaceTimeField a = solve_semilinear(g, tg, Nonlinearity::zero(), f0);
    const SpaceTimeField b = solve_forward(g, tg, {}, f0);
    for (std::size_t n = 0; n <= tg.steps; ++n) CHECK((a.levels[n] - b.levels[n]).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("quadratic nonlinearity perturbs at second order in the data size") {
    const SpaceTimeField lin = solve_forward(g, tg, {}, f0);
    const Nonlinearity a = Nonlinearity::quadratic([](double, const Point&) { return 1.0; });
    std::vector<double> d;
    for (double e : {0.1, 0.05, 0.025}) {
      const SpaceTimeField u = solve_semilinear(g, tg, a, f0.scaled(e));
      d.push_back((u - e * lin).l2_norm());
    }
    CHECK(d[0] / d[1] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(d[1] / d[2] == doctest::Approx(4.0).epsilon(0.1));
  }
  SUBCASE("hypothesis on a is enforced") {
    Nonlinearity bad = Nonlinearity::zero();
    bad.a = [](double, const Point&, double u) { return 1.0 + u; };
    bad.a_u = [](double, const Point&, double) { return 1.0; };
    CHECK_PQL_ERROR(solve_semilinear(g, tg, bad, f0), ErrorCode::InvalidArgument);
  }
  SUBCASE("large data exhausts Newton") {
    const Nonlinearity a = Nonlinearity::quadratic([](double, const Point&) { return -1.0; });
    CHECK_PQL_ERROR(solve_semilinear(g, tg, a, f0.scaled(1e8)), ErrorCode::DataTooLarge);
  }
}

TEST_CASE("second linearization") {
  auto g = unit_square(17);
  const TimeGrid tg{0.0, kT, 16};
  const BoundaryData f1 = side_bump(*g, tg, 0);
  const BoundaryData f2 = side_bump(*g, tg, 1);
  SUBCASE("f2 = 0") {
    const auto r = second_linearization_check(g, tg, Nonlinearity::quadratic([](double, const Point&) { return 1.0; }), f1,
                                              BoundaryData::zeros(*g, tg), {0.1, 0.05});
    CHECK(r.pde_norm == 0.0);
    for (double m : r.mixed_norm) CHECK(m <= 1e-10);
  }
  SUBCASE("cubic has no quadratic part") {
    const auto r = second_linearization_check(g, tg, Nonlinearity::cubic(), f1, f2, {0.2, 0.1, 0.05});
    CHECK(r.pde_norm == 0.0);
    CHECK(r.mixed_norm[2] < r.mixed_norm[0]);
  }
  SUBCASE("quadratic mixed quotient converges at first order") {
    const auto r = second_linearization_check(
        g, tg, Nonlinearity::quadratic([](double t, const Point& x) { return 1.0 + x.x + t; }), f1, f2, {0.2, 0.1, 0.05, 0.025});
    CHECK(r.pde_norm > 0.0);
    CHECK(r.observed_order == doctest::Approx(1.0).epsilon(0.3));
  }
}

TEST_CASE("remainder solve") {
  const Geometry geo = setup_geometry(kPi / 6, 64);
  RemainderOptions o;
  o.steps = 8;
  for (Role role : {Role::Forward, Role::Adjoint}) {
    const QuasimodeSpec s = make_quasimode_spec(geo, role, 20.0, 0.5, 0.5);
    const RemainderResult r = solve_remainder(s, o);
    CHECK(std::isfinite(r.log_norm_R));
    CHECK(r.energy_inequality);
    CHECK(r.log_norm_R <= r.log_energy_bound);
  }
}

TEST_CASE("binary field round trip") {
  auto g = unit_square(9);
  const TimeGrid tg{0.0, kT, 4};
  const SpaceTimeField u = SpaceTimeField::sample(g, tg, [](double t, const Point& x) { return t + 2 * x.x - x.y * x.y; });
  std::stringstream buf;
  write_field_binary(u, buf);
  std::vector<std::vector<double>> values;
  const FieldHeader h = read_field_binary(buf, values);
  CHECK(h.version == 1);
  CHECK(h.levels == 5);
  CHECK(h.nodes == g->size());
  CHECK(h.dim1 == 9);
  CHECK(h.t1 == kT);
  CHECK(h.dt == doctest::Approx(tg.dt()));
  REQUIRE(values.size() == 5);
  for (std::size_t n = 0; n < 5; ++n)
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(values[n][i] == u.levels[n][static_cast<long>(i)]);
  std::stringstream junk("not a field");
  CHECK_PQL_ERROR(read_field_binary(junk, values), ErrorCode::Io);
}

TEST_CASE("CSV writers") {
  auto g = unit_square(5);
  const TimeGrid tg{0.0, kT, 2};
  const SpaceTimeField u = SpaceTimeField::zeros(g, tg);
  std::ostringstream a;
  write_field_slice_csv(u, 1, a);
  CHECK(!a.str().empty());
  CHECK_PQL_ERROR(write_field_slice_csv(u, 7, a), ErrorCode::InvalidArgument);
}
