#include <sstream>

#include "core/quasimode.hpp"
#include "test_support.hpp"

using namespace pql;

namespace {

// Half-angle subtended on the unit circle by the circle |x - (1+e, 0)| = r, from the law of cosines.
double chord_angle(double e, double r) {
  const double d = 1.0 + e;
  return std::acos((1.0 + d * d - r * r) / (2.0 * d));
}

Point near_p(const Geometry& g, double rho, double psi) { return {g.p.x + rho * std::cos(psi), g.p.y + rho * std::sin(psi)}; }

}  // namespace

TEST_CASE("geometry for gamma = pi/6") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  CHECK(g.eps0 > 0.0);
  CHECK(g.eps0 == doctest::Approx(0.2));
  CHECK(chord_angle(g.eps0, 2 * g.eps0) <= kPi / 6);
  CHECK(g.eps1 == doctest::Approx(0.00736441).epsilon(1e-5));
  CHECK(g.eps2 == doctest::Approx(4.23315e-5).epsilon(1e-5));
  CHECK(g.eps1 < g.eps0 / 4);
  CHECK(g.eps2 < g.eps1 / (32 * kE));
  CHECK(g.certificates.tangency);
  CHECK(g.certificates.cap_containment);
  CHECK(g.certificates.half_plane);
  CHECK(g.x0.x == doctest::Approx(1.2));
  const std::string rep = geometry_report(g);
  CHECK(rep.find("eps0") != std::string::npos);
}

TEST_CASE("small gamma makes the cap condition binding") {
  const double gamma = 0.1;
  const Geometry g = setup_geometry(gamma, 64);
  // independent bisection on the chord angle
  double lo = 1e-9, hi = 0.2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chord_angle(mid, 2 * mid) > gamma ? hi : lo) = mid;
  }
  CHECK(g.eps0 == doctest::Approx(lo).epsilon(1e-10));
  CHECK(chord_angle(g.eps0, 2 * g.eps0) <= gamma * (1 + 1e-12));
  CHECK(g.certificates.cap_containment);
}

TEST_CASE("geometry argument errors") {
  CHECK_PQL_ERROR(setup_geometry(0.0, 64), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(setup_geometry(2.0, 64), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(setup_geometry(1e-9, 64), ErrorCode::Configuration);
}

TEST_CASE("patch polar coordinates round-trip") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  for (double r : {0.2, 0.3, 0.4})
    for (double th : {0.0, 0.7, 1.6, 3.0}) {
      const PatchPolar pp = to_patch_polar(g, from_patch_polar(g, r, th));
      CHECK(pp.r == doctest::Approx(r).epsilon(1e-14));
      CHECK(pp.theta == doctest::Approx(th).epsilon(1e-13));
    }
  // the tangency point sits at r = eps0, theta = pi/2
  const PatchPolar pp = to_patch_polar(g, g.p);
  CHECK(pp.r == doctest::Approx(g.eps0));
  CHECK(pp.theta == doctest::Approx(kPi / 2));
}

TEST_CASE("angular factor") {
  CHECK(angular_factor(0.0, 1.3) == 1.0);
  CHECK(angular_factor(1.0, kPi) == doctest::Approx(23.1407).epsilon(1e-5));
  CHECK(angular_factor(0.5, 0.0) == 1.0);
  CHECK_PQL_ERROR(angular_factor(0.5, -0.1), ErrorCode::Domain);
  CHECK_PQL_ERROR(angular_factor(0.5, 3.2), ErrorCode::Domain);
}

TEST_CASE("cutoff values") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  for (CutoffProfile prof : {CutoffProfile::ExpBridge, CutoffProfile::ExpBridgeSquared}) {
    CHECK(cutoff_chi(g, g.p, prof) == 1.0);
    CHECK(cutoff_chi(g, near_p(g, g.eps0, 2.0), prof) == 0.0);
    CHECK(cutoff_chi(g, near_p(g, 0.2 * g.eps0, 2.5), prof) == 1.0);
    const double mid = cutoff_chi(g, near_p(g, 3 * g.eps0 / 8, 2.5), prof);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    double prev = 1.0;
    for (int i = 0; i <= 40; ++i) {
      const double v = cutoff_chi(g, near_p(g, g.eps0 * (0.25 + 0.25 * i / 40.0), 2.8), prof);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("cutoff derivatives match differences") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  const double h = 1e-6;
  for (double rho : {0.3, 0.37, 0.45}) {
    const Point x = near_p(g, rho * g.eps0, 2.3);
    const CutoffValue c = cutoff_chi_derivatives(g, x);
    const double gx = (cutoff_chi(g, {x.x + h, x.y}) - cutoff_chi(g, {x.x - h, x.y})) / (2 * h);
    const double gy = (cutoff_chi(g, {x.x, x.y + h}) - cutoff_chi(g, {x.x, x.y - h})) / (2 * h);
    const double H = 1e-4;
    const double lap = (cutoff_chi(g, {x.x + H, x.y}) + cutoff_chi(g, {x.x - H, x.y}) + cutoff_chi(g, {x.x, x.y + H}) +
                        cutoff_chi(g, {x.x, x.y - H}) - 4 * cutoff_chi(g, x)) /
                       (H * H);
    CHECK(close_rel(c.grad_x, gx, 1e-5, 1e-6));
    CHECK(close_rel(c.grad_y, gy, 1e-5, 1e-6));
    CHECK(close_rel(c.laplacian, lap, 1e-3, 1e-2));
  }
}

TEST_CASE("quasimode parameters") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  const QuasimodeSpec f = make_quasimode_spec(g, Role::Forward, 50.0, 0.5, 0.3);
  CHECK(f.tau_eff == doctest::Approx(50.0 + 0.01));
  const QuasimodeSpec a = make_quasimode_spec(g, Role::Adjoint, 50.0, 0.5, 0.3);
  CHECK(a.tau_eff == doctest::Approx(50.0 - 0.01));
  CHECK(f.order == truncation_order(g.eps0, 50.0));
  CHECK_PQL_ERROR(make_quasimode_spec(g, Role::Forward, 2.5, 0.0, 0.0), ErrorCode::Precondition);
  CHECK_PQL_ERROR(make_quasimode_spec(g, Role::Forward, 50.0, 1.5, 0.0), ErrorCode::InvalidArgument);
}

TEST_CASE("principal part vanishes where chi does") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  const QuasimodeSpec s = make_quasimode_spec(g, Role::Forward, 40.0, 0.2, 0.5);
  const Point far{g.x0.x - 1.5 * g.eps0, 0.0};
  CHECK(cutoff_chi(g, far) == 0.0);
  CHECK(principal_scaled(s, far) == 0.0);
  CHECK(residual_F_scaled(s, far) == 0.0);
  CHECK(residual_G_scaled(s, far) == 0.0);
  const QuasimodeField fld = assemble_principal(s, 33, 33);
  CHECK(fld.values.size() == 33u * 33u);
  CHECK(fld.time_rate == doctest::Approx(s.tau_eff * s.tau_eff));
}

TEST_CASE("principal part gradient matches differences") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  const QuasimodeSpec s = make_quasimode_spec(g, Role::Adjoint, 30.0, 1.0, 0.8);
  const Point x = from_patch_polar(g, 1.3 * g.eps0, 1.2);
  const ScaledValue u = principal_uncut_scaled(s, x);
  const double h = 1e-6;
  const double gx = (principal_uncut_scaled(s, {x.x + h, x.y}).value - principal_uncut_scaled(s, {x.x - h, x.y}).value) / (2 * h);
  const double gy = (principal_uncut_scaled(s, {x.x, x.y + h}).value - principal_uncut_scaled(s, {x.x, x.y - h}).value) / (2 * h);
  CHECK(close_rel(u.grad_x, gx, 1e-6));
  CHECK(close_rel(u.grad_y, gy, 1e-6));
}

TEST_CASE("remainder F vanishes when the last coefficient does") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  QuasimodeSpec s = make_quasimode_spec(g, Role::Forward, 900.0, 0.0, 0.0);
  REQUIRE(s.order >= 1);
  s.dimension = 3;
  s.amplitude = PartialSum{amplitude_coeffs(3, 0.0, s.order), s.tau_eff, g.eps0};
  for (double r : {1.01, 1.2, 1.6})
    for (double th : {1.5, 1.6}) CHECK(residual_F(s, r * g.eps0, th) == 0.0);
}

TEST_CASE("commutator term") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  const QuasimodeSpec s = make_quasimode_spec(g, Role::Forward, 20.0, 0.3, 0.6);
  SUBCASE("zero where chi is locally constant") {
    CHECK(residual_G_scaled(s, near_p(g, 0.2 * g.eps0, 2.6)) == 0.0);
    CHECK(residual_G_scaled(s, near_p(g, 0.6 * g.eps0, 2.6)) == 0.0);
  }
  SUBCASE("equals Delta(chi U) - chi Delta U by differences") {
    const double H = 2e-4;
    auto lap = [&](auto f, Point x) {
      return (f(Point{x.x + H, x.y}) + f(Point{x.x - H, x.y}) + f(Point{x.x, x.y + H}) + f(Point{x.x, x.y - H}) - 4 * f(x)) /
             (H * H);
    };
    auto chiU = [&](Point x) { return principal_scaled(s, x); };
    auto U = [&](Point x) { return principal_uncut_scaled(s, x).value; };
    for (double rho : {0.3, 0.36, 0.42}) {
      const Point x = near_p(g, rho * g.eps0, 2.4);
      const double fd = lap(chiU, x) - cutoff_chi(g, x) * lap(U, x);
      const double G = residual_G_scaled(s, x);
      CHECK(close_rel(G, fd, 2e-3));
    }
  }
}

TEST_CASE("conjugation identity converges at second order") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  const QuasimodeSpec s = make_quasimode_spec(g, Role::Forward, 20.0, 0.5, 0.5);
  const double d1 = verify_conjugation_identity(s, 1e-3);
  const double d2 = verify_conjugation_identity(s, 5e-4);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.12));
  const double e1 = verify_conjugation_identity_3d(20.0, g.eps0, 1e-3);
  const double e2 = verify_conjugation_identity_3d(20.0, g.eps0, 5e-4);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.12));
  CHECK(verify_conjugation_identity_3d(20.0, g.eps0, 3e-5) <= 1e-6);
}

TEST_CASE("residual norms decay in tau") {
  const Geometry g = setup_geometry(kPi / 6, 64);
  ResidualDecayOptions o;
  o.nodes_u = 121;
  o.nodes_theta = 121;
  const ResidualDecay d = verify_residual_decay(g, {20.0, 60.0, 100.0, 140.0}, o);
  REQUIRE(d.samples.size() == 4);
  CHECK(d.fit.slope < -(g.eps0 + 2 * g.eps2) * 0.9);
  std::ostringstream os;
  write_residual_sweep_csv(d, os);
  CHECK(!os.str().empty());
  CHECK_PQL_ERROR(verify_residual_decay(g, {20.0, 40.0}, o), ErrorCode::InvalidArgument);
}
