#include <random>
#include <vector>

#include "core/numerics.hpp"
#include "test_support.hpp"

using namespace pql;

TEST_CASE("radial grid places endpoints and midpoint") {
  const RadialGrid g = make_radial_grid(0.1, 3);
  REQUIRE(g.size() == 3);
  CHECK(g.node(0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(g.node(1) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(g.node(2) == 0.2);
}

TEST_CASE("radial grid spacing") {
  CHECK(make_radial_grid(0.1, 101).spacing() == doctest::Approx(0.001).epsilon(1e-13));
  const RadialGrid g = make_radial_grid(0.05, 11);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.node(i) == doctest::Approx(0.05 + 0.005 * i).epsilon(1e-14));
  CHECK(g.node(10) == 0.1);
}

TEST_CASE("grid construction rejects bad input") {
  CHECK_PQL_ERROR(make_radial_grid(0.0, 11), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(make_radial_grid(-1.0, 11), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(make_radial_grid(0.1, 2), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(make_uniform_grid(1.0, 0.5, 5), ErrorCode::InvalidArgument);
}

TEST_CASE("trapezoid on affine integrands is exact") {
  const RadialGrid g = make_radial_grid(0.1, 101);
  CHECK(quad_trapezoid(GridFunction::sample(g, [](double) { return 1.0; })) == doctest::Approx(0.1).epsilon(1e-13));
  const double lin = quad_trapezoid(GridFunction::sample(g, [](double r) { return r; }));
  CHECK(std::abs(lin - 0.015) <= 1e-12);
  const double aff = quad_trapezoid(GridFunction::sample(g, [](double r) { return 3.0 - 7.0 * r; }));
  const double exact = 3.0 * 0.1 - 3.5 * (0.04 - 0.01);
  CHECK(std::abs(aff - exact) <= 1e-12 * std::abs(exact));
}

TEST_CASE("trapezoid error drops by four when the spacing halves") {
  auto err = [](std::size_t m) {
    const RadialGrid g = make_radial_grid(0.1, m);
    const double exact = (0.008 - 0.001) / 3.0;
    return std::abs(quad_trapezoid(GridFunction::sample(g, [](double r) { return r * r; })) - exact);
  };
  for (std::size_t m : {11u, 21u, 41u}) {
    const double ratio = err(m) / err(2 * m - 1);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
  const RadialGrid g = make_radial_grid(0.1, 65);
  const double e1 = std::abs(quad_trapezoid(GridFunction::sample(g, [](double r) { return std::exp(3 * r); })) -
                             (std::exp(0.6) - std::exp(0.3)) / 3.0);
  const RadialGrid g2 = make_radial_grid(0.1, 129);
  const double e2 = std::abs(quad_trapezoid(GridFunction::sample(g2, [](double r) { return std::exp(3 * r); })) -
                             (std::exp(0.6) - std::exp(0.3)) / 3.0);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("cumulative trapezoid matches the running integral") {
  std::vector<double> v{0.0, 1.0, 2.0, 3.0, 4.0};
  const auto c = cumulative_trapezoid(v, 0.5);
  REQUIRE(c.size() == 5);
  CHECK(c[0] == 0.0);
  // samples of f(x) = 2x at x = i/2, so the running integral is x^2
  for (std::size_t i = 0; i < 5; ++i) CHECK(c[i] == doctest::Approx(0.25 * double(i * i)));
}

TEST_CASE("exponential slope on exact data") {
  std::vector<std::pair<double, double>> s{{1, std::exp(-2.0)}, {2, std::exp(-4.0)}, {3, std::exp(-6.0)}};
  const DecayFit f = fit_exponential_slope(s);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-13));
  CHECK(f.residual <= 1e-12);
  CHECK(f.samples_used == 3);

  std::vector<std::pair<double, double>> s5{{1, 5 * std::exp(-1.0)}, {2, 5 * std::exp(-2.0)}, {3, 5 * std::exp(-3.0)}};
  const DecayFit f5 = fit_exponential_slope(s5);
  CHECK(f5.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-13));
  CHECK(f5.slope == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("exponential slope on noisy data stays within two percent") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> eta(0.0, 1.0);
  const double a = 0.75, C = 3.0;
  std::vector<std::pair<double, double>> s;
  for (int i = 0; i < 40; ++i) {
    const double t = 1.0 + 0.5 * i;
    s.emplace_back(t, C * std::exp(-a * t) * (1.0 + 0.01 * eta(rng)));
  }
  const DecayFit f = fit_exponential_slope(s);
  CHECK(std::abs(f.slope + a) <= 0.02 * a);
}

TEST_CASE("exponential slope drops the smallest fifth once magnitudes underflow") {
  // ten samples, the last two sit in the subnormal range with a corrupted rate
  std::vector<std::pair<double, double>> s;
  for (int i = 0; i < 8; ++i) s.emplace_back(i, std::exp(-80.0 * i));
  s.emplace_back(8, 1e-310);
  s.emplace_back(9, 4e-320);
  const DecayFit f = fit_exponential_slope(s);
  CHECK(f.samples_used == 8);
  CHECK(f.slope == doctest::Approx(-80.0).epsilon(1e-12));
}

TEST_CASE("log-linear fit works far below the double range") {
  std::vector<double> x, ly;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i);
    ly.push_back(-800.0 - 3.0 * i);
  }
  const DecayFit f = fit_log_linear(x, ly);
  CHECK(f.slope == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(-800.0).epsilon(1e-12));
}

TEST_CASE("slope fit errors") {
  std::vector<std::pair<double, double>> neg{{1, 1.0}, {2, -1.0}, {3, 0.5}};
  CHECK_PQL_ERROR(fit_exponential_slope(neg), ErrorCode::InvalidArgument);
  std::vector<std::pair<double, double>> zero{{1, 1.0}, {2, 0.0}, {3, 0.5}};
  CHECK_PQL_ERROR(fit_exponential_slope(zero), ErrorCode::InvalidArgument);
  std::vector<std::pair<double, double>> same{{2, 1.0}, {2, 0.3}, {2, 0.5}};
  CHECK_PQL_ERROR(fit_exponential_slope(same), ErrorCode::RankDeficient);
  std::vector<std::pair<double, double>> two{{1, 1.0}, {2, 0.3}};
  CHECK_PQL_ERROR(fit_exponential_slope(two), ErrorCode::InvalidArgument);
}

TEST_CASE("log-real arithmetic") {
  const LogReal a = LogReal::from_double(-3.0);
  const LogReal b = LogReal::from_double(2.0);
  CHECK((a * b).to_double() == doctest::Approx(-6.0));
  CHECK((a + b).to_double() == doctest::Approx(-1.0));
  CHECK((a + LogReal::from_double(3.0)).is_zero());
  CHECK(LogReal::from_double(0.0).is_zero());
  const LogReal big{1, 1000.0};
  CHECK((big * LogReal{1, -999.0}).to_double() == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("binomials") {
  CHECK(binomial_exact(10, 3) == 120u);
  CHECK(binomial_exact(60, 30) == 118264581564861424ull);
  CHECK(binomial(5, 0) == 1.0);
  CHECK(std::exp(log_binomial(40.0, 20.0)) == doctest::Approx(137846528820.0).epsilon(1e-12));
  CHECK_PQL_ERROR(binomial_exact(3, 5), ErrorCode::InvalidArgument);
}

TEST_CASE("spaced point sets") {
  const auto l = log_spaced(1.0, 1000.0, 4);
  REQUIRE(l.size() == 4);
  CHECK(l[1] == doctest::Approx(10.0));
  CHECK(l[3] == 1000.0);
  const auto u = lin_spaced(0.0, 1.0, 5);
  CHECK(u[2] == doctest::Approx(0.5));
}

TEST_CASE("parallel map is deterministic and index ordered") {
  const auto serial = parallel_map<double>(100, 1, [](std::size_t i) { return std::sin(double(i)); });
  const auto par = parallel_map<double>(100, 4, [](std::size_t i) { return std::sin(double(i)); });
  CHECK(serial == par);
}
