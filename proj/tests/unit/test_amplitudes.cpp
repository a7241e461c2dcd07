#include <algorithm>
#include <sstream>
#include <vector>

#include "core/amplitudes.hpp"
#include "test_support.hpp"

using namespace pql;

namespace {

// Independent long-double recursion for c_k.
std::vector<long double> oracle_coeffs(int n, long double sigma, int N) {
  std::vector<long double> c(static_cast<std::size_t>(N) + 1);
  c[0] = 1.0L;
  for (int k = 1; k <= N; ++k) {
    const long double kk = k;
    const long double br = kk * kk - kk + sigma * sigma - (n - 1) * (n - 3) / 4.0L;
    c[static_cast<std::size_t>(k)] = -br / (2.0L * kk) * c[static_cast<std::size_t>(k) - 1];
  }
  return c;
}

long double oracle_A(int n, long double sigma, long double tau, long double r, int N) {
  const auto c = oracle_coeffs(n, sigma, N);
  long double s = 0.0L;
  for (int k = N; k >= 0; --k)
    s += c[static_cast<std::size_t>(k)] * std::pow(r, -(n - 1) / 2.0L - k) * std::pow(tau, -static_cast<long double>(k));
  return s;
}

}  // namespace

TEST_CASE("order zero table holds only c_0 = 1") {
  for (int n : {2, 3, 5})
    for (double s : {0.0, 0.3, 1.0}) {
      const AmplitudeTable t = amplitude_coeffs(n, s, 0);
      CHECK(t.order() == 0);
      CHECK(t.coeff(0) == 1.0);
    }
}

TEST_CASE("n = 3, sigma = 0 kills every coefficient after c_0") {
  const AmplitudeTable t = amplitude_coeffs(3, 0.0, 5);
  CHECK(t.coeff(0) == 1.0);
  for (int k = 1; k <= 5; ++k) {
    CHECK(t.coeff(k) == 0.0);
    CHECK(t.coeff_log(k).is_zero());
  }
}

TEST_CASE("n = 2, sigma = 0 first coefficients") {
  const AmplitudeTable t = amplitude_coeffs(2, 0.0, 2);
  CHECK(t.coeff(1) == -1.0 / 8.0);
  CHECK(t.coeff(2) == 9.0 / 128.0);
}

TEST_CASE("coefficients agree with an independent recursion") {
  for (int n : {2, 3, 4}) {
    for (double s : {0.0, 0.5, 1.0}) {
      const AmplitudeTable t = amplitude_coeffs(n, s, 60);
      const auto c = oracle_coeffs(n, s, 60);
      for (int k = 0; k <= 60; ++k) {
        const long double expect = c[static_cast<std::size_t>(k)];
        if (expect == 0.0L) {
          CHECK(t.coeff(k) == 0.0);
        } else {
          CHECK(close_rel(t.coeff(k), static_cast<double>(expect), 1e-13));
          CHECK(t.coeff_log(k).log_abs == doctest::Approx(std::log(std::abs(static_cast<double>(expect)))).epsilon(1e-13));
        }
      }
    }
  }
}

TEST_CASE("huge orders stay available in log form") {
  const AmplitudeTable t = amplitude_coeffs(2, 1.0, 400);
  CHECK_FALSE(t.representable(400));
  CHECK_PQL_ERROR(t.coeff(400), ErrorCode::Numerical);
  // |c_k / c_{k-1}| = (k^2 - k + 1 + 1/4) / (2k)
  double log_abs = 0.0;
  for (int k = 1; k <= 400; ++k) log_abs += std::log((k * double(k) - k + 1.25) / (2.0 * k));
  CHECK(t.coeff_log(400).log_abs == doctest::Approx(log_abs).epsilon(1e-12));
  CHECK(t.coeff_log(400).sign == 1);
}

TEST_CASE("eval_a_k examples") {
  CHECK(eval_a_k(amplitude_coeffs(2, 0.0, 3), 0, 1.0) == 1.0);
  CHECK(eval_a_k(amplitude_coeffs(3, 0.0, 3), 1, 0.5) == 0.0);
  const double v = eval_a_k(amplitude_coeffs(2, 0.0, 3), 1, 2.0);
  CHECK(v == doctest::Approx(-0.125 * std::pow(2.0, -1.5)).epsilon(1e-14));
  CHECK(v == doctest::Approx(-0.0441942).epsilon(1e-6));
  CHECK_PQL_ERROR(eval_a_k(amplitude_coeffs(2, 0.0, 3), 1, 0.0), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(eval_a_k(amplitude_coeffs(2, 0.0, 3), 1, -1.0), ErrorCode::InvalidArgument);
}

TEST_CASE("eval_a_k_prime matches a centred difference") {
  const AmplitudeTable t = amplitude_coeffs(2, 0.7, 6);
  for (int k = 0; k <= 6; ++k) {
    const double r = 0.3, h = 1e-5;
    const double fd = (eval_a_k(t, k, r + h) - eval_a_k(t, k, r - h)) / (2 * h);
    CHECK(close_rel(eval_a_k_prime(t, k, r), fd, 1e-7));
  }
}

TEST_CASE("truncated sum A") {
  SUBCASE("n = 3, sigma = 0 is exactly 1/r") {
    for (double tau : {10.0, 1000.0, 1e5}) {
      const PartialSum ps = make_partial_sum(3, 0.0, tau, 0.1);
      for (double r : {0.1, 0.13, 0.2}) CHECK(eval_A(ps, r) == doctest::Approx(1.0 / r).epsilon(1e-15));
    }
  }
  SUBCASE("N = 0 gives a single term") {
    const PartialSum ps = make_partial_sum(4, 0.5, 100.0, 0.1);
    REQUIRE(ps.table.order() == 0);
    CHECK(eval_A(ps, 0.15) == doctest::Approx(std::pow(0.15, -1.5)).epsilon(1e-15));
  }
  SUBCASE("n = 2, sigma = 0 against long-double summation") {
    for (double tau : {100.0, 5e3, 1e5}) {
      const PartialSum ps = make_partial_sum(2, 0.0, tau, 0.1);
      CHECK(ps.table.order() == truncation_order(0.1, tau));
      const long double ref = oracle_A(2, 0.0L, tau, 0.15L, ps.table.order());
      CHECK(close_rel(eval_A(ps, 0.15), static_cast<double>(ref), 1e-14));
    }
  }
  SUBCASE("domain is [eps0, 2 eps0]") {
    const PartialSum ps = make_partial_sum(2, 0.0, 100.0, 0.1);
    CHECK_PQL_ERROR(eval_A(ps, 0.05), ErrorCode::Domain);
    CHECK_PQL_ERROR(eval_A(ps, 0.21), ErrorCode::Domain);
  }
}

TEST_CASE("truncation order formula") {
  CHECK(truncation_order(0.1, 100.0) == 0);
  CHECK(truncation_order(0.2, 5000.0) == static_cast<int>(std::floor(1000.0 / (32.0 * kE))));
}

TEST_CASE("recursive ODE residuals") {
  CHECK(ode_residual(amplitude_coeffs(3, 0.0, 4), 1, 0.7) == 0.0);
  CHECK(std::abs(ode_residual(amplitude_coeffs(2, 0.0, 4), 1, 1.0)) <= 1e-13);
  const AmplitudeTable t = amplitude_coeffs(2, 1.0, 5);
  CHECK(std::abs(ode_residual(t, 3, 0.12)) <= 1e-10 * ode_residual_scale(t, 3, 0.12));
  CHECK_PQL_ERROR(ode_residual(t, 0, 0.5), ErrorCode::InvalidArgument);
}

TEST_CASE("ODE holds when derivatives are taken numerically") {
  // 2 a_k' + (n-1)/r a_k - r^{1-n} (r^{n-1} a_{k-1}')' - sigma^2 r^{-2} a_{k-1}, all by differences
  for (int n : {2, 3, 4}) {
    const double sigma = 0.6;
    const AmplitudeTable t = amplitude_coeffs(n, sigma, 5);
    const double r = 0.8, h = 1e-4;
    for (int k = 1; k <= 5; ++k) {
      auto a = [&](int j, double x) { return eval_a_k(t, j, x); };
      auto flux = [&](double x) {
        return std::pow(x, n - 1) * (a(k - 1, x + h) - a(k - 1, x - h)) / (2 * h);
      };
      const double lhs = 2 * (a(k, r + h) - a(k, r - h)) / (2 * h) + (n - 1) / r * a(k, r);
      const double rhs = std::pow(r, 1 - n) * (flux(r + h) - flux(r - h)) / (2 * h) + sigma * sigma / (r * r) * a(k - 1, r);
      CHECK(std::abs(lhs - rhs) <= 1e-5 * std::max(1.0, ode_residual_scale(t, k, r)));
    }
  }
}

TEST_CASE("coefficient bound constant") {
  CHECK(coeff_bound_constant(amplitude_coeffs(3, 0.0, 7)) == doctest::Approx(1.0));
  CHECK(coeff_bound_constant(amplitude_coeffs(2, 0.0, 1)) == doctest::Approx(1.0));
  const double K = coeff_bound_constant(amplitude_coeffs(2, 1.0, 200));
  CHECK(std::isfinite(K));
  CHECK(K >= 1.0);
  // the per-k ratio |c_k| 2^k / (k+1)! is eventually non-increasing
  const AmplitudeTable t = amplitude_coeffs(2, 1.0, 200);
  double prev = INFINITY;
  for (int k = 10; k <= 200; ++k) {
    const double v = t.coeff_log(k).log_abs + k * std::log(2.0) - std::lgamma(k + 2.0);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("amplitude CSV lists every coefficient") {
  std::ostringstream os;
  write_amplitude_csv(amplitude_coeffs(2, 0.0, 3), os);
  const std::string s = os.str();
  CHECK(s.rfind("k,sign,log_abs_c,c\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 5);
}

TEST_CASE("argument validation") {
  CHECK_PQL_ERROR(amplitude_coeffs(2, 1.5, 3), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(amplitude_coeffs(2, -0.1, 3), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(amplitude_coeffs(1, 0.0, 3), ErrorCode::InvalidArgument);
  CHECK_PQL_ERROR(amplitude_coeffs(2, 0.0, -1), ErrorCode::InvalidArgument);
}
