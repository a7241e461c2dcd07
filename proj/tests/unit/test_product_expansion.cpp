#include <algorithm>
#include <sstream>
#include <vector>

#include "core/product_expansion.hpp"
#include "test_support.hpp"

using namespace pql;

namespace {

// Formal series in u = 1/tau: A(tau + s/tau) = sum_j a_j(r) tau^{-j} (1 + s u^2)^{-j}.
std::vector<long double> shifted_amplitude_series(int n, double sigma, double s, long double r, int K) {
  std::vector<long double> c(static_cast<std::size_t>(K) + 1, 0.0L), out(c.size(), 0.0L);
  c[0] = 1.0L;
  for (int k = 1; k <= K; ++k)
    c[static_cast<std::size_t>(k)] =
        -((long double)k * k - k + sigma * sigma - (n - 1) * (n - 3) / 4.0L) / (2.0L * k) * c[static_cast<std::size_t>(k) - 1];
  for (int j = 0; j <= K; ++j) {
    const long double aj = c[static_cast<std::size_t>(j)] * std::pow(r, -(n - 1) / 2.0L - j);
    // binomial series of (1 + s u^2)^{-j}
    long double coef = 1.0L;
    for (int l = 0; j + 2 * l <= K; ++l) {
      out[static_cast<std::size_t>(j + 2 * l)] += aj * coef;
      coef *= -(long double)s * (j + l) / (l + 1);
      if (j == 0) break;
    }
  }
  return out;
}

long double oracle_b(int n, double lambda, double s1, double s2, int k, long double r) {
  const auto D = shifted_amplitude_series(n, s1, lambda, r, k);
  const auto E = shifted_amplitude_series(n, s2, -lambda, r, k);
  long double acc = 0.0L;
  for (int j = 0; j <= k; ++j) acc += D[static_cast<std::size_t>(k - j)] * E[static_cast<std::size_t>(j)];
  return acc * std::pow(r, (long double)(n - 1));
}

}  // namespace

TEST_CASE("shift coefficients") {
  for (int k = 1; k <= 12; ++k) CHECK(shift_coeff(0.7, k, k) == 1.0);
  CHECK(shift_coeff(0.5, 1, 3) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(shift_coeff(0.5, 2, 3) == 0.0);
  // l = 2, binomial(3, 2) = 3
  CHECK(shift_coeff(1.0, 2, 6) == doctest::Approx(3.0).epsilon(1e-15));
  const ShiftCoeffs s = shift_coeffs(0.3, 8);
  for (int k = 1; k <= 8; ++k)
    for (int j = k; j <= 8; ++j) {
      if ((j - k) % 2) CHECK(s(k, j) == 0.0);
    }
  CHECK_PQL_ERROR(shift_coeffs(1.5, 3), ErrorCode::InvalidArgument);
}

TEST_CASE("b_0 is identically one") {
  for (int n : {2, 3, 4})
    for (double lam : {0.0, 0.5, 1.0}) {
      const ProductTable pt = product_tables(n, lam, 0.3, 0.8, 4, make_radial_grid(0.2, 17));
      for (std::size_t i = 0; i < pt.grid().size(); ++i) CHECK(pt.b(0)[i] == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("n = 3 with sigma = 0 has vanishing b_k") {
  for (double lam : {0.0, 0.4, 1.0}) {
    const ProductTable pt = product_tables(3, lam, 0.0, 0.0, 10, make_radial_grid(0.2, 9));
    for (int k = 1; k <= 10; ++k) CHECK(pt.b(k).sup_norm() == 0.0);
    CHECK(verify_b_growth(pt) == 0.0);
  }
}

TEST_CASE("b_1 for n = 2, lambda = 0, sigma = 0") {
  const ProductTable pt = product_tables(2, 0.0, 0.0, 0.0, 3, make_radial_grid(0.2, 21));
  for (std::size_t i = 0; i < pt.grid().size(); ++i) {
    const double r = pt.grid().node(i);
    CHECK(pt.b(1)[i] == doctest::Approx(-0.25 / r).epsilon(1e-14));
  }
  const ProductTable p1 = product_tables(2, 0.0, 0.0, 0.0, 1, make_radial_grid(0.2, 21));
  CHECK(verify_b_growth(p1) == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
}

TEST_CASE("b_k agrees with a formal power-series product") {
  const int N = 14;
  for (int n : {2, 3}) {
    for (double lam : {0.0, 0.6, 1.0}) {
      const ProductTable pt = product_tables(n, lam, 0.25, 1.0, N, make_radial_grid(0.2, 5));
      for (int k = 0; k <= N; ++k)
        for (double r : {0.2, 0.27, 0.4}) {
          const double ref = static_cast<double>(oracle_b(n, lam, 0.25, 1.0, k, r));
          CHECK(close_rel(pt.eval_b(k, r), ref, 1e-12, 1e-300));
        }
    }
  }
}

TEST_CASE("d and e reproduce the stated shifted sums") {
  const ProductTable pt = product_tables(2, 0.8, 0.5, 0.5, 6, make_radial_grid(0.2, 5));
  const AmplitudeTable& a = pt.amplitudes1();
  const double r = 0.3;
  for (int k = 1; k <= 6; ++k) {
    double d = 0.0, e = 0.0;
    for (int j = 1; j <= k; ++j) {
      d += eval_a_k(a, j, r) * shift_coeff(0.8, j, k);
      if ((k - j) % 2 == 0) e += eval_a_k(a, j, r) * std::abs(shift_coeff(0.8, j, k));
    }
    CHECK(close_rel(pt.eval_d(k, r), d, 1e-13, 1e-300));
    CHECK(close_rel(pt.eval_e(k, r), e, 1e-13, 1e-300));
  }
}

TEST_CASE("product tail") {
  SUBCASE("vanishes for n = 3, sigma = 0") {
    const ProductTable pt = product_tables(3, 0.0, 0.0, 0.0, 40, make_radial_grid(0.2, 9));
    for (double tau : {100.0, 1000.0, 5000.0}) CHECK(product_tail_sup(pt, tau) == 0.0);
  }
  SUBCASE("series route agrees with direct subtraction where both are accurate") {
    const ProductTable pt = product_tables(2, 0.5, 0.3, 0.9, 20, make_radial_grid(0.2, 9));
    for (double tau : {30.0, 60.0}) {
      for (double r : {0.2, 0.3, 0.4}) {
        const double s = product_tail(pt, tau, r);
        const double d = product_tail_direct(pt, tau, r);
        CHECK(std::abs(s - d) <= 1e-15 + 1e-6 * std::abs(s));
      }
    }
  }
  SUBCASE("decays in tau with the predicted rate") {
    const double eps0 = 0.2;
    const ProductTable pt = product_tables(2, 1.0, 0.0, 1.0, 60, make_radial_grid(eps0, 33));
    std::vector<std::pair<double, double>> sweep;
    // the truncation order is zero below tau ~ 435, where the tail vanishes identically
    CHECK(product_tail_sup(pt, 400.0) == 0.0);
    for (double tau : {800.0, 1600.0, 3200.0}) sweep.emplace_back(tau, product_tail_sup(pt, tau));
    const DecayFit f = fit_exponential_slope(sweep);
    CHECK(f.slope <= -eps0 / (64.0 * kE) * 0.9);
  }
  SUBCASE("tau below the admissible range is rejected") {
    const ProductTable pt = product_tables(2, 0.0, 0.0, 0.0, 5, make_radial_grid(0.2, 9));
    CHECK_PQL_ERROR(product_tail(pt, 2.5, 0.3), ErrorCode::Precondition);
  }
}

TEST_CASE("growth ratio sweep stays finite") {
  const ProductTable pt = product_tables(2, 1.0, 0.0, 1.0, 60, make_radial_grid(0.2, 33));
  const double g = verify_b_growth(pt);
  CHECK(std::isfinite(g));
  CHECK(g > 0.0);
  CHECK(g < 1.0);
}

TEST_CASE("table CSV writers") {
  const ProductTable pt = product_tables(2, 0.0, 0.0, 0.0, 2, make_radial_grid(0.2, 3));
  std::ostringstream os;
  write_b_table_csv(pt, os);
  CHECK(os.str().rfind("k,r,b_k\n", 0) == 0);
  std::ostringstream ts;
  write_tail_sweep_csv({{400.0, 1e-5}, {800.0, 1e-6}}, ts);
  const std::string text = ts.str();
  CHECK(std::count(text.begin(), text.end(), '\n') >= 2);
}
