#include "core/product_expansion.hpp"

#include <algorithm>
#include <iomanip>

namespace pql {

double shift_coeff(double lambda, int k, int j) {
  require(k >= 1 && j >= k, ErrorCode::InvalidArgument, "shift coefficient needs 1 <= k <= j");
  if ((j - k) % 2 != 0) return 0.0;
  const int l = (j - k) / 2;
  const unsigned top = static_cast<unsigned>((j + k - 2) / 2);
  const double c = binomial(top, static_cast<unsigned>(l));
  return (l % 2 == 0 ? 1.0 : -1.0) * std::pow(lambda, l) * c;
}

ShiftCoeffs::ShiftCoeffs(double lambda, int order) : lambda_(lambda), N_(order) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  require(order >= 1, ErrorCode::InvalidArgument, "shift table needs N >= 1");
  s_.resize(static_cast<std::size_t>(order) + 1);
  for (int k = 1; k <= order; ++k) {
    s_[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(order) + 1, 0.0);
    for (int j = k; j <= order; ++j) s_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = shift_coeff(lambda, k, j);
  }
}

double ShiftCoeffs::operator()(int k, int j) const {
  require(k >= 1 && k <= j && j <= N_, ErrorCode::InvalidArgument, "shift index out of range");
  return s_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
}

ShiftCoeffs shift_coeffs(double lambda, int order) { return ShiftCoeffs(lambda, order); }

namespace {

// alpha[k][j] with d_k = r^{-(n-1)/2} sum_j alpha[k][j] r^{-j}; signed_lambda is -lambda for d and +lambda for e.
std::vector<std::vector<double>> shifted_coefficients(const AmplitudeTable& amp, double signed_lambda) {
  const int N = amp.order();
  std::vector<std::vector<double>> alpha(static_cast<std::size_t>(N) + 1,
                                         std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
  alpha[0][0] = 1.0;
  for (int k = 1; k <= N; ++k) {
    for (int j = 1; j <= k; ++j) {
      if ((k - j) % 2 != 0) continue;
      const int l = (k - j) / 2;
      const double s = std::pow(signed_lambda, l) * binomial(static_cast<unsigned>((k + j - 2) / 2), static_cast<unsigned>(l));
      alpha[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = amp.coeff(j) * s;
    }
  }
  return alpha;
}

double horner_inverse(const std::vector<double>& coeffs, double r) {
  const double x = 1.0 / r;
  double acc = 0.0;
  for (std::size_t p = coeffs.size(); p-- > 0;) acc = acc * x + coeffs[p];
  return acc;
}

}  // namespace

ProductTable::ProductTable(int n, double lambda, double sigma1, double sigma2, int order, const RadialGrid& grid)
    : n_(n), lambda_(lambda), sigma1_(sigma1), sigma2_(sigma2), N_(order), grid_(grid) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  require(grid.lo() > 0.0, ErrorCode::InvalidArgument, "radial grid must start at eps0 > 0");
  amp1_ = amplitude_coeffs(n, sigma1, order);
  amp2_ = amplitude_coeffs(n, sigma2, order);
  for (int k = 0; k <= order; ++k)
    require(amp1_.representable(k) && amp2_.representable(k), ErrorCode::Numerical,
            "product table order too large for double-precision coefficients");
  alpha1_ = shifted_coefficients(amp1_, -lambda);
  alpha2_ = shifted_coefficients(amp2_, lambda);
  const auto sz = static_cast<std::size_t>(order) + 1;
  beta_.assign(sz, std::vector<double>(sz, 0.0));
  for (std::size_t k = 0; k < sz; ++k)
    for (std::size_t i = 0; i <= k; ++i)
      for (std::size_t j1 = 0; j1 <= k - i; ++j1) {
        const double a = alpha1_[k - i][j1];
        if (a == 0.0) continue;
        for (std::size_t j2 = 0; j2 <= i; ++j2) beta_[k][j1 + j2] += a * alpha2_[i][j2];
      }
  for (const auto& row : beta_)
    for (double v : row) require(std::isfinite(v), ErrorCode::Numerical, "product coefficients overflow");
  for (int k = 0; k <= order; ++k) {
    d_.push_back(GridFunction::sample(grid, [&](double r) { return eval_d(k, r); }));
    e_.push_back(GridFunction::sample(grid, [&](double r) { return eval_e(k, r); }));
    b_.push_back(GridFunction::sample(grid, [&](double r) { return eval_b(k, r); }));
  }
}

double ProductTable::eval_b(int k, double r) const {
  require(k >= 0 && k <= N_, ErrorCode::InvalidArgument, "b index out of range");
  return horner_inverse(beta_[static_cast<std::size_t>(k)], r);
}

double ProductTable::eval_d(int k, double r) const {
  require(k >= 0 && k <= N_, ErrorCode::InvalidArgument, "d index out of range");
  return std::pow(r, -0.5 * (n_ - 1)) * horner_inverse(alpha1_[static_cast<std::size_t>(k)], r);
}

double ProductTable::eval_e(int k, double r) const {
  require(k >= 0 && k <= N_, ErrorCode::InvalidArgument, "e index out of range");
  return std::pow(r, -0.5 * (n_ - 1)) * horner_inverse(alpha2_[static_cast<std::size_t>(k)], r);
}

ProductTable product_tables(int n, double lambda, double sigma1, double sigma2, int order, const RadialGrid& grid) {
  return ProductTable(n, lambda, sigma1, sigma2, order, grid);
}

double tau_lower_bound(int n, double eps0) { return 1.0 + std::min(static_cast<double>(n), 64.0 * kE / eps0); }

namespace {

int checked_order(const ProductTable& pt, double tau) {
  require(tau > tau_lower_bound(pt.dimension(), pt.eps0()), ErrorCode::Precondition,
          "tau below the admissible range 1 + min{n, 64e/eps0}");
  const int N = truncation_order(pt.eps0(), tau);
  require(N <= pt.order(), ErrorCode::Precondition, "product table order is smaller than N(tau)");
  return N;
}

// Coefficients of the expansion A_{tau +- lambda/tau}(r) = sum_m D_m tau^{-m}, with tau^{-m} folded in.
std::vector<long double> shifted_series(const AmplitudeTable& amp, int N, double signed_lambda, double tau, double r,
                                        int m_max) {
  std::vector<long double> out(static_cast<std::size_t>(m_max) + 1, 0.0L);
  const long double x = static_cast<long double>(signed_lambda) / (static_cast<long double>(tau) * tau);
  for (int k = 0; k <= N; ++k) {
    const long double w = static_cast<long double>(amp.coeff(k)) *
                          std::pow(static_cast<long double>(r), static_cast<long double>(amp.radial_power(k))) /
                          std::pow(static_cast<long double>(tau), static_cast<long double>(k));
    if (w == 0.0L) continue;
    out[static_cast<std::size_t>(k)] += w;
    if (k == 0) continue;
    long double binom = 1.0L, xp = 1.0L;
    for (int l = 1; k + 2 * l <= m_max; ++l) {
      binom *= static_cast<long double>(k - 1 + l) / l;
      xp *= x;
      out[static_cast<std::size_t>(k + 2 * l)] += w * binom * xp;
    }
  }
  return out;
}

}  // namespace

double product_tail(const ProductTable& pt, double tau, double r) {
  const int N = checked_order(pt, tau);
  require(r > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
  int extra = 0;
  if (pt.lambda() > 0.0) {
    const double q = 4.0 * pt.lambda() / (tau * tau);
    extra = static_cast<int>(std::ceil(36.0 * std::log(10.0) / -std::log(q)));
  }
  const int m_max = 2 * N + 2 * extra + 2;
  const auto D = shifted_series(pt.amplitudes1(), N, -pt.lambda(), tau, r, m_max);
  const auto E = shifted_series(pt.amplitudes2(), N, pt.lambda(), tau, r, m_max);
  long double acc = 0.0L;
  for (int j = m_max; j >= 0; --j)
    for (int m = m_max; m >= 0; --m)
      if (j + m > N) acc += D[static_cast<std::size_t>(j)] * E[static_cast<std::size_t>(m)];
  return static_cast<double>(acc * std::pow(static_cast<long double>(r), static_cast<long double>(pt.dimension() - 1)));
}

double product_tail_direct(const ProductTable& pt, double tau, double r) {
  const int N = checked_order(pt, tau);
  const long double t1 = static_cast<long double>(tau) + pt.lambda() / static_cast<long double>(tau);
  const long double t2 = static_cast<long double>(tau) - pt.lambda() / static_cast<long double>(tau);
  const long double lr = r;
  long double A1 = 0.0L, A2 = 0.0L, sum_b = 0.0L;
  for (int k = N; k >= 0; --k) {
    const long double rp = std::pow(lr, static_cast<long double>(pt.amplitudes1().radial_power(k)));
    A1 += pt.amplitudes1().coeff(k) * rp / std::pow(t1, static_cast<long double>(k));
    A2 += pt.amplitudes2().coeff(k) * rp / std::pow(t2, static_cast<long double>(k));
    sum_b += pt.eval_b(k, r) / std::pow(static_cast<long double>(tau), static_cast<long double>(k));
  }
  const long double prod = std::pow(lr, static_cast<long double>(pt.dimension() - 1)) * A1 * A2;
  return static_cast<double>(prod - sum_b);
}

double product_tail_sup(const ProductTable& pt, double tau) {
  double m = 0.0;
  for (std::size_t i = 0; i < pt.grid().size(); ++i) m = std::max(m, std::abs(product_tail(pt, tau, pt.grid().node(i))));
  return m;
}

double verify_b_growth(const ProductTable& pt) {
  double best = -INFINITY;
  for (int k = 1; k <= pt.order(); ++k) {
    const double norm = pt.b(k).sup_norm();
    if (norm == 0.0) continue;
    best = std::max(best, std::log(norm) - k * std::log(4.0 * k / pt.eps0()));
  }
  return std::isfinite(best) ? std::exp(best) : 0.0;
}

void write_b_table_csv(const ProductTable& pt, std::ostream& out) {
  out << "k,r,b_k\n" << std::setprecision(17);
  for (int k = 0; k <= pt.order(); ++k)
    for (std::size_t i = 0; i < pt.grid().size(); ++i) out << k << ',' << pt.grid().node(i) << ',' << pt.b(k)[i] << '\n';
}

void write_tail_sweep_csv(const std::vector<std::pair<double, double>>& sweep, std::ostream& out) {
  out << "tau,sup_tail\n" << std::setprecision(17);
  for (const auto& [t, v] : sweep) out << t << ',' << v << '\n';
}

}  // namespace pql
