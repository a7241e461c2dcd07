#include "core/amplitudes.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>

namespace pql {

AmplitudeTable::AmplitudeTable(int n, double sigma, int order) : n_(n), sigma_(sigma), N_(order) {
  require(n >= 2, ErrorCode::InvalidArgument, "dimension n must be at least 2");
  require(sigma >= 0.0 && sigma <= 1.0, ErrorCode::InvalidArgument, "sigma must lie in [0, 1]");
  require(order >= 0, ErrorCode::InvalidArgument, "order N must be nonnegative");
  const auto size = static_cast<std::size_t>(order) + 1;
  c_.assign(size, 0.0);
  log_c_.assign(size, LogReal{});
  representable_.assign(size, true);
  c_[0] = 1.0;
  log_c_[0] = LogReal{1, 0.0};
  for (int k = 1; k <= order; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double q = ratio(k);
    log_c_[i] = log_c_[i - 1] * LogReal::from_double(q);
    if (representable_[i - 1] && (log_c_[i].is_zero() || log_c_[i].log_abs <= std::log(kRepresentableBound))) {
      c_[i] = q * c_[i - 1];
    } else {
      representable_[i] = false;
      c_[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
}

double AmplitudeTable::ratio(int k) const {
  const double kk = static_cast<double>(k);
  const double bracket = kk * kk - kk + sigma_ * sigma_ - 0.25 * (n_ - 1) * (n_ - 3);
  return -bracket / (2.0 * kk);
}

double AmplitudeTable::coeff(int k) const {
  require(k >= 0 && k <= N_, ErrorCode::InvalidArgument, "coefficient index out of range");
  require(representable(k), ErrorCode::Numerical, "coefficient exceeds the double range; use coeff_log");
  return c_[static_cast<std::size_t>(k)];
}

AmplitudeTable amplitude_coeffs(int n, double sigma, int order) { return AmplitudeTable(n, sigma, order); }

int truncation_order(double eps0, double tau) {
  require(eps0 > 0 && tau > 0, ErrorCode::InvalidArgument, "truncation order needs eps0, tau > 0");
  return static_cast<int>(std::floor(eps0 * tau / (32.0 * kE)));
}

namespace {

// c_k * r^power * tau^{-k_tau}, falling back to log form when the plain product would overflow.
double monomial(const AmplitudeTable& t, int k, double power, double r, double tau_power_log) {
  const LogReal& lc = t.coeff_log(k);
  if (lc.is_zero()) return 0.0;
  const double log_mag = lc.log_abs + power * std::log(r) + tau_power_log;
  if (t.representable(k) && std::abs(log_mag) < 650.0 && std::abs(power * std::log(r)) < 650.0) {
    return t.coeff(k) * std::pow(r, power) * std::exp(tau_power_log);
  }
  return lc.sign * std::exp(log_mag);
}

}  // namespace

double eval_a_k(const AmplitudeTable& table, int k, double r) {
  require(k >= 0 && k <= table.order(), ErrorCode::InvalidArgument, "amplitude index out of range");
  require(r > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
  return monomial(table, k, table.radial_power(k), r, 0.0);
}

double eval_a_k_prime(const AmplitudeTable& table, int k, double r) {
  require(k >= 0 && k <= table.order(), ErrorCode::InvalidArgument, "amplitude index out of range");
  require(r > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
  const double p = table.radial_power(k);
  return p * monomial(table, k, p - 1.0, r, 0.0);
}

PartialSum make_partial_sum(int n, double sigma, double tau, double eps0) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  return PartialSum{amplitude_coeffs(n, sigma, truncation_order(eps0, tau)), tau, eps0};
}

AValue eval_A_unchecked(const PartialSum& ps, double r) {
  require(ps.tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  require(r > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
  const double log_tau = std::log(ps.tau);
  double value = 0.0, deriv = 0.0;
  for (int k = ps.table.order(); k >= 0; --k) {
    const double p = ps.table.radial_power(k);
    const double term = monomial(ps.table, k, p, r, -k * log_tau);
    value += term;
    deriv += p * term / r;
  }
  return {value, deriv};
}

double eval_A(const PartialSum& ps, double r) {
  const double slack = 1e-12 * ps.eps0;
  require(ps.eps0 > 0 && r >= ps.eps0 - slack && r <= 2.0 * ps.eps0 + slack, ErrorCode::Domain,
          "radius outside [eps0, 2 eps0]");
  return eval_A_unchecked(ps, r).value;
}

namespace {

struct OdeTerms {
  double t1, t2, t3, t4;
};

OdeTerms ode_terms(const AmplitudeTable& t, int k, double r) {
  require(k >= 1, ErrorCode::InvalidArgument, "the recursion starts at k = 1");
  require(k <= t.order(), ErrorCode::InvalidArgument, "order exceeds table");
  require(r > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
  const double n = t.dimension();
  const double p = t.radial_power(k);
  const double q = t.radial_power(k - 1);
  const double ak_r = monomial(t, k, p - 1.0, r, 0.0);      // c_k r^{p-1}
  const double ak1_r = monomial(t, k - 1, q - 2.0, r, 0.0);  // c_{k-1} r^{q-2}
  const double s2 = t.sigma() * t.sigma();
  return {2.0 * p * ak_r, (n - 1.0) * ak_r, q * (q + n - 2.0) * ak1_r, s2 * ak1_r};
}

}  // namespace

double ode_residual(const AmplitudeTable& table, int k, double r) {
  const OdeTerms t = ode_terms(table, k, r);
  return (t.t1 + t.t2) - (t.t3 + t.t4);
}

double ode_residual_scale(const AmplitudeTable& table, int k, double r) {
  const OdeTerms t = ode_terms(table, k, r);
  return std::max({std::abs(t.t1), std::abs(t.t2), std::abs(t.t3), std::abs(t.t4)});
}

double coeff_bound_constant(const AmplitudeTable& table) {
  double best = -INFINITY;
  for (int k = 0; k <= table.order(); ++k) {
    const LogReal& c = table.coeff_log(k);
    if (c.is_zero()) continue;
    best = std::max(best, c.log_abs + k * std::log(2.0) - std::lgamma(k + 2.0));
  }
  return std::exp(best);
}

void write_amplitude_csv(const AmplitudeTable& table, std::ostream& out) {
  out << "k,sign,log_abs_c,c\n";
  out << std::setprecision(17);
  for (int k = 0; k <= table.order(); ++k) {
    const LogReal& c = table.coeff_log(k);
    out << k << ',' << c.sign << ',';
    if (c.is_zero()) out << "-inf";
    else out << c.log_abs;
    out << ',';
    if (table.representable(k)) out << table.coeff(k);
    out << '\n';
  }
}

}  // namespace pql
