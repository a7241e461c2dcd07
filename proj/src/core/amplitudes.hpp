#pragma once

#include <ostream>
#include <vector>

#include "core/numerics.hpp"

namespace pql {

/// Coefficients c_0..c_N of the radial symbol a_k(r) = c_k r^{-(n-1)/2-k}.
class AmplitudeTable {
 public:
  AmplitudeTable() = default;
  AmplitudeTable(int n, double sigma, int order);

  int dimension() const { return n_; }
  double sigma() const { return sigma_; }
  int order() const { return N_; }

  const LogReal& coeff_log(int k) const { return log_c_.at(static_cast<std::size_t>(k)); }
  /// True when c_k is stored as a plain double (|c_k| <= 1e280).
  bool representable(int k) const { return representable_.at(static_cast<std::size_t>(k)); }
  /// c_k as a double; throws when it is outside the double range.
  double coeff(int k) const;
  /// The recursion factor c_k / c_{k-1}.
  double ratio(int k) const;
  /// Exponent of r in a_k: -(n-1)/2 - k.
  double radial_power(int k) const { return -0.5 * (n_ - 1) - k; }

 private:
  int n_ = 2;
  double sigma_ = 0.0;
  int N_ = 0;
  std::vector<double> c_;
  std::vector<LogReal> log_c_;
  std::vector<bool> representable_;
};

inline constexpr double kRepresentableBound = 1e280;

AmplitudeTable amplitude_coeffs(int n, double sigma, int order);

/// Order of the truncated symbol for a given tau: floor(eps0 tau / (32 e)).
int truncation_order(double eps0, double tau);

double eval_a_k(const AmplitudeTable& table, int k, double r);
/// r-derivative of a_k.
double eval_a_k_prime(const AmplitudeTable& table, int k, double r);

/// Truncated sum A_tau(r) = sum_{k<=N} a_k(r) tau^{-k} on [eps0, 2 eps0].
struct PartialSum {
  AmplitudeTable table;
  double tau = 0.0;
  double eps0 = 0.0;
};

/// Partial sum with N tied to tau through truncation_order.
PartialSum make_partial_sum(int n, double sigma, double tau, double eps0);

double eval_A(const PartialSum& ps, double r);
/// Value and first derivative of A_tau at r (no domain restriction beyond r > 0).
struct AValue {
  double value;
  double derivative;
};
AValue eval_A_unchecked(const PartialSum& ps, double r);

double ode_residual(const AmplitudeTable& table, int k, double r);
/// Largest magnitude among the four terms entering ode_residual.
double ode_residual_scale(const AmplitudeTable& table, int k, double r);

double coeff_bound_constant(const AmplitudeTable& table);

void write_amplitude_csv(const AmplitudeTable& table, std::ostream& out);

}  // namespace pql
