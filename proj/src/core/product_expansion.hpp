#pragma once

#include <ostream>
#include <utility>
#include <vector>

#include "core/amplitudes.hpp"
#include "core/numerics.hpp"

namespace pql {

/// s_{k,j} = (-lambda)^{(j-k)/2} binom((j+k-2)/2, (j-k)/2) for even j-k, else 0.
double shift_coeff(double lambda, int k, int j);

class ShiftCoeffs {
 public:
  ShiftCoeffs(double lambda, int order);
  double lambda() const { return lambda_; }
  int order() const { return N_; }
  /// Entry for 1 <= k <= j <= N.
  double operator()(int k, int j) const;

 private:
  double lambda_;
  int N_;
  std::vector<std::vector<double>> s_;
};

ShiftCoeffs shift_coeffs(double lambda, int order);

/// Sequences d_k, e_k, b_k on a radial grid together with their exact
/// representation as finite sums of powers of r.
class ProductTable {
 public:
  ProductTable(int n, double lambda, double sigma1, double sigma2, int order, const RadialGrid& grid);

  int dimension() const { return n_; }
  double lambda() const { return lambda_; }
  double sigma1() const { return sigma1_; }
  double sigma2() const { return sigma2_; }
  int order() const { return N_; }
  double eps0() const { return grid_.lo(); }
  const RadialGrid& grid() const { return grid_; }
  const AmplitudeTable& amplitudes1() const { return amp1_; }
  const AmplitudeTable& amplitudes2() const { return amp2_; }

  const GridFunction& d(int k) const { return d_.at(static_cast<std::size_t>(k)); }
  const GridFunction& e(int k) const { return e_.at(static_cast<std::size_t>(k)); }
  const GridFunction& b(int k) const { return b_.at(static_cast<std::size_t>(k)); }

  /// b_k at an arbitrary radius r > 0.
  double eval_b(int k, double r) const;
  double eval_d(int k, double r) const;
  double eval_e(int k, double r) const;

 private:
  int n_;
  double lambda_, sigma1_, sigma2_;
  int N_;
  RadialGrid grid_;
  AmplitudeTable amp1_, amp2_;
  // d_k = r^{-(n-1)/2} sum_j alpha1_[k][j] r^{-j}; same for e with alpha2_.
  std::vector<std::vector<double>> alpha1_, alpha2_;
  // b_k = sum_p beta_[k][p] r^{-p}.
  std::vector<std::vector<double>> beta_;
  std::vector<GridFunction> d_, e_, b_;
};

ProductTable product_tables(int n, double lambda, double sigma1, double sigma2, int order, const RadialGrid& grid);

/// Smallest tau accepted by the tail and quasimode routines: 1 + min{n, 64e/eps0}.
double tau_lower_bound(int n, double eps0);

/// B_tau(r) evaluated from the exact series of dropped terms (no cancellation).
double product_tail(const ProductTable& pt, double tau, double r);
/// B_tau(r) by direct subtraction in long double; loses digits when B_tau is tiny.
double product_tail_direct(const ProductTable& pt, double tau, double r);
/// sup over the table grid of |B_tau|.
double product_tail_sup(const ProductTable& pt, double tau);

double verify_b_growth(const ProductTable& pt);

void write_b_table_csv(const ProductTable& pt, std::ostream& out);
void write_tail_sweep_csv(const std::vector<std::pair<double, double>>& sweep, std::ostream& out);

}  // namespace pql
