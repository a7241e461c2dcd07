#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "core/error.hpp"

namespace pql {

inline constexpr double kE = 2.718281828459045235360287;
inline constexpr double kPi = 3.141592653589793238462643;

/// Uniform grid on a closed interval with both endpoints as nodes.
/// The radial grid of the patch interval is the case hi = 2*lo.
class UniformGrid {
 public:
  UniformGrid() = default;
  UniformGrid(double lo, double hi, std::size_t m_nodes);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t size() const { return m_; }
  double spacing() const { return h_; }
  double length() const { return hi_ - lo_; }
  /// Node i, computed as lo + i*h except for the last node which is hi exactly.
  double node(std::size_t i) const;
  std::vector<double> nodes() const;

  bool operator==(const UniformGrid& other) const = default;

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::size_t m_ = 0;
  double h_ = 0.0;
};

using RadialGrid = UniformGrid;

/// Grid on [eps0, 2 eps0].
RadialGrid make_radial_grid(double eps0, std::size_t m_nodes);
/// Grid on an arbitrary interval [lo, hi].
UniformGrid make_uniform_grid(double lo, double hi, std::size_t m_nodes);

struct GridFunction {
  UniformGrid grid;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(UniformGrid g, std::vector<double> v);
  static GridFunction sample(const UniformGrid& g, const std::function<double(double)>& f);
  static GridFunction zeros(const UniformGrid& g);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double sup_norm() const;
};

double quad_trapezoid(const GridFunction& f);
double quad_trapezoid(std::span<const double> values, double h);
/// Running trapezoid integral from the left endpoint; first entry is 0.
std::vector<double> cumulative_trapezoid(std::span<const double> values, double h);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  std::size_t samples_used = 0;
};

/// Least-squares fit of log(magnitude) against tau.
DecayFit fit_exponential_slope(std::span<const std::pair<double, double>> samples);
/// Same fit when the log-magnitudes are already available (no underflow).
DecayFit fit_log_linear(std::span<const double> x, std::span<const double> log_y);

/// Real number stored as sign * exp(log_abs); sign 0 means exact zero.
struct LogReal {
  int sign = 0;
  double log_abs = -INFINITY;

  static LogReal from_double(double v);
  static LogReal zero() { return {}; }
  double to_double() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
  bool is_zero() const { return sign == 0; }
  LogReal operator*(const LogReal& o) const;
  LogReal operator+(const LogReal& o) const;
  LogReal scaled_log(double log_factor) const { return sign == 0 ? *this : LogReal{sign, log_abs + log_factor}; }
};

double log_binomial(double n, double k);
/// Exact binomial coefficient for n <= 60 (fits in 64 bits).
unsigned long long binomial_exact(unsigned n, unsigned k);
double binomial(unsigned n, unsigned k);

/// n log-spaced points from a to b inclusive.
std::vector<double> log_spaced(double a, double b, std::size_t n);
std::vector<double> lin_spaced(double a, double b, std::size_t n);

/// Evaluates f(0..count-1) on up to `workers` threads; results are stored by index.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& f);

template <class T>
std::vector<T> parallel_map(std::size_t count, std::size_t workers, const std::function<T(std::size_t)>& f) {
  std::vector<T> out(count);
  parallel_for(count, workers, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

}  // namespace pql
