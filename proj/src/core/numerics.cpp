#include "core/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace pql {

UniformGrid::UniformGrid(double lo, double hi, std::size_t m_nodes) : lo_(lo), hi_(hi), m_(m_nodes) {
  require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, ErrorCode::InvalidArgument,
          "grid interval must satisfy lo < hi");
  require(m_nodes >= 3, ErrorCode::InvalidArgument, "grid needs at least 3 nodes");
  h_ = (hi - lo) / static_cast<double>(m_nodes - 1);
}

double UniformGrid::node(std::size_t i) const {
  if (i + 1 == m_) return hi_;
  return lo_ + static_cast<double>(i) * h_;
}

std::vector<double> UniformGrid::nodes() const {
  std::vector<double> out(m_);
  for (std::size_t i = 0; i < m_; ++i) out[i] = node(i);
  return out;
}

RadialGrid make_radial_grid(double eps0, std::size_t m_nodes) {
  require(eps0 > 0.0 && std::isfinite(eps0), ErrorCode::InvalidArgument, "eps0 must be positive");
  require(m_nodes >= 3, ErrorCode::InvalidArgument, "radial grid needs at least 3 nodes");
  return UniformGrid(eps0, 2.0 * eps0, m_nodes);
}

UniformGrid make_uniform_grid(double lo, double hi, std::size_t m_nodes) { return UniformGrid(lo, hi, m_nodes); }

GridFunction::GridFunction(UniformGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
  require(values.size() == grid.size(), ErrorCode::InvalidArgument, "grid function length mismatch");
  for (double x : values) require(std::isfinite(x), ErrorCode::Numerical, "grid function value is not finite");
}

GridFunction GridFunction::sample(const UniformGrid& g, const std::function<double(double)>& f) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.node(i));
  return GridFunction(g, std::move(v));
}

GridFunction GridFunction::zeros(const UniformGrid& g) { return GridFunction(g, std::vector<double>(g.size(), 0.0)); }

double GridFunction::sup_norm() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

double quad_trapezoid(std::span<const double> values, double h) {
  const std::size_t m = values.size();
  if (m < 2) return 0.0;
  double s = 0.5 * (values[0] + values[m - 1]);
  for (std::size_t i = 1; i + 1 < m; ++i) s += values[i];
  return s * h;
}

double quad_trapezoid(const GridFunction& f) { return quad_trapezoid(f.values, f.grid.spacing()); }

std::vector<double> cumulative_trapezoid(std::span<const double> values, double h) {
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t i = 1; i < values.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
  return out;
}

DecayFit fit_log_linear(std::span<const double> x, std::span<const double> log_y) {
  require(x.size() == log_y.size(), ErrorCode::InvalidArgument, "fit inputs differ in length");
  const std::size_t n = x.size();
  require(n >= 3, ErrorCode::InvalidArgument, "slope fit needs at least 3 samples");
  for (std::size_t i = 0; i < n; ++i)
    require(std::isfinite(x[i]) && std::isfinite(log_y[i]), ErrorCode::InvalidArgument, "slope fit input not finite");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(log_y.begin(), log_y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (log_y[i] - my);
  }
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  require(sxx > 1e-24 * std::max(1.0, scale * scale) * static_cast<double>(n), ErrorCode::RankDeficient,
          "slope fit abscissae are degenerate");
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = log_y[i] - (fit.intercept + fit.slope * x[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  fit.samples_used = n;
  return fit;
}

DecayFit fit_exponential_slope(std::span<const std::pair<double, double>> samples) {
  require(samples.size() >= 3, ErrorCode::InvalidArgument, "slope fit needs at least 3 samples");
  std::vector<std::pair<double, double>> s(samples.begin(), samples.end());
  for (const auto& [t, m] : s) {
    require(std::isfinite(t), ErrorCode::InvalidArgument, "tau sample not finite");
    require(m > 0.0 && std::isfinite(m), ErrorCode::InvalidArgument, "magnitudes must be positive and finite");
  }
  const bool underflow = std::any_of(s.begin(), s.end(), [](const auto& p) { return p.second < 1e-300; });
  if (underflow) {
    // Drop the 20% of samples with the smallest magnitudes.
    std::vector<std::pair<double, double>> sorted = s;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    const std::size_t drop = (s.size() + 4) / 5;
    if (s.size() - drop >= 3) {
      sorted.erase(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(drop));
      std::sort(sorted.begin(), sorted.end());
      s = sorted;
    }
  }
  std::vector<double> x, y;
  for (const auto& [t, m] : s) {
    x.push_back(t);
    y.push_back(std::log(m));
  }
  return fit_log_linear(x, y);
}

LogReal LogReal::from_double(double v) {
  if (v == 0.0) return {};
  return {v > 0 ? 1 : -1, std::log(std::abs(v))};
}

LogReal LogReal::operator*(const LogReal& o) const {
  if (sign == 0 || o.sign == 0) return {};
  return {sign * o.sign, log_abs + o.log_abs};
}

LogReal LogReal::operator+(const LogReal& o) const {
  if (sign == 0) return o;
  if (o.sign == 0) return *this;
  const LogReal& big = log_abs >= o.log_abs ? *this : o;
  const LogReal& small = log_abs >= o.log_abs ? o : *this;
  const double ratio = std::exp(small.log_abs - big.log_abs);
  const double combined = 1.0 + (big.sign == small.sign ? ratio : -ratio);
  if (combined == 0.0) return {};
  return {big.sign, big.log_abs + std::log(combined)};
}

double log_binomial(double n, double k) {
  require(k >= 0 && n >= k, ErrorCode::InvalidArgument, "binomial arguments out of range");
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

unsigned long long binomial_exact(unsigned n, unsigned k) {
  require(k <= n, ErrorCode::InvalidArgument, "binomial arguments out of range");
  require(n <= 60, ErrorCode::InvalidArgument, "exact binomial limited to n <= 60");
  k = std::min(k, n - k);
  unsigned long long r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;  // exact: r*(n-k+i) divisible by i
  return r;
}

double binomial(unsigned n, unsigned k) {
  if (n <= 60) return static_cast<double>(binomial_exact(n, k));
  return std::exp(log_binomial(n, k));
}

std::vector<double> log_spaced(double a, double b, std::size_t n) {
  require(a > 0 && b > a && n >= 2, ErrorCode::InvalidArgument, "log_spaced needs 0 < a < b and n >= 2");
  std::vector<double> out(n);
  const double la = std::log(a), lb = std::log(b);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = a;
  out.back() = b;
  return out;
}

std::vector<double> lin_spaced(double a, double b, std::size_t n) {
  require(n >= 2, ErrorCode::InvalidArgument, "lin_spaced needs n >= 2");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& f) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::Configuration: return "configuration";
    case ErrorCode::Io: return "io";
    case ErrorCode::Usage: return "usage";
    case ErrorCode::RankDeficient: return "rank-deficient";
    case ErrorCode::PoleProximity: return "pole-proximity";
    case ErrorCode::FamilyDeficient: return "family-deficient";
    case ErrorCode::DataTooLarge: return "data-too-large";
    case ErrorCode::EmptyTable: return "empty-table";
  }
  return "unknown";
}

}  // namespace pql
