#include "core/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <iomanip>
#include <map>

#include "core/grids.hpp"

namespace pql {

const EigenGroup& EigenData::group(std::size_t k) const {
  require(k < groups_.size(), ErrorCode::InvalidArgument, "eigen group index out of range");
  return groups_[k];
}

long EigenData::find_group(double lambda, double tol) const {
  for (std::size_t k = 0; k < groups_.size(); ++k)
    if (std::abs(groups_[k].lambda - lambda) <= tol * std::max(1.0, lambda)) return static_cast<long>(k);
  return -1;
}

double EigenData::phi(const ModeIndex& m, double x, double y) const {
  return 2.0 / std::sqrt(lx_ * ly_) * std::sin(m.j * kPi * x / lx_) * std::sin(m.k * kPi * y / ly_);
}

namespace {

double sign_pow(int n) { return n % 2 == 0 ? 1.0 : -1.0; }

// Sine index and amplitude of a mode's inward trace on one side.
std::pair<int, double> trace_component(const EigenData& ed, const ModeIndex& m, int side) {
  const double c = 2.0 / std::sqrt(ed.lx() * ed.ly());
  switch (side) {
    case 0: return {m.j, c * m.k * kPi / ed.ly()};
    case 2: return {m.j, c * m.k * kPi / ed.ly() * sign_pow(m.k + 1)};
    case 3: return {m.k, c * m.j * kPi / ed.lx()};
    case 1: return {m.k, c * m.j * kPi / ed.lx() * sign_pow(m.j + 1)};
    default: fail(ErrorCode::InvalidArgument, "side index must be 0..3");
  }
}

}  // namespace

double EigenData::trace(const ModeIndex& m, int side, double t) const {
  const auto [idx, amp] = trace_component(*this, m, side);
  return amp * std::sin(idx * kPi * t / side_length(side));
}

EigenData eigen_table(double lx, double ly, double lambda_max) {
  require(lx > 0.0 && ly > 0.0, ErrorCode::InvalidArgument, "rectangle sides must be positive");
  const double p2 = kPi * kPi;
  require(lambda_max >= p2 * (1.0 / (lx * lx) + 1.0 / (ly * ly)), ErrorCode::EmptyTable,
          "lambda_max is below the first Dirichlet eigenvalue");
  struct Entry {
    double lambda;
    long long key;
    ModeIndex m;
  };
  std::vector<Entry> entries;
  const bool square = lx == ly;
  for (int j = 1; p2 * j * j / (lx * lx) < lambda_max; ++j)
    for (int k = 1;; ++k) {
      const double lam = p2 * (static_cast<double>(j) * j / (lx * lx) + static_cast<double>(k) * k / (ly * ly));
      if (lam > lambda_max * (1.0 + 1e-14)) break;
      entries.push_back({lam, static_cast<long long>(j) * j + static_cast<long long>(k) * k, {j, k}});
    }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.lambda != b.lambda ? a.lambda < b.lambda : a.m.j < b.m.j;
  });
  std::vector<EigenGroup> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    bool same = false;
    if (!groups.empty()) {
      const Entry& prev = entries[i - 1];
      same = square ? prev.key == e.key : std::abs(prev.lambda - e.lambda) <= 1e-12 * e.lambda;
    }
    if (!same) groups.push_back({e.lambda, {}});
    groups.back().modes.push_back(e.m);
  }
  for (auto& g : groups)
    std::sort(g.modes.begin(), g.modes.end(), [](const ModeIndex& a, const ModeIndex& b) { return a.j < b.j; });
  return EigenData(lx, ly, std::move(groups));
}

double BoundarySeries::eval(const EigenData& ed, int side, double t) const {
  require(side >= 0 && side < 4, ErrorCode::InvalidArgument, "side index must be 0..3");
  double s = 0.0;
  const auto& c = coeffs[static_cast<std::size_t>(side)];
  for (std::size_t m = 0; m < c.size(); ++m) s += c[m] * std::sin(static_cast<double>(m + 1) * kPi * t / ed.side_length(side));
  return s;
}

BoundarySeries BoundarySeries::single(int side, int mode, double amplitude) {
  require(side >= 0 && side < 4 && mode >= 1, ErrorCode::InvalidArgument, "invalid side or mode");
  BoundarySeries b;
  b.coeffs[static_cast<std::size_t>(side)].assign(static_cast<std::size_t>(mode), 0.0);
  b.coeffs[static_cast<std::size_t>(side)].back() = amplitude;
  return b;
}

BoundarySeries BoundarySeries::trace_of(const EigenData& ed, const ModeIndex& m) {
  BoundarySeries b;
  for (int side = 0; side < 4; ++side) {
    const auto [idx, amp] = trace_component(ed, m, side);
    b.coeffs[static_cast<std::size_t>(side)].assign(static_cast<std::size_t>(idx), 0.0);
    b.coeffs[static_cast<std::size_t>(side)].back() = amp;
  }
  return b;
}

BoundarySeries project_boundary(const EigenData& ed, const std::function<double(int, double)>& f, int modes,
                                std::size_t quad_nodes) {
  require(modes >= 1 && quad_nodes >= 3, ErrorCode::InvalidArgument, "projection needs modes >= 1 and >= 3 nodes");
  BoundarySeries b;
  for (int side = 0; side < 4; ++side) {
    const double L = ed.side_length(side);
    const UniformGrid g(0.0, L, quad_nodes);
    std::vector<double> fv(g.size()), v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) fv[i] = f(side, g.node(i));
    for (int m = 1; m <= modes; ++m) {
      for (std::size_t i = 0; i < g.size(); ++i) v[i] = fv[i] * std::sin(m * kPi * g.node(i) / L);
      b.coeffs[static_cast<std::size_t>(side)].push_back(2.0 / L * quad_trapezoid(v, g.spacing()));
    }
  }
  return b;
}

double boundary_pairing(const EigenData& ed, const BoundarySeries& f, const ModeIndex& m) {
  double s = 0.0;
  for (int side = 0; side < 4; ++side) {
    const auto [idx, amp] = trace_component(ed, m, side);
    const auto& c = f.coeffs[static_cast<std::size_t>(side)];
    if (static_cast<std::size_t>(idx) <= c.size()) s += 0.5 * ed.side_length(side) * amp * c[static_cast<std::size_t>(idx - 1)];
  }
  return s;
}

std::vector<double> sk_apply(const EigenData& ed, const BoundarySeries& f, std::size_t k) {
  const EigenGroup& g = ed.group(k);
  std::vector<double> out;
  for (const auto& m : g.modes) out.push_back(boundary_pairing(ed, f, m));
  return out;
}

namespace {

double condition_number(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return INFINITY;
  return s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
}

}  // namespace

TraceGram trace_gram(const EigenData& ed, std::size_t k) {
  const EigenGroup& g = ed.group(k);
  const std::size_t d = g.multiplicity();
  TraceGram tg;
  tg.matrix.assign(d, std::vector<double>(d, 0.0));
  Eigen::MatrixXd A(static_cast<long>(d), static_cast<long>(d));
  for (std::size_t a = 0; a < d; ++a) {
    const BoundarySeries ta = BoundarySeries::trace_of(ed, g.modes[a]);
    for (std::size_t b = 0; b < d; ++b) {
      tg.matrix[a][b] = boundary_pairing(ed, ta, g.modes[b]);
      A(static_cast<long>(a), static_cast<long>(b)) = tg.matrix[a][b];
    }
  }
  tg.condition = condition_number(A);
  return tg;
}

namespace {

void check_poles(const EigenData& ed, double z, std::size_t K) {
  require(K >= 1 && K <= ed.group_count(), ErrorCode::InvalidArgument, "truncation must be within the eigen table");
  for (std::size_t k = 0; k < K; ++k)
    require(std::abs(ed.group(k).lambda - z) >= 1e-8, ErrorCode::PoleProximity,
            "z lies within 1e-8 of the eigenvalue " + std::to_string(ed.group(k).lambda));
}

}  // namespace

double FixedFrequencySolution::eval(const EigenData& ed, double x, double y) const {
  double s = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    for (std::size_t j = 0; j < coeffs[k].size(); ++j) s += coeffs[k][j] * ed.phi(ed.group(k).modes[j], x, y);
  return s;
}

FixedFrequencySolution fixed_frequency_solution(const EigenData& ed, const BoundarySeries& f, double z,
                                                std::size_t truncation) {
  check_poles(ed, z, truncation);
  FixedFrequencySolution u;
  u.z = z;
  for (std::size_t k = 0; k < truncation; ++k) {
    std::vector<double> c = sk_apply(ed, f, k);
    for (double& v : c) v /= ed.group(k).lambda - z;
    u.coeffs.push_back(std::move(c));
  }
  return u;
}

std::vector<std::vector<double>> q_coefficients(const EigenData& ed, const std::function<double(double, double)>& q,
                                                std::size_t nodes) {
  require(nodes >= 3, ErrorCode::InvalidArgument, "coefficient quadrature needs >= 3 nodes");
  const UniformGrid gx(0.0, ed.lx(), nodes), gy(0.0, ed.ly(), nodes);
  std::vector<double> Q(nodes * nodes);
  for (std::size_t b = 0; b < nodes; ++b)
    for (std::size_t a = 0; a < nodes; ++a) Q[b * nodes + a] = q(gx.node(a), gy.node(b));
  std::vector<std::vector<double>> out;
  const double c = 2.0 / std::sqrt(ed.lx() * ed.ly());
  for (const auto& g : ed.groups()) {
    std::vector<double> row;
    for (const auto& m : g.modes) {
      std::vector<double> sx(nodes), sy(nodes);
      for (std::size_t a = 0; a < nodes; ++a) sx[a] = std::sin(m.j * kPi * gx.node(a) / ed.lx());
      for (std::size_t b = 0; b < nodes; ++b) sy[b] = std::sin(m.k * kPi * gy.node(b) / ed.ly());
      double acc = 0.0;
      for (std::size_t b = 0; b < nodes; ++b) {
        double inner = 0.0;
        for (std::size_t a = 0; a < nodes; ++a) inner += Q[b * nodes + a] * sx[a];  // endpoint sines vanish
        acc += inner * sy[b];
      }
      row.push_back(c * acc * gx.spacing() * gy.spacing());
    }
    out.push_back(std::move(row));
  }
  return out;
}

MomentOracle::MomentOracle(const EigenData& ed, std::vector<std::vector<double>> q_coeffs, std::size_t truncation)
    : ed_(&ed), q_(std::move(q_coeffs)), K_(truncation) {
  require(q_.size() >= truncation && truncation <= ed.group_count(), ErrorCode::InvalidArgument,
          "coefficient table shorter than the truncation");
}

double MomentOracle::operator()(const BoundarySeries& f, double z) const {
  check_poles(*ed_, z, K_);
  double s = 0.0;
  for (std::size_t k = 0; k < K_; ++k) {
    const EigenGroup& g = ed_->group(k);
    double r = 0.0;
    for (std::size_t j = 0; j < g.modes.size(); ++j) r += q_[k][j] * boundary_pairing(*ed_, f, g.modes[j]);
    s += r / (g.lambda - z);
  }
  return s;
}

ResidueResult residue_extract(const std::function<double(double)>& moment, const EigenData& ed, std::size_t k,
                              double delta0, std::size_t levels, double tol) {
  require(delta0 > 1e-8 && levels >= 2, ErrorCode::InvalidArgument, "residue extraction needs delta0 > 1e-8, levels >= 2");
  const double lam = ed.group(k).lambda;
  std::vector<double> d(levels), p(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    d[i] = delta0 / std::ldexp(1.0, static_cast<int>(i));
    require(d[i] >= 1e-8, ErrorCode::PoleProximity, "extrapolation offsets reach the pole-proximity radius");
    p[i] = d[i] * moment(lam - d[i]);
  }
  // Neville tableau evaluated at delta = 0; keep the second-to-last column for the error estimate.
  std::vector<double> prev_top;
  for (std::size_t m = 1; m < levels; ++m) {
    prev_top.push_back(p[0]);
    for (std::size_t i = 0; i + m < levels; ++i) p[i] = (d[i + m] * p[i] - d[i] * p[i + 1]) / (d[i + m] - d[i]);
  }
  ResidueResult r;
  r.value = p[0];
  const double lower = levels >= 3 ? prev_top.back() : prev_top.front();
  r.error_estimate = std::abs(r.value - lower);
  r.converged = std::isfinite(r.value) && r.error_estimate <= tol * std::max(1.0, std::abs(r.value));
  return r;
}

std::vector<BoundarySeries> default_family(std::size_t count) {
  std::vector<BoundarySeries> fam;
  for (std::size_t m = 1; m <= count; ++m) fam.push_back(BoundarySeries::single(0, static_cast<int>(m)));
  for (std::size_t m = 1; m <= count; ++m) fam.push_back(BoundarySeries::single(3, static_cast<int>(m)));
  return fam;
}

RecoveryResult recover_q(const std::function<double(const BoundarySeries&, double)>& moments, const EigenData& ed,
                         const std::vector<BoundarySeries>& family, std::size_t groups, double delta0,
                         double max_condition) {
  require(groups >= 1 && groups <= ed.group_count(), ErrorCode::InvalidArgument, "group count outside the table");
  require(!family.empty(), ErrorCode::FamilyDeficient, "empty boundary family");
  RecoveryResult res;
  for (std::size_t k = 0; k < groups; ++k) {
    const EigenGroup& g = ed.group(k);
    const long d = static_cast<long>(g.multiplicity());
    Eigen::MatrixXd P(static_cast<long>(family.size()), d);
    Eigen::VectorXd rho(static_cast<long>(family.size()));
    for (std::size_t f = 0; f < family.size(); ++f) {
      for (long j = 0; j < d; ++j) P(static_cast<long>(f), j) = boundary_pairing(ed, family[f], g.modes[static_cast<std::size_t>(j)]);
      const ResidueResult rr = residue_extract([&](double z) { return moments(family[f], z); }, ed, k, delta0);
      require(rr.converged, ErrorCode::Numerical,
              "residue extrapolation did not converge at lambda = " + std::to_string(g.lambda));
      rho[static_cast<long>(f)] = rr.value;
    }
    const double cond = condition_number(P);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    require(svd.rank() == d && cond <= max_condition, ErrorCode::FamilyDeficient,
            "boundary family cannot resolve the eigen group at lambda = " + std::to_string(g.lambda));
    const Eigen::VectorXd c = P.colPivHouseholderQr().solve(rho);
    res.coeffs.emplace_back(c.data(), c.data() + c.size());
    res.condition.push_back(cond);
  }
  return res;
}

std::vector<double> residues_from_interval(const std::vector<double>& z, const std::vector<double>& values,
                                           const EigenData& ed, std::size_t truncation) {
  require(z.size() == values.size(), ErrorCode::InvalidArgument, "sample counts differ");
  require(z.size() >= truncation && truncation >= 1 && truncation <= ed.group_count(), ErrorCode::InvalidArgument,
          "need at least as many samples as retained poles");
  Eigen::MatrixXd A(static_cast<long>(z.size()), static_cast<long>(truncation));
  Eigen::VectorXd b(static_cast<long>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    check_poles(ed, z[i], truncation);
    for (std::size_t k = 0; k < truncation; ++k) A(static_cast<long>(i), static_cast<long>(k)) = 1.0 / (ed.group(k).lambda - z[i]);
    b[static_cast<long>(i)] = values[i];
  }
  const Eigen::VectorXd r = A.colPivHouseholderQr().solve(b);
  return {r.data(), r.data() + r.size()};
}

double fixed_frequency_fd_check(const EigenData& ed, const BoundarySeries& f, std::size_t n, std::size_t check_groups) {
  const SpaceGrid g = SpaceGrid::rectangle(ed.lx(), ed.ly(), n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<long>(g.size()));
  for (std::size_t i : g.boundary_nodes()) b[static_cast<long>(i)] = f.eval(ed, g.side(i), g.boundary_param(i));
  const auto& S = g.stiffness();
  std::vector<Eigen::Triplet<double>> t;
  for (int col = 0; col < S.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(S, col); it; ++it) {
      const long c = g.interior_index(static_cast<std::size_t>(it.col()));
      if (c >= 0) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(c), it.value());
    }
  Eigen::SparseMatrix<double> Sii(static_cast<long>(g.interior().size()), static_cast<long>(g.interior().size()));
  Sii.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(Sii);
  require(solver.info() == Eigen::Success, ErrorCode::Numerical, "Laplace system factorization failed");
  const Eigen::VectorXd ui = solver.solve(-(S * b));
  Eigen::VectorXd u = b;
  for (std::size_t k = 0; k < g.interior().size(); ++k) u[static_cast<long>(g.interior()[k])] = ui[static_cast<long>(k)];
  const FixedFrequencySolution series = fixed_frequency_solution(ed, f, 0.0, std::min(check_groups, ed.group_count()));
  double worst = 0.0;
  for (std::size_t k = 0; k < series.coeffs.size(); ++k)
    for (std::size_t j = 0; j < series.coeffs[k].size(); ++j) {
      double proj = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) proj += g.weight(i) * u[static_cast<long>(i)] * ed.phi(ed.group(k).modes[j], g.node(i).x, g.node(i).y);
      worst = std::max(worst, std::abs(proj - series.coeffs[k][j]));
    }
  return worst;
}

void write_eigen_groups_csv(const EigenData& ed, std::ostream& out) {
  out << "lambda,multiplicity,modes\n" << std::setprecision(17);
  for (const auto& g : ed.groups()) {
    out << g.lambda << ',' << g.multiplicity() << ',';
    for (std::size_t i = 0; i < g.modes.size(); ++i) out << (i ? " " : "") << '(' << g.modes[i].j << ';' << g.modes[i].k << ')';
    out << '\n';
  }
}

void write_coefficients_csv(const EigenData& ed, const std::vector<std::vector<double>>& coeffs, std::ostream& out) {
  out << "lambda,j,k,coefficient\n" << std::setprecision(17);
  for (std::size_t k = 0; k < coeffs.size() && k < ed.group_count(); ++k)
    for (std::size_t i = 0; i < coeffs[k].size(); ++i)
      out << ed.group(k).lambda << ',' << ed.group(k).modes[i].j << ',' << ed.group(k).modes[i].k << ',' << coeffs[k][i] << '\n';
}

}  // namespace pql
