#include "core/grids.hpp"

namespace pql {

namespace {

struct Assembler {
  std::vector<Eigen::Triplet<double>> t;
  void couple(std::size_t row, std::size_t col, double c) {
    t.emplace_back(static_cast<int>(row), static_cast<int>(col), -c);
    t.emplace_back(static_cast<int>(row), static_cast<int>(row), c);
  }
};

}  // namespace

void SpaceGrid::add_stencil(std::size_t b, std::size_t n1, std::size_t n2, double h) {
  stencil_pos_[b] = static_cast<long>(stencils_.size());
  stencils_.push_back(NormalStencil{{b, n1, n2}, {1.5 / h, -2.0 / h, 0.5 / h}});
}

const SpaceGrid::NormalStencil& SpaceGrid::normal_stencil(std::size_t i) const {
  require(has_normal_stencil(i), ErrorCode::InvalidArgument, "node has no normal-derivative stencil");
  return stencils_[static_cast<std::size_t>(stencil_pos_[i])];
}

void SpaceGrid::finalize(const std::vector<Eigen::Triplet<double>>& triplets) {
  const std::size_t n = nodes_.size();
  interior_pos_.assign(n, -1);
  interior_.clear();
  boundary_list_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (boundary_[i]) {
      boundary_list_.push_back(i);
    } else {
      interior_pos_[i] = static_cast<long>(interior_.size());
      interior_.push_back(i);
    }
  }
  std::vector<Eigen::Triplet<double>> rows;
  rows.reserve(triplets.size());
  for (const auto& tr : triplets) {
    const long r = interior_pos_[static_cast<std::size_t>(tr.row())];
    if (r >= 0) rows.emplace_back(static_cast<int>(r), tr.col(), tr.value());
  }
  stiffness_.resize(static_cast<long>(interior_.size()), static_cast<long>(n));
  stiffness_.setFromTriplets(rows.begin(), rows.end());
  stiffness_.makeCompressed();
  mass_.resize(static_cast<long>(interior_.size()));
  for (std::size_t k = 0; k < interior_.size(); ++k) mass_[static_cast<long>(k)] = weights_[interior_[k]];
}

SpaceGrid SpaceGrid::rectangle(double lx, double ly, std::size_t nx, std::size_t ny) {
  require(lx > 0 && ly > 0, ErrorCode::InvalidArgument, "rectangle sides must be positive");
  require(nx >= 4 && ny >= 4, ErrorCode::InvalidArgument, "rectangle grid needs at least 4 nodes per direction");
  SpaceGrid g;
  g.kind_ = Kind::Rectangle;
  const double hx = lx / static_cast<double>(nx - 1), hy = ly / static_cast<double>(ny - 1);
  g.dim1_ = nx;
  g.dim2_ = ny;
  g.h1_ = hx;
  g.h2_ = hy;
  const std::size_t n = nx * ny;
  g.nodes_.resize(n);
  g.weights_.resize(n);
  g.boundary_.assign(n, false);
  g.side_.assign(n, -1);
  g.param_.assign(n, 0.0);
  g.stencil_pos_.assign(n, -1);
  Assembler a;
  auto idx = [nx](std::size_t i, std::size_t j) { return j * nx + i; };
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = idx(i, j);
      const double x = i + 1 == nx ? lx : static_cast<double>(i) * hx;
      const double y = j + 1 == ny ? ly : static_cast<double>(j) * hy;
      g.nodes_[k] = {x, y};
      double w = hx * hy;
      if (i == 0 || i + 1 == nx) w *= 0.5;
      if (j == 0 || j + 1 == ny) w *= 0.5;
      g.weights_[k] = w;
      int side = -1;
      if (j == 0) side = 0;
      else if (i + 1 == nx) side = 1;
      else if (j + 1 == ny) side = 2;
      else if (i == 0) side = 3;
      if (side >= 0) {
        g.boundary_[k] = true;
        g.side_[k] = side;
        g.param_[k] = (side == 0 || side == 2) ? x : y;
        continue;
      }
      a.couple(k, idx(i + 1, j), hy / hx);
      a.couple(k, idx(i - 1, j), hy / hx);
      a.couple(k, idx(i, j + 1), hx / hy);
      a.couple(k, idx(i, j - 1), hx / hy);
    }
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = idx(i, j);
      switch (g.side_[k]) {
        case 0: g.add_stencil(k, idx(i, 1), idx(i, 2), hy); break;
        case 1: g.add_stencil(k, idx(nx - 2, j), idx(nx - 3, j), hx); break;
        case 2: g.add_stencil(k, idx(i, ny - 2), idx(i, ny - 3), hy); break;
        case 3: g.add_stencil(k, idx(1, j), idx(2, j), hx); break;
        default: break;
      }
    }
  g.finalize(a.t);
  return g;
}

SpaceGrid SpaceGrid::polar_disk(double radius, std::size_t n_r, std::size_t n_phi) {
  require(radius > 0, ErrorCode::InvalidArgument, "disk radius must be positive");
  require(n_r >= 3 && n_phi >= 8 && n_phi % 2 == 0, ErrorCode::InvalidArgument,
          "disk grid needs n_r >= 3 and an even n_phi >= 8");
  SpaceGrid g;
  g.kind_ = Kind::PolarDisk;
  const double h = radius / static_cast<double>(n_r);
  const double hp = 2.0 * kPi / static_cast<double>(n_phi);
  g.dim1_ = n_r + 1;
  g.dim2_ = n_phi;
  g.h1_ = h;
  g.h2_ = hp;
  const std::size_t n = 1 + n_r * n_phi;
  g.nodes_.resize(n);
  g.weights_.resize(n);
  g.boundary_.assign(n, false);
  g.side_.assign(n, -1);
  g.param_.assign(n, 0.0);
  g.stencil_pos_.assign(n, -1);
  auto idx = [n_phi](std::size_t i, std::size_t j) { return 1 + (i - 1) * n_phi + (j % n_phi); };
  Assembler a;
  g.nodes_[0] = {0.0, 0.0};
  g.weights_[0] = kPi * h * h / 4.0;
  for (std::size_t j = 0; j < n_phi; ++j) a.couple(0, idx(1, j), hp / 2.0);
  for (std::size_t i = 1; i <= n_r; ++i) {
    const double r = i == n_r ? radius : static_cast<double>(i) * h;
    for (std::size_t j = 0; j < n_phi; ++j) {
      const double phi = -kPi + static_cast<double>(j) * hp;
      const std::size_t k = idx(i, j);
      g.nodes_[k] = {r * std::cos(phi), r * std::sin(phi)};
      g.weights_[k] = r * h * hp * (i == n_r ? 0.5 : 1.0);
      if (i == n_r) {
        g.boundary_[k] = true;
        g.side_[k] = 0;
        g.param_[k] = phi;
        continue;
      }
      const double r_in = (static_cast<double>(i) - 0.5) * h, r_out = (static_cast<double>(i) + 0.5) * h;
      a.couple(k, i == 1 ? 0 : idx(i - 1, j), hp / h * r_in);
      a.couple(k, idx(i + 1, j), hp / h * r_out);
      a.couple(k, idx(i, j + 1), h / (r * hp));
      a.couple(k, idx(i, j + n_phi - 1), h / (r * hp));
    }
  }
  for (std::size_t j = 0; j < n_phi; ++j) g.add_stencil(idx(n_r, j), idx(n_r - 1, j), idx(n_r - 2, j), h);
  g.finalize(a.t);
  return g;
}

SpaceGrid SpaceGrid::polar_sector(double r_in, double r_out, double phi_lo, double phi_hi, std::size_t n_r,
                                  std::size_t n_phi) {
  require(r_in > 0 && r_out > r_in, ErrorCode::InvalidArgument, "sector needs 0 < r_in < r_out");
  require(phi_hi > phi_lo && phi_hi - phi_lo < 2.0 * kPi, ErrorCode::InvalidArgument, "sector angle range invalid");
  require(n_r >= 4 && n_phi >= 4, ErrorCode::InvalidArgument, "sector grid needs at least 4 nodes per direction");
  SpaceGrid g;
  g.kind_ = Kind::PolarSector;
  const double hr = (r_out - r_in) / static_cast<double>(n_r - 1);
  const double hp = (phi_hi - phi_lo) / static_cast<double>(n_phi - 1);
  g.dim1_ = n_r;
  g.dim2_ = n_phi;
  g.h1_ = hr;
  g.h2_ = hp;
  const std::size_t n = n_r * n_phi;
  g.nodes_.resize(n);
  g.weights_.resize(n);
  g.boundary_.assign(n, false);
  g.side_.assign(n, -1);
  g.param_.assign(n, 0.0);
  g.stencil_pos_.assign(n, -1);
  auto idx = [n_phi](std::size_t i, std::size_t j) { return i * n_phi + j; };
  Assembler a;
  for (std::size_t i = 0; i < n_r; ++i) {
    const double r = i + 1 == n_r ? r_out : r_in + static_cast<double>(i) * hr;
    for (std::size_t j = 0; j < n_phi; ++j) {
      const double phi = j + 1 == n_phi ? phi_hi : phi_lo + static_cast<double>(j) * hp;
      const std::size_t k = idx(i, j);
      g.nodes_[k] = {r * std::cos(phi), r * std::sin(phi)};
      double w = r * hr * hp;
      if (i == 0 || i + 1 == n_r) w *= 0.5;
      if (j == 0 || j + 1 == n_phi) w *= 0.5;
      g.weights_[k] = w;
      int side = -1;
      if (i + 1 == n_r) side = 0;
      else if (i == 0) side = 1;
      else if (j == 0) side = 2;
      else if (j + 1 == n_phi) side = 3;
      if (side >= 0) {
        g.boundary_[k] = true;
        g.side_[k] = side;
        g.param_[k] = side <= 1 ? phi : r;
        continue;
      }
      a.couple(k, idx(i - 1, j), hp / hr * (r - 0.5 * hr));
      a.couple(k, idx(i + 1, j), hp / hr * (r + 0.5 * hr));
      a.couple(k, idx(i, j + 1), hr / (r * hp));
      a.couple(k, idx(i, j - 1), hr / (r * hp));
    }
  }
  for (std::size_t j = 0; j < n_phi; ++j) g.add_stencil(idx(n_r - 1, j), idx(n_r - 2, j), idx(n_r - 3, j), hr);
  g.finalize(a.t);
  return g;
}

bool BoundaryArc::contains(const SpaceGrid& g, std::size_t node) const {
  if (!g.is_boundary(node) || g.side(node) != side) return false;
  const double s = g.boundary_param(node);
  const double tol = 1e-12 * std::max(1.0, std::abs(hi - lo));
  return s >= lo - tol && s <= hi + tol;
}

}  // namespace pql
