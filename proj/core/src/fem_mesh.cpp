#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pgdschwarz/fem_core.hpp"

namespace pgdschwarz::fem {

namespace {

void check_breaks(const std::vector<double>& b, const char* which) {
  if (b.size() < 2) throw std::invalid_argument(std::string(which) + " needs at least two grid lines");
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (!std::isfinite(b[k])) throw std::invalid_argument(std::string(which) + " has a non-finite grid line");
    if (k > 0 && !(b[k] > b[k - 1]))
      throw std::invalid_argument(std::string(which) + " must be strictly increasing (non-positive Jacobian)");
  }
}

std::vector<double> lattice_coords(const std::vector<double>& b, int degree) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(degree) * (b.size() - 1) + 1);
  for (std::size_t k = 0; k + 1 < b.size(); ++k) {
    out.push_back(b[k]);
    if (degree == 2) out.push_back(0.5 * (b[k] + b[k + 1]));
  }
  out.push_back(b.back());
  return out;
}

std::optional<std::size_t> nearest_line(const std::vector<double>& lines, double v, double tol) {
  auto it = std::lower_bound(lines.begin(), lines.end(), v - tol);
  if (it == lines.end() || *it > v + tol) return std::nullopt;
  return static_cast<std::size_t>(it - lines.begin());
}

}  // namespace

ScalarField constant(double c) {
  return [c](const Point&) { return c; };
}

StructuredMesh::StructuredMesh(std::vector<double> x_breaks, std::vector<double> y_breaks, int degree,
                               PointPredicate active_cell)
    : xb_(std::move(x_breaks)), yb_(std::move(y_breaks)), degree_(degree) {
  check_breaks(xb_, "x_breaks");
  check_breaks(yb_, "y_breaks");
  if (degree_ != 1 && degree_ != 2) throw std::invalid_argument("element degree must be 1 or 2");
  const std::size_t nx = xb_.size() - 1;
  const std::size_t ny = yb_.size() - 1;
  const auto d = static_cast<std::size_t>(degree_);
  lx_ = d * nx + 1;
  ly_ = d * ny + 1;
  lxc_ = lattice_coords(xb_, degree_);
  lyc_ = lattice_coords(yb_, degree_);
  const auto& lxs = lxc_;
  const auto& lys = lyc_;

  grid_to_cell_.assign(nx * ny, -1);
  std::vector<bool> used(lx_ * ly_, false);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Point c{0.5 * (xb_[ix] + xb_[ix + 1]), 0.5 * (yb_[iy] + yb_[iy + 1])};
      if (active_cell && !active_cell(c)) continue;
      grid_to_cell_[iy * nx + ix] = static_cast<long>(cells_.size());
      cells_.emplace_back(ix, iy);
      for (std::size_t b = 0; b <= d; ++b)
        for (std::size_t a = 0; a <= d; ++a) used[(d * iy + b) * lx_ + d * ix + a] = true;
    }
  }
  if (cells_.empty()) throw std::invalid_argument("mesh has no active cells");

  lattice_to_node_.assign(lx_ * ly_, -1);
  for (std::size_t j = 0; j < ly_; ++j)
    for (std::size_t i = 0; i < lx_; ++i)
      if (used[j * lx_ + i]) {
        lattice_to_node_[j * lx_ + i] = static_cast<long>(nodes_.size());
        nodes_.push_back({lxs[i], lys[j]});
      }

  const std::size_t nloc = nodes_per_cell();
  conn_.reserve(cells_.size() * nloc);
  for (const auto& [ix, iy] : cells_)
    for (std::size_t b = 0; b <= d; ++b)
      for (std::size_t a = 0; a <= d; ++a)
        conn_.push_back(static_cast<std::size_t>(lattice_to_node_[(d * iy + b) * lx_ + d * ix + a]));

  auto active = [&](long ix, long iy) {
    if (ix < 0 || iy < 0 || ix >= static_cast<long>(nx) || iy >= static_cast<long>(ny)) return false;
    return grid_to_cell_[static_cast<std::size_t>(iy) * nx + static_cast<std::size_t>(ix)] >= 0;
  };
  auto lat = [&](std::size_t i, std::size_t j) { return static_cast<std::size_t>(lattice_to_node_[j * lx_ + i]); };
  on_boundary_.assign(nodes_.size(), false);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto [ix, iy] = cells_[c];
    const long sx = static_cast<long>(ix), sy = static_cast<long>(iy);
    const long nbr[4][2] = {{sx, sy - 1}, {sx + 1, sy}, {sx, sy + 1}, {sx - 1, sy}};
    for (int side = 0; side < 4; ++side) {
      if (active(nbr[side][0], nbr[side][1])) continue;
      Edge e;
      e.cell = c;
      e.side = side;
      for (std::size_t k = 0; k <= d; ++k) {
        std::size_t i = 0, j = 0;
        switch (side) {
          case 0: i = d * ix + k; j = d * iy; break;
          case 1: i = d * (ix + 1); j = d * iy + k; break;
          case 2: i = d * ix + k; j = d * (iy + 1); break;
          default: i = d * ix; j = d * iy + k; break;
        }
        e.nodes.push_back(lat(i, j));
      }
      e.a = nodes_[e.nodes.front()];
      e.b = nodes_[e.nodes.back()];
      for (auto n : e.nodes) on_boundary_[n] = true;
      edges_.push_back(std::move(e));
    }
  }
}

StructuredMesh::Box StructuredMesh::cell_box(std::size_t c) const {
  const auto [ix, iy] = cells_.at(c);
  return {xb_[ix], xb_[ix + 1], yb_[iy], yb_[iy + 1]};
}

Point StructuredMesh::cell_center(std::size_t c) const {
  const auto b = cell_box(c);
  return {0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1)};
}

std::span<const std::size_t> StructuredMesh::cell_nodes(std::size_t c) const {
  const std::size_t nloc = nodes_per_cell();
  return {conn_.data() + c * nloc, nloc};
}

std::optional<std::size_t> StructuredMesh::find_node(const Point& p, double tol) const {
  auto i = nearest_line(lxc_, p.x, tol);
  auto j = nearest_line(lyc_, p.y, tol);
  if (!i || !j) return std::nullopt;
  const long id = lattice_to_node_[*j * lx_ + *i];
  if (id < 0) return std::nullopt;
  return static_cast<std::size_t>(id);
}

std::optional<std::size_t> StructuredMesh::locate_cell(const Point& p) const {
  if (p.x < xb_.front() || p.x > xb_.back() || p.y < yb_.front() || p.y > yb_.back()) return std::nullopt;
  const std::size_t nx = xb_.size() - 1;
  const std::size_t ny = yb_.size() - 1;
  auto ix = static_cast<std::size_t>(std::upper_bound(xb_.begin(), xb_.end(), p.x) - xb_.begin());
  auto iy = static_cast<std::size_t>(std::upper_bound(yb_.begin(), yb_.end(), p.y) - yb_.begin());
  ix = ix == 0 ? 0 : std::min(ix - 1, nx - 1);
  iy = iy == 0 ? 0 : std::min(iy - 1, ny - 1);
  // Points on grid lines may belong to an inactive neighbour; probe the adjacent cells.
  for (long dy = 0; dy >= -1; --dy)
    for (long dx = 0; dx >= -1; --dx) {
      const long cx = static_cast<long>(ix) + dx, cy = static_cast<long>(iy) + dy;
      if (cx < 0 || cy < 0) continue;
      const auto ux = static_cast<std::size_t>(cx), uy = static_cast<std::size_t>(cy);
      if (p.x < xb_[ux] || p.x > xb_[ux + 1] || p.y < yb_[uy] || p.y > yb_[uy + 1]) continue;
      const long id = grid_to_cell_[uy * nx + ux];
      if (id >= 0) return static_cast<std::size_t>(id);
    }
  return std::nullopt;
}

double StructuredMesh::diameter() const {
  return std::hypot(xb_.back() - xb_.front(), yb_.back() - yb_.front());
}

Rule1D gauss_legendre(int n) {
  Rule1D r;
  auto put = [&](std::initializer_list<double> pts, std::initializer_list<double> wts) {
    for (double p : pts) r.points.push_back(0.5 * (p + 1.0));
    for (double w : wts) r.weights.push_back(0.5 * w);
  };
  switch (n) {
    case 1: put({0.0}, {2.0}); break;
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      put({-a, a}, {1.0, 1.0});
      break;
    }
    case 3: {
      const double a = std::sqrt(0.6);
      put({-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0});
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0, wb = (18.0 - std::sqrt(30.0)) / 36.0;
      put({-b, -a, a, b}, {wb, wa, wa, wb});
      break;
    }
    case 5: {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double w0 = 128.0 / 225.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      put({-b, -a, 0.0, a, b}, {wb, wa, w0, wa, wb});
      break;
    }
    default: throw std::invalid_argument("Gauss-Legendre rule available for 1..5 points");
  }
  return r;
}

}  // namespace pgdschwarz::fem
