#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pgdschwarz/fem_core.hpp"

namespace pgdschwarz::fem {

std::size_t DofPartition::num_interface_dofs() const {
  std::size_t n = 0;
  for (const auto& g : interfaces) n += g.size();
  return n;
}

std::vector<std::size_t> DofPartition::interface_dofs() const {
  std::vector<std::size_t> out;
  for (const auto& g : interfaces) out.insert(out.end(), g.begin(), g.end());
  return out;
}

std::size_t DofPartition::interface_index(const std::string& name) const {
  for (std::size_t k = 0; k < interface_names.size(); ++k)
    if (interface_names[k] == name) return k;
  throw std::invalid_argument("unknown interface '" + name + "'");
}

DofPartition make_partition(const StructuredMesh& mesh, const std::vector<InterfaceSpec>& interfaces,
                            const PointPredicate& dirichlet) {
  DofPartition p;
  const std::size_t n = mesh.num_nodes();
  p.role.assign(n, DofPartition::Interior);
  p.interior_index.assign(n, -1);
  p.interfaces.resize(interfaces.size());
  for (const auto& g : interfaces) p.interface_names.push_back(g.name);
  const auto& bnd = mesh.on_boundary();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& x = mesh.node(i);
    if (bnd[i] && dirichlet && dirichlet(x)) {
      p.role[i] = DofPartition::Dirichlet;
      p.external_dirichlet.push_back(i);
      continue;
    }
    bool placed = false;
    if (bnd[i]) {
      for (std::size_t k = 0; k < interfaces.size(); ++k)
        if (interfaces[k].on(x)) {
          p.role[i] = DofPartition::Interface;
          p.interfaces[k].push_back(i);
          placed = true;
          break;
        }
    }
    if (!placed) {
      p.interior_index[i] = static_cast<long>(p.interior.size());
      p.interior.push_back(i);
    }
  }
  for (std::size_t k = 0; k < interfaces.size(); ++k)
    if (p.interfaces[k].empty()) throw std::invalid_argument("interface '" + interfaces[k].name + "' has no nodes");
  return p;
}

SparseMatrix submatrix(const SparseMatrix& a, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols) {
  std::vector<long> rmap(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) rmap[rows[k]] = static_cast<long>(k);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t jc = 0; jc < cols.size(); ++jc) {
    for (SparseMatrix::InnerIterator it(a, static_cast<Eigen::Index>(cols[jc])); it; ++it) {
      const long r = rmap[static_cast<std::size_t>(it.row())];
      if (r >= 0) trip.emplace_back(static_cast<int>(r), static_cast<int>(jc), it.value());
    }
  }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

Vector gather(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(idx[k]));
  return out;
}

std::map<std::size_t, Vector> dirichlet_columns(const SparseMatrix& full, const DofPartition& partition,
                                                const std::vector<std::size_t>& dofs) {
  std::map<std::size_t, Vector> out;
  const auto n_int = static_cast<Eigen::Index>(partition.interior.size());
  for (auto q : dofs) {
    if (partition.role.at(q) == DofPartition::Interior)
      throw std::invalid_argument("lifting requested for an interior DOF");
    Vector col = Vector::Zero(n_int);
    for (SparseMatrix::InnerIterator it(full, static_cast<Eigen::Index>(q)); it; ++it) {
      const long r = partition.interior_index[static_cast<std::size_t>(it.row())];
      if (r >= 0) col(r) = -it.value();
    }
    out.emplace(q, std::move(col));
  }
  return out;
}

NodeLocator::NodeLocator(const std::vector<Point>& points, double tol)
    : points_(points), tol_(tol), cell_(std::max(4.0 * tol, 1e-300)) {
  for (std::size_t i = 0; i < points_.size(); ++i)
    grid_.emplace(std::make_pair(static_cast<long long>(std::floor(points_[i].x / cell_)),
                                 static_cast<long long>(std::floor(points_[i].y / cell_))),
                  i);
}

std::optional<std::size_t> NodeLocator::find(const Point& p) const {
  const auto kx = static_cast<long long>(std::floor(p.x / cell_));
  const auto ky = static_cast<long long>(std::floor(p.y / cell_));
  for (long long dx = -1; dx <= 1; ++dx)
    for (long long dy = -1; dy <= 1; ++dy) {
      auto [lo, hi] = grid_.equal_range({kx + dx, ky + dy});
      for (auto it = lo; it != hi; ++it) {
        const Point& q = points_[it->second];
        if (std::abs(q.x - p.x) <= tol_ && std::abs(q.y - p.y) <= tol_) return it->second;
      }
    }
  return std::nullopt;
}

std::vector<std::size_t> restriction(const std::vector<Point>& source_nodes, const std::vector<bool>& allowed,
                                     const std::vector<Point>& targets, double tol) {
  NodeLocator loc(source_nodes, tol);
  std::vector<std::size_t> out;
  out.reserve(targets.size());
  for (const auto& t : targets) {
    auto k = loc.find(t);
    if (!k || (!allowed.empty() && !allowed[*k]))
      throw std::runtime_error("non-conforming meshes: no interior node at (" + std::to_string(t.x) + ", " +
                               std::to_string(t.y) + ")");
    out.push_back(*k);
  }
  return out;
}

}  // namespace pgdschwarz::fem
