#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "pgdschwarz/subdomain_models.hpp"

namespace pgdschwarz {

GeometricMap GeometricMap::identity() { return {}; }

GeometricMap GeometricMap::graetz(double h_bar, double x_offset, std::string axis) {
  GeometricMap m;
  m.kind = Kind::GraetzStretch;
  m.h_bar = h_bar;
  m.x_offset = x_offset;
  m.stretch_axis = std::move(axis);
  return m;
}

GeometricMap GeometricMap::rigid(fem::Point translation, int quarter_turns, fem::Point center) {
  GeometricMap m;
  m.kind = Kind::Rigid;
  m.translation = translation;
  m.quarter_turns = ((quarter_turns % 4) + 4) % 4;
  m.center = center;
  return m;
}

double GeometricMap::zeta(double mu2) const { return (mu2 - h_bar) / (1.0 - h_bar); }

namespace {

fem::Point turn(const fem::Point& d, int k) {
  switch (((k % 4) + 4) % 4) {
    case 1: return {-d.y, d.x};
    case 2: return {-d.x, -d.y};
    case 3: return {d.y, -d.x};
    default: return d;
  }
}

}  // namespace

fem::Point GeometricMap::to_physical(const fem::Point& ref, const ParamPoint& mu) const {
  switch (kind) {
    case Kind::Identity: return ref;
    case Kind::GraetzStretch: {
      const double z = zeta(lookup(mu, stretch_axis));
      const double x = ref.x <= h_bar ? x_offset + ref.x : x_offset + h_bar + z * (ref.x - h_bar);
      return {x, ref.y};
    }
    case Kind::Rigid: {
      const auto r = turn({ref.x - center.x, ref.y - center.y}, quarter_turns);
      return {r.x + center.x + translation.x, r.y + center.y + translation.y};
    }
  }
  return ref;
}

fem::Point GeometricMap::to_reference(const fem::Point& phys, const ParamPoint& mu) const {
  switch (kind) {
    case Kind::Identity: return phys;
    case Kind::GraetzStretch: {
      const double z = zeta(lookup(mu, stretch_axis));
      const double xl = phys.x - x_offset;
      const double x = xl <= h_bar ? xl : h_bar + (xl - h_bar) / z;
      return {x, phys.y};
    }
    case Kind::Rigid: {
      const auto r = turn({phys.x - translation.x - center.x, phys.y - translation.y - center.y}, -quarter_turns);
      return {r.x + center.x, r.y + center.y};
    }
  }
  return phys;
}

void GeometricMap::validate(const ParamAxis* bounds) const {
  if (kind != Kind::GraetzStretch) return;
  if (!(h_bar > 0.0 && h_bar < 1.0)) throw std::invalid_argument("stretch offset must lie in (0, 1)");
  if (bounds && !(zeta(bounds->lo()) > 0.0))
    throw std::invalid_argument("stretch factor must stay positive over the '" + stretch_axis + "' range");
}

std::vector<OperatorForm> channel_forms(const ChannelPhysics& physics) {
  std::vector<OperatorForm> out;
  const auto inv = [](double m) { return 1.0 / m; };
  fem::FormTerm diff;
  diff.kind = fem::FormKind::Diffusion;
  diff.constant_coefficient = true;
  out.push_back({"diffusion", diff, {{physics.diffusion_axis, inv}}});
  fem::FormTerm conv;
  conv.kind = fem::FormKind::Convection;
  conv.velocity = physics.velocity;
  out.push_back({"convection", conv, {}});
  fem::FormTerm supg;
  supg.kind = fem::FormKind::Supg;
  supg.velocity = physics.velocity;
  supg.coeff = physics.tau;
  out.push_back({"supg", supg, {}});
  return out;
}

// The velocity is assumed aligned with the stretch direction.
std::vector<OperatorForm> pull_back_graetz(const ChannelPhysics& physics, const GeometricMap& map) {
  if (map.kind != GeometricMap::Kind::GraetzStretch) throw std::invalid_argument("pull-back needs a stretch map");
  const double hb = map.h_bar;
  const auto inv = [](double m) { return 1.0 / m; };
  const auto inv_zeta = [map](double m) { return 1.0 / map.zeta(m); };
  const auto zeta = [map](double m) { return map.zeta(m); };
  const fem::ScalarField in_fixed = [hb](const fem::Point& p) { return p.x < hb ? 1.0 : 0.0; };
  const fem::ScalarField in_stretch = [hb](const fem::Point& p) { return p.x < hb ? 0.0 : 1.0; };
  const auto& ax = map.stretch_axis;
  std::vector<OperatorForm> out;

  fem::FormTerm d1;
  d1.kind = fem::FormKind::Diffusion;
  d1.coeff = in_fixed;
  out.push_back({"diffusion_fixed", d1, {{physics.diffusion_axis, inv}}});
  fem::FormTerm dxx;
  dxx.kind = fem::FormKind::Diffusion;
  dxx.coeff = in_stretch;
  dxx.anisotropy = [](const fem::Point&) { return std::array<double, 4>{1.0, 0.0, 0.0, 0.0}; };
  out.push_back({"diffusion_stretch_x", dxx, {{physics.diffusion_axis, inv}, {ax, inv_zeta}}});
  fem::FormTerm dyy = dxx;
  dyy.anisotropy = [](const fem::Point&) { return std::array<double, 4>{0.0, 0.0, 0.0, 1.0}; };
  out.push_back({"diffusion_stretch_y", dyy, {{physics.diffusion_axis, inv}, {ax, zeta}}});

  fem::FormTerm conv;
  conv.kind = fem::FormKind::Convection;
  conv.velocity = physics.velocity;
  out.push_back({"convection", conv, {}});

  const auto tau = physics.tau;
  fem::FormTerm s1;
  s1.kind = fem::FormKind::Supg;
  s1.velocity = physics.velocity;
  s1.coeff = [tau, in_fixed](const fem::Point& p) { return in_fixed(p) * tau(p); };
  out.push_back({"supg_fixed", s1, {}});
  fem::FormTerm s2 = s1;
  s2.coeff = [tau, in_stretch](const fem::Point& p) { return in_stretch(p) * tau(p); };
  out.push_back({"supg_stretch", s2, {{ax, inv_zeta}}});
  return out;
}

ParamPoint local_parameters(const PlacedSubdomain& p, const ParamPoint& global) {
  ParamPoint local = global;
  for (const auto& [l, g] : p.binding) local[l] = lookup(global, g);
  return local;
}

std::vector<fem::Point> place_nodes(const fem::StructuredMesh& mesh, const GeometricMap& map, const ParamPoint& mu) {
  std::vector<fem::Point> out(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) out[i] = map.to_physical(mesh.node(i), mu);
  return out;
}

void check_parameters(const MultiDomainProblem& problem, const ParamPoint& mu) {
  for (const auto& a : problem.parameters) {
    auto it = mu.find(a->name());
    if (it == mu.end()) throw std::invalid_argument("missing parameter '" + a->name() + "'");
    if (!std::isfinite(it->second) || !a->contains(it->second))
      throw std::out_of_range("parameter '" + a->name() + "' = " + std::to_string(it->second) + " outside [" +
                              std::to_string(a->lo()) + ", " + std::to_string(a->hi()) + "]");
  }
  for (const auto& pl : problem.placements) {
    if (pl.reference >= problem.references.size())
      throw std::invalid_argument("placement '" + pl.name + "' refers to a missing reference");
    for (const auto& [l, g] : pl.binding)
      if (!mu.count(g)) throw std::invalid_argument("placement '" + pl.name + "' binds unknown parameter '" + g + "'");
  }
}

namespace {

// Incremental coincident-point merger on a hashed grid.
class PointMerger {
 public:
  explicit PointMerger(double tol) : tol_(tol), cell_(std::max(4.0 * tol, 1e-300)) {}

  std::size_t insert(const fem::Point& p, std::vector<fem::Point>& store, bool* created = nullptr) {
    const auto kx = key(p.x), ky = key(p.y);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find(pack(kx + dx, ky + dy));
        if (it == grid_.end()) continue;
        for (auto idx : it->second)
          if (std::abs(store[idx].x - p.x) <= tol_ && std::abs(store[idx].y - p.y) <= tol_) {
            if (created) *created = false;
            return idx;
          }
      }
    store.push_back(p);
    grid_[pack(kx, ky)].push_back(store.size() - 1);
    if (created) *created = true;
    return store.size() - 1;
  }

 private:
  long long key(double v) const { return static_cast<long long>(std::floor(v / cell_)); }
  static std::uint64_t pack(long long a, long long b) {
    return (static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(b);
  }

  double tol_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid_;
};

}  // namespace

GlobalMesh build_global_mesh(const MultiDomainProblem& problem, const ParamPoint& mu) {
  check_parameters(problem, mu);
  GlobalMesh g;
  double scale = 0.0;
  for (const auto& r : problem.references) scale = std::max(scale, r->mesh.diameter());
  const double tol = 1e-9 * std::max(scale, 1.0);
  PointMerger nodes(tol);
  PointMerger centers(tol);
  std::vector<fem::Point> center_store;
  for (std::size_t p = 0; p < problem.placements.size(); ++p) {
    const auto& pl = problem.placements[p];
    const auto& mesh = problem.references[pl.reference]->mesh;
    const auto local = local_parameters(pl, mu);
    g.placed_nodes.push_back(place_nodes(mesh, pl.map, local));
    const auto& placed = g.placed_nodes.back();
    std::vector<std::size_t> l2g(placed.size());
    for (std::size_t i = 0; i < placed.size(); ++i) l2g[i] = nodes.insert(placed[i], g.nodes);
    std::vector<long> owned(mesh.num_cells(), -1);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const auto cn = mesh.cell_nodes(c);
      fem::Point mid{0.0, 0.0};
      for (auto n : cn) {
        mid.x += placed[n].x;
        mid.y += placed[n].y;
      }
      mid.x /= static_cast<double>(cn.size());
      mid.y /= static_cast<double>(cn.size());
      bool created = false;
      centers.insert(mid, center_store, &created);
      if (!created) continue;
      fem::VtkCell vc;
      vc.degree = mesh.degree();
      for (auto n : cn) vc.nodes.push_back(l2g[n]);
      owned[c] = static_cast<long>(g.cells.size());
      g.cells.push_back(std::move(vc));
      g.cell_owner.push_back(p);
      g.cell_reference_index.push_back(c);
    }
    g.local_to_global.push_back(std::move(l2g));
    g.owned_cell.push_back(std::move(owned));
  }
  return g;
}

}  // namespace pgdschwarz
