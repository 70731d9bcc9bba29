#include <cmath>
#include <memory>
#include <stdexcept>

#include "pgdschwarz/fem_core.hpp"

namespace pgdschwarz::fem {

namespace {

void basis_1d(int degree, double s, double* v, double* dv) {
  if (degree == 1) {
    v[0] = 1.0 - s;
    v[1] = s;
    dv[0] = -1.0;
    dv[1] = 1.0;
  } else {
    v[0] = 2.0 * (s - 0.5) * (s - 1.0);
    v[1] = -4.0 * s * (s - 1.0);
    v[2] = 2.0 * s * (s - 0.5);
    dv[0] = 4.0 * s - 3.0;
    dv[1] = -8.0 * s + 4.0;
    dv[2] = 4.0 * s - 1.0;
  }
}

}  // namespace

void shape_values(int degree, double s, double t, double* phi) {
  double vs[3], ds[3], vt[3], dt[3];
  basis_1d(degree, s, vs, ds);
  basis_1d(degree, t, vt, dt);
  const int n = degree + 1;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) phi[b * n + a] = vs[a] * vt[b];
}

void shape_gradients(int degree, double s, double t, double* dphi_ds, double* dphi_dt) {
  double vs[3], ds[3], vt[3], dt[3];
  basis_1d(degree, s, vs, ds);
  basis_1d(degree, t, vt, dt);
  const int n = degree + 1;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      dphi_ds[b * n + a] = ds[a] * vt[b];
      dphi_dt[b * n + a] = vs[a] * dt[b];
    }
}

int quadrature_points(const StructuredMesh& mesh, const FormTerm& term) {
  if (term.quadrature > 0) return term.quadrature;
  // Squared velocity in the streamline term: four points keep quadratic profiles exact.
  if (term.kind == FormKind::Supg) return mesh.degree() == 1 ? 4 : 5;
  return (mesh.degree() == 1 && term.constant_coefficient) ? 2 : 3;
}

Eigen::MatrixXd element_matrix(const StructuredMesh& mesh, std::size_t cell, const FormTerm& term) {
  const int deg = mesh.degree();
  const int nloc = static_cast<int>(mesh.nodes_per_cell());
  const auto box = mesh.cell_box(cell);
  const double hx = box.x1 - box.x0, hy = box.y1 - box.y0;
  if (!(hx > 0.0 && hy > 0.0)) throw std::runtime_error("singular element Jacobian");
  const auto rule = gauss_legendre(quadrature_points(mesh, term));
  Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(nloc, nloc);
  double phi[9], gs[9], gt[9], gx[9], gy[9];
  for (std::size_t qj = 0; qj < rule.points.size(); ++qj) {
    for (std::size_t qi = 0; qi < rule.points.size(); ++qi) {
      const double s = rule.points[qi], t = rule.points[qj];
      const double w = rule.weights[qi] * rule.weights[qj] * hx * hy;
      const Point p{box.x0 + s * hx, box.y0 + t * hy};
      shape_values(deg, s, t, phi);
      shape_gradients(deg, s, t, gs, gt);
      for (int k = 0; k < nloc; ++k) {
        gx[k] = gs[k] / hx;
        gy[k] = gt[k] / hy;
      }
      switch (term.kind) {
        case FormKind::Diffusion: {
          const double c = term.coeff ? term.coeff(p) : 1.0;
          if (c == 0.0) break;
          std::array<double, 4> a{1.0, 0.0, 0.0, 1.0};
          if (term.anisotropy) a = term.anisotropy(p);
          for (int j = 0; j < nloc; ++j) {
            const double fx = a[0] * gx[j] + a[1] * gy[j];
            const double fy = a[2] * gx[j] + a[3] * gy[j];
            for (int i = 0; i < nloc; ++i) ke(i, j) += w * c * (fx * gx[i] + fy * gy[i]);
          }
          break;
        }
        case FormKind::Convection: {
          const auto v = term.velocity(p);
          const double c = term.coeff ? term.coeff(p) : 1.0;
          for (int j = 0; j < nloc; ++j) {
            const double adv = v[0] * gx[j] + v[1] * gy[j];
            for (int i = 0; i < nloc; ++i) ke(i, j) += w * c * adv * phi[i];
          }
          break;
        }
        case FormKind::Mass: {
          const double c = term.coeff ? term.coeff(p) : 1.0;
          for (int j = 0; j < nloc; ++j)
            for (int i = 0; i < nloc; ++i) ke(i, j) += w * c * phi[j] * phi[i];
          break;
        }
        case FormKind::Supg: {
          const double tau = term.coeff ? term.coeff(p) : 1.0;
          if (tau < 0.0) throw std::invalid_argument("stabilization parameter must be non-negative");
          if (tau == 0.0) break;
          const auto v = term.velocity(p);
          const double sl = term.left_scale ? term.left_scale(p) : 1.0;
          const double sr = term.right_scale ? term.right_scale(p) : 1.0;
          for (int j = 0; j < nloc; ++j) {
            const double trial = v[0] * sr * gx[j] + v[1] * gy[j];
            for (int i = 0; i < nloc; ++i) ke(i, j) += w * tau * trial * (v[0] * sl * gx[i] + v[1] * gy[i]);
          }
          break;
        }
      }
    }
  }
  return ke;
}

SparseMatrix assemble(const StructuredMesh& mesh, const FormTerm& term) {
  const std::size_t nloc = mesh.nodes_per_cell();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_cells() * nloc * nloc);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto ke = element_matrix(mesh, c, term);
    const auto nodes = mesh.cell_nodes(c);
    for (std::size_t j = 0; j < nloc; ++j)
      for (std::size_t i = 0; i < nloc; ++i)
        trip.emplace_back(static_cast<int>(nodes[i]), static_cast<int>(nodes[j]),
                          ke(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

SparseMatrix assemble_stiffness(const StructuredMesh& mesh, ScalarField coeff, TensorField anisotropy) {
  FormTerm t;
  t.kind = FormKind::Diffusion;
  t.coeff = std::move(coeff);
  t.anisotropy = std::move(anisotropy);
  return assemble(mesh, t);
}

SparseMatrix assemble_convection(const StructuredMesh& mesh, VectorField velocity) {
  FormTerm t;
  t.kind = FormKind::Convection;
  t.velocity = std::move(velocity);
  return assemble(mesh, t);
}

SparseMatrix assemble_mass(const StructuredMesh& mesh, ScalarField coeff) {
  FormTerm t;
  t.kind = FormKind::Mass;
  t.coeff = std::move(coeff);
  return assemble(mesh, t);
}

SparseMatrix assemble_supg(const StructuredMesh& mesh, VectorField velocity, ScalarField tau, ScalarField left_scale,
                           ScalarField right_scale) {
  FormTerm t;
  t.kind = FormKind::Supg;
  t.velocity = std::move(velocity);
  t.coeff = std::move(tau);
  t.left_scale = std::move(left_scale);
  t.right_scale = std::move(right_scale);
  return assemble(mesh, t);
}

Eigen::VectorXd element_load(const StructuredMesh& mesh, std::size_t cell, const ScalarField& source, int quad) {
  const int deg = mesh.degree();
  const int nloc = static_cast<int>(mesh.nodes_per_cell());
  const auto box = mesh.cell_box(cell);
  const double hx = box.x1 - box.x0, hy = box.y1 - box.y0;
  const auto rule = gauss_legendre(quad);
  Eigen::VectorXd fe = Eigen::VectorXd::Zero(nloc);
  double phi[9];
  for (std::size_t qj = 0; qj < rule.points.size(); ++qj)
    for (std::size_t qi = 0; qi < rule.points.size(); ++qi) {
      const double s = rule.points[qi], t = rule.points[qj];
      const double f = source(Point{box.x0 + s * hx, box.y0 + t * hy});
      if (f == 0.0) continue;
      shape_values(deg, s, t, phi);
      const double w = rule.weights[qi] * rule.weights[qj] * hx * hy * f;
      for (int i = 0; i < nloc; ++i) fe(i) += w * phi[i];
    }
  return fe;
}

Eigen::VectorXd edge_load(const StructuredMesh& mesh, const StructuredMesh::Edge& edge, const ScalarField& flux,
                          int quad) {
  const int deg = mesh.degree();
  const auto rule = gauss_legendre(quad);
  const double len = std::hypot(edge.b.x - edge.a.x, edge.b.y - edge.a.y);
  Eigen::VectorXd fe = Eigen::VectorXd::Zero(deg + 1);
  double v[3];
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double s = rule.points[q];
    const Point p{edge.a.x + s * (edge.b.x - edge.a.x), edge.a.y + s * (edge.b.y - edge.a.y)};
    const double g = flux(p);
    if (g == 0.0) continue;
    if (deg == 1) {
      v[0] = 1.0 - s;
      v[1] = s;
    } else {
      v[0] = 2.0 * (s - 0.5) * (s - 1.0);
      v[1] = -4.0 * s * (s - 1.0);
      v[2] = 2.0 * s * (s - 0.5);
    }
    for (int k = 0; k <= deg; ++k) fe(k) += rule.weights[q] * len * g * v[k];
  }
  return fe;
}

Vector assemble_load(const StructuredMesh& mesh, const ScalarField& source) {
  Vector f = Vector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto fe = element_load(mesh, c, source);
    const auto nodes = mesh.cell_nodes(c);
    for (std::size_t i = 0; i < nodes.size(); ++i) f(static_cast<Eigen::Index>(nodes[i])) += fe(static_cast<Eigen::Index>(i));
  }
  return f;
}

Vector assemble_neumann(const StructuredMesh& mesh, const PointPredicate& on, const ScalarField& flux) {
  Vector f = Vector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  for (const auto& e : mesh.boundary_edges()) {
    const Point mid{0.5 * (e.a.x + e.b.x), 0.5 * (e.a.y + e.b.y)};
    if (!on(mid)) continue;
    const auto fe = edge_load(mesh, e, flux);
    for (std::size_t k = 0; k < e.nodes.size(); ++k) f(static_cast<Eigen::Index>(e.nodes[k])) += fe(static_cast<Eigen::Index>(k));
  }
  return f;
}

double supg_tau_value(double a1, double h, double mu_frozen) {
  const double a = std::abs(a1);
  if (a == 0.0) return 0.0;
  const double pe = a * h * mu_frozen / 2.0;
  return h * std::pow(1.0 + 9.0 / (pe * pe), -1.0 / (4.0 * a));
}

std::vector<double> supg_tau_cells(const StructuredMesh& mesh, const VectorField& velocity, double mu_frozen) {
  std::vector<double> tau(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto box = mesh.cell_box(c);
    tau[c] = supg_tau_value(velocity(mesh.cell_center(c))[0], box.x1 - box.x0, mu_frozen);
  }
  return tau;
}

ScalarField cellwise_field(const StructuredMesh& mesh, std::vector<double> values) {
  if (values.size() != mesh.num_cells()) throw std::invalid_argument("cellwise field needs one value per cell");
  auto m = std::make_shared<const StructuredMesh>(mesh);
  auto v = std::make_shared<const std::vector<double>>(std::move(values));
  return [m, v](const Point& p) {
    auto c = m->locate_cell(p);
    if (!c) throw std::out_of_range("point outside the mesh of a cellwise field");
    return (*v)[*c];
  };
}

ScalarField supg_tau(const StructuredMesh& mesh, const VectorField& velocity, double mu_frozen) {
  return cellwise_field(mesh, supg_tau_cells(mesh, velocity, mu_frozen));
}

}  // namespace pgdschwarz::fem
