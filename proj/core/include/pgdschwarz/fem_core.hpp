#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pgdschwarz::fem {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<std::array<double, 2>(const Point&)>;
// Row-major 2x2 tensor {a_xx, a_xy, a_yx, a_yy}.
using TensorField = std::function<std::array<double, 4>(const Point&)>;
using PointPredicate = std::function<bool(const Point&)>;

ScalarField constant(double c);

// Gauss-Legendre rule on [0,1].
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
};
Rule1D gauss_legendre(int n);

// Tensor grid of lines with an optional mask that deactivates cells (tested at cell centres).
// Nodes are numbered lexicographically, x fastest, skipping nodes not touched by active cells.
class StructuredMesh {
 public:
  StructuredMesh() = default;
  StructuredMesh(std::vector<double> x_breaks, std::vector<double> y_breaks, int degree = 1,
                 PointPredicate active_cell = {});

  int degree() const { return degree_; }
  std::size_t nodes_per_cell() const { return static_cast<std::size_t>((degree_ + 1) * (degree_ + 1)); }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  const std::vector<double>& x_breaks() const { return xb_; }
  const std::vector<double>& y_breaks() const { return yb_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Point>& nodes() const { return nodes_; }

  struct Box {
    double x0, x1, y0, y1;
  };
  Box cell_box(std::size_t c) const;
  Point cell_center(std::size_t c) const;
  // Local ordering is lexicographic on the element lattice, x fastest.
  std::span<const std::size_t> cell_nodes(std::size_t c) const;

  // side: 0 bottom, 1 right, 2 top, 3 left.
  struct Edge {
    std::size_t cell;
    int side;
    std::vector<std::size_t> nodes;  // along the edge, from its first to its last point
    Point a, b;
  };
  const std::vector<Edge>& boundary_edges() const { return edges_; }
  const std::vector<bool>& on_boundary() const { return on_boundary_; }

  std::optional<std::size_t> find_node(const Point& p, double tol) const;
  std::optional<std::size_t> locate_cell(const Point& p) const;
  double diameter() const;

 private:
  std::vector<double> xb_, yb_;
  int degree_ = 1;
  std::size_t lx_ = 0, ly_ = 0;  // lattice sizes
  std::vector<double> lxc_, lyc_;
  std::vector<long> lattice_to_node_;
  std::vector<long> grid_to_cell_;
  std::vector<Point> nodes_;
  std::vector<std::size_t> cell_ij_;
  std::vector<std::size_t> conn_;
  std::vector<std::pair<std::size_t, std::size_t>> cells_;
  std::vector<Edge> edges_;
  std::vector<bool> on_boundary_;
};

enum class FormKind { Diffusion, Convection, Mass, Supg };

// One sectional bilinear form. Diffusion: coeff * grad(v).A grad(w); Convection: (vel.grad v) w;
// Mass: coeff v w; Supg: coeff (vel.S_r grad v)(vel.S_l grad w), S scaling the x-derivative.
struct FormTerm {
  FormKind kind = FormKind::Diffusion;
  ScalarField coeff;
  TensorField anisotropy;
  VectorField velocity;
  ScalarField left_scale;
  ScalarField right_scale;
  bool constant_coefficient = false;
  int quadrature = 0;  // points per direction, 0 = automatic
};

int quadrature_points(const StructuredMesh& mesh, const FormTerm& term);

// Rows are test functions, columns trial functions.
Eigen::MatrixXd element_matrix(const StructuredMesh& mesh, std::size_t cell, const FormTerm& term);
SparseMatrix assemble(const StructuredMesh& mesh, const FormTerm& term);

SparseMatrix assemble_stiffness(const StructuredMesh& mesh, ScalarField coeff, TensorField anisotropy = {});
SparseMatrix assemble_convection(const StructuredMesh& mesh, VectorField velocity);
SparseMatrix assemble_mass(const StructuredMesh& mesh, ScalarField coeff);
SparseMatrix assemble_supg(const StructuredMesh& mesh, VectorField velocity, ScalarField tau,
                           ScalarField left_scale = {}, ScalarField right_scale = {});

Eigen::VectorXd element_load(const StructuredMesh& mesh, std::size_t cell, const ScalarField& source, int quad = 3);
Eigen::VectorXd edge_load(const StructuredMesh& mesh, const StructuredMesh::Edge& edge, const ScalarField& flux,
                          int quad = 3);
Vector assemble_load(const StructuredMesh& mesh, const ScalarField& source);
// Integrates flux against test functions on boundary edges whose midpoint satisfies `on`.
Vector assemble_neumann(const StructuredMesh& mesh, const PointPredicate& on, const ScalarField& flux);

// Element-wise constant stabilization parameter h (1 + 9/Pe^2)^(-1/(4|a1|)), Pe = |a1| h mu / 2,
// with h the horizontal cell size and a1 the horizontal velocity at the cell centre.
std::vector<double> supg_tau_cells(const StructuredMesh& mesh, const VectorField& velocity, double mu_frozen);
double supg_tau_value(double a1, double h, double mu_frozen);
ScalarField cellwise_field(const StructuredMesh& mesh, std::vector<double> values);
ScalarField supg_tau(const StructuredMesh& mesh, const VectorField& velocity, double mu_frozen);

// Shape functions on the reference square, lattice ordering x fastest.
void shape_values(int degree, double s, double t, double* phi);
void shape_gradients(int degree, double s, double t, double* dphi_ds, double* dphi_dt);

// Interior / interface / external-Dirichlet classification of the mesh nodes.
struct InterfaceSpec {
  std::string name;
  PointPredicate on;
};

struct DofPartition {
  enum Role : int { Interior = 0, Interface = 1, Dirichlet = 2 };
  std::vector<std::size_t> interior;
  std::vector<std::string> interface_names;
  std::vector<std::vector<std::size_t>> interfaces;
  std::vector<std::size_t> external_dirichlet;
  std::vector<int> role;
  std::vector<long> interior_index;  // node -> row in interior block, -1 otherwise

  std::size_t num_interface_dofs() const;
  std::vector<std::size_t> interface_dofs() const;  // concatenated, interface order
  std::size_t interface_index(const std::string& name) const;
};

// Boundary nodes satisfying `dirichlet` are external Dirichlet; remaining boundary nodes satisfying
// an interface predicate belong to that interface (first match wins). Everything else is interior.
DofPartition make_partition(const StructuredMesh& mesh, const std::vector<InterfaceSpec>& interfaces,
                            const PointPredicate& dirichlet);

// Rows/columns extraction that keeps the stored pattern (explicit zeros included).
SparseMatrix submatrix(const SparseMatrix& a, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols);
Vector gather(const Vector& v, const std::vector<std::size_t>& idx);

// Negated full-matrix column of every requested boundary DOF, restricted to interior rows.
std::map<std::size_t, Vector> dirichlet_columns(const SparseMatrix& full, const DofPartition& partition,
                                                const std::vector<std::size_t>& dofs);

// Coordinate hash over a point cloud for coincident-node matching.
class NodeLocator {
 public:
  NodeLocator(const std::vector<Point>& points, double tol);
  std::optional<std::size_t> find(const Point& p) const;

 private:
  std::vector<Point> points_;
  double tol_;
  double cell_;
  std::multimap<std::pair<long long, long long>, std::size_t> grid_;
};

// For every target point, the index of the coincident source node; candidates restricted by
// `allowed` when non-empty. Throws std::runtime_error on an unmatched point.
std::vector<std::size_t> restriction(const std::vector<Point>& source_nodes, const std::vector<bool>& allowed,
                                     const std::vector<Point>& targets, double tol);

// Legacy ASCII VTK unstructured grid with point-data scalars. Q2 cells are split into four quads.
struct VtkCell {
  std::vector<std::size_t> nodes;  // lattice ordering, x fastest
  int degree = 1;
};
void write_vtk(const std::string& path, const std::vector<Point>& points, const std::vector<VtkCell>& cells,
               const std::vector<std::pair<std::string, const Vector*>>& fields, const std::string& title = "field");
void write_vtk(const std::string& path, const StructuredMesh& mesh,
               const std::vector<std::pair<std::string, const Vector*>>& fields);

}  // namespace pgdschwarz::fem
