#include "pgdschwarz/reference_solvers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pgdschwarz {

SpMat operator_at(const SubdomainProblem& problem, const ParamPoint& mu) {
  const auto n = static_cast<Eigen::Index>(problem.def->mesh.num_nodes());
  SpMat a(n, n);
  for (std::size_t l = 0; l < problem.operators.size(); ++l)
    a += eval_factors(problem.def->operators[l].factors, mu) * problem.operators[l];
  return a;
}

Vec load_at(const SubdomainProblem& problem, const ParamPoint& mu) {
  Vec f = Vec::Zero(static_cast<Eigen::Index>(problem.def->mesh.num_nodes()));
  for (std::size_t s = 0; s < problem.loads.size(); ++s)
    f += eval_factors(problem.def->loads[s].factors, mu) * problem.loads[s];
  return f;
}

Vec dirichlet_at(const SubdomainProblem& problem, const ParamPoint& mu) {
  Vec g = Vec::Zero(static_cast<Eigen::Index>(problem.def->mesh.num_nodes()));
  for (std::size_t k = 0; k < problem.dirichlet_values.size(); ++k)
    g += eval_factors(problem.def->dirichlet_data[k].factors, mu) * problem.dirichlet_values[k];
  return g;
}

FemEvaluator::FemEvaluator(const SubdomainProblem& problem, const ParamPoint& mu)
    : n_nodes_(problem.def->mesh.num_nodes()),
      interior_(problem.partition.interior),
      interface_(problem.partition.interface_dofs()),
      a_(operator_at(problem, mu)),
      load_(load_at(problem, mu)),
      dirichlet_(dirichlet_at(problem, mu)),
      lu_(std::make_shared<Eigen::SparseLU<SpMat>>()) {
  SpMat aff = fem::submatrix(a_, interior_, interior_);
  aff.makeCompressed();
  lu_->compute(aff);
  if (lu_->info() != Eigen::Success) throw std::runtime_error(problem.def->name + ": interior block singular");
}

Vec FemEvaluator::evaluate(const Vec& lambda, bool with_source) const {
  if (static_cast<std::size_t>(lambda.size()) != interface_.size())
    throw std::invalid_argument("interface vector has the wrong length");
  Vec u = with_source ? dirichlet_ : Vec::Zero(static_cast<Eigen::Index>(n_nodes_));
  for (std::size_t q = 0; q < interface_.size(); ++q)
    u(static_cast<Eigen::Index>(interface_[q])) = lambda(static_cast<Eigen::Index>(q));
  Vec r = -(a_ * u);
  if (with_source) r += load_;
  const Vec uf = lu_->solve(fem::gather(r, interior_));
  for (std::size_t k = 0; k < interior_.size(); ++k) u(static_cast<Eigen::Index>(interior_[k])) = uf(static_cast<Eigen::Index>(k));
  return u;
}

Vec FemEvaluator::evaluate_rows(const Vec& lambda, const std::vector<std::size_t>& rows, bool with_source) const {
  return fem::gather(evaluate(lambda, with_source), rows);
}

std::vector<std::shared_ptr<const LocalEvaluator>> fem_evaluators(const MultiDomainProblem& problem,
                                                                   const std::vector<const SubdomainProblem*>& refs,
                                                                   const ParamPoint& mu) {
  std::vector<std::shared_ptr<const LocalEvaluator>> out;
  for (const auto& pl : problem.placements)
    out.push_back(std::make_shared<FemEvaluator>(*refs.at(pl.reference), local_parameters(pl, mu)));
  return out;
}

std::vector<const fem::DofPartition*> partitions_of(const std::vector<const SubdomainProblem*>& refs) {
  std::vector<const fem::DofPartition*> out;
  for (const auto* r : refs) out.push_back(&r->partition);
  return out;
}

Vec monolithic_fem(const MultiDomainProblem& problem, const GlobalMesh& mesh,
                   const std::vector<const SubdomainProblem*>& refs, const ParamPoint& mu) {
  if (refs.size() != problem.references.size()) throw std::invalid_argument("one problem per reference required");
  const std::size_t n = mesh.nodes.size();
  std::vector<Eigen::Triplet<double>> trip;
  Vec f = Vec::Zero(static_cast<Eigen::Index>(n));
  std::vector<bool> fixed(n, false);
  Vec value = Vec::Zero(static_cast<Eigen::Index>(n));

  for (std::size_t p = 0; p < problem.placements.size(); ++p) {
    const auto& pl = problem.placements[p];
    const auto& ref = *refs[pl.reference];
    const auto& def = *ref.def;
    const auto& rmesh = def.mesh;
    const auto local = local_parameters(pl, mu);
    const auto& l2g = mesh.local_to_global[p];
    std::vector<double> op_factor, load_factor;
    for (const auto& op : def.operators) op_factor.push_back(eval_factors(op.factors, local));
    for (const auto& ld : def.loads) load_factor.push_back(eval_factors(ld.factors, local));
    for (std::size_t c = 0; c < rmesh.num_cells(); ++c) {
      if (mesh.owned_cell[p][c] < 0) continue;
      const auto cn = rmesh.cell_nodes(c);
      const auto nloc = static_cast<Eigen::Index>(cn.size());
      Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(nloc, nloc);
      for (std::size_t l = 0; l < def.operators.size(); ++l)
        if (op_factor[l] != 0.0) ke += op_factor[l] * fem::element_matrix(rmesh, c, def.operators[l].form);
      for (Eigen::Index i = 0; i < nloc; ++i)
        for (Eigen::Index j = 0; j < nloc; ++j)
          trip.emplace_back(static_cast<int>(l2g[cn[i]]), static_cast<int>(l2g[cn[j]]), ke(i, j));
      for (std::size_t s = 0; s < def.loads.size(); ++s) {
        if (def.loads[s].kind != LoadForm::Kind::Volume || load_factor[s] == 0.0) continue;
        const auto fe = fem::element_load(rmesh, c, def.loads[s].f);
        for (Eigen::Index i = 0; i < nloc; ++i) f(static_cast<Eigen::Index>(l2g[cn[i]])) += load_factor[s] * fe(i);
      }
    }
    for (std::size_t s = 0; s < def.loads.size(); ++s) {
      if (def.loads[s].kind != LoadForm::Kind::Boundary || load_factor[s] == 0.0) continue;
      for (const auto& e : rmesh.boundary_edges()) {
        if (mesh.owned_cell[p][e.cell] < 0) continue;
        const fem::Point mid{0.5 * (e.a.x + e.b.x), 0.5 * (e.a.y + e.b.y)};
        if (!def.loads[s].on(mid)) continue;
        const auto fe = fem::edge_load(rmesh, e, def.loads[s].f);
        for (std::size_t k = 0; k < e.nodes.size(); ++k)
          f(static_cast<Eigen::Index>(l2g[e.nodes[k]])) += load_factor[s] * fe(static_cast<Eigen::Index>(k));
      }
    }
    const Vec g = dirichlet_at(ref, local);
    for (auto i : ref.partition.external_dirichlet) {
      fixed[l2g[i]] = true;
      value(static_cast<Eigen::Index>(l2g[i])) = g(static_cast<Eigen::Index>(i));
    }
    for (const auto& [name, v] : pl.fixed_interfaces)
      for (auto i : ref.partition.interfaces[ref.partition.interface_index(name)]) {
        fixed[l2g[i]] = true;
        value(static_cast<Eigen::Index>(l2g[i])) = v;
      }
  }
  SpMat a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(trip.begin(), trip.end());
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i)
    if (!fixed[i]) free.push_back(i);
  Vec rhs = f - a * value;
  SpMat aff = fem::submatrix(a, free, free);
  aff.makeCompressed();
  Eigen::SparseLU<SpMat> lu(aff);
  if (lu.info() != Eigen::Success) throw std::runtime_error("monolithic system singular");
  const Vec uf = lu.solve(fem::gather(rhs, free));
  Vec u = value;
  for (std::size_t k = 0; k < free.size(); ++k) u(static_cast<Eigen::Index>(free[k])) = uf(static_cast<Eigen::Index>(k));
  return u;
}

DdFemResult dd_fem_schwarz(const MultiDomainProblem& problem, const GlobalMesh& mesh,
                           const std::vector<const SubdomainProblem*>& refs, const ParamPoint& mu,
                           const DdFemSettings& settings) {
  InterfaceSystem sys(problem, mesh, partitions_of(refs), fem_evaluators(problem, refs, mu));
  DdFemResult out;
  if (settings.driver == DdDriver::Gmres) {
    auto sol = solve_interface(sys, settings.gmres);
    out.lambda = sol.lambda;
    out.field = sol.field;
    out.mismatch = sol.mismatch;
    out.iterations = sol.gmres.iterations;
    out.converged = sol.gmres.status == GmresStatus::Converged;
    out.history = sol.gmres.history;
  } else {
    auto res = schwarz_iterate(sys, Vec::Zero(static_cast<Eigen::Index>(sys.dimension())), settings.sweep_tol,
                               settings.max_sweeps);
    out.lambda = res.lambda;
    out.field = sys.glue(res.lambda, &out.mismatch);
    out.iterations = res.sweeps;
    out.converged = res.converged;
    out.history = res.discrepancy;
  }
  return out;
}

double analytic_test1(double mu, double x, double y) {
  constexpr double tp = 2.0 * std::numbers::pi;
  return std::sin(tp * x) * std::sin(tp * y) + 0.5 * mu * x * y * (y - 1.0) * (x - 2.0);
}

double relative_l2_error(const MultiDomainProblem& problem, const GlobalMesh& mesh, const Vec& field,
                         const ParamPoint& mu, const fem::ScalarField& exact) {
  if (static_cast<std::size_t>(field.size()) != mesh.nodes.size())
    throw std::invalid_argument("field does not match the global mesh");
  const auto rule = fem::gauss_legendre(4);
  double err = 0.0, ref = 0.0;
  double phi[9];
  for (std::size_t g = 0; g < mesh.cells.size(); ++g) {
    const auto p = mesh.cell_owner[g];
    const auto c = mesh.cell_reference_index[g];
    const auto& pl = problem.placements[p];
    const auto& rmesh = problem.references[pl.reference]->mesh;
    const auto local = local_parameters(pl, mu);
    const auto box = rmesh.cell_box(c);
    const auto a = pl.map.to_physical({box.x0, box.y0}, local);
    const auto b = pl.map.to_physical({box.x1, box.y1}, local);
    const double area = std::abs((b.x - a.x) * (b.y - a.y));
    const auto cn = rmesh.cell_nodes(c);
    for (std::size_t qj = 0; qj < rule.points.size(); ++qj)
      for (std::size_t qi = 0; qi < rule.points.size(); ++qi) {
        const double s = rule.points[qi], t = rule.points[qj];
        fem::shape_values(rmesh.degree(), s, t, phi);
        double uh = 0.0;
        for (std::size_t k = 0; k < cn.size(); ++k)
          uh += phi[k] * field(static_cast<Eigen::Index>(mesh.local_to_global[p][cn[k]]));
        const auto x = pl.map.to_physical({box.x0 + s * (box.x1 - box.x0), box.y0 + t * (box.y1 - box.y0)}, local);
        const double ue = exact(x);
        const double w = rule.weights[qi] * rule.weights[qj] * area;
        err += w * (uh - ue) * (uh - ue);
        ref += w * ue * ue;
      }
  }
  if (ref == 0.0) throw std::invalid_argument("reference solution has zero L2 norm");
  return std::sqrt(err / ref);
}

double scaled_max_error(const Vec& a, const Vec& ref) {
  if (a.size() != ref.size()) throw std::invalid_argument("fields have different sizes");
  const double scale = ref.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw std::invalid_argument("reference field vanishes");
  return (a - ref).cwiseAbs().maxCoeff() / scale;
}

}  // namespace pgdschwarz
