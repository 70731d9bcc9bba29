#pragma once

#include <Eigen/SparseLU>

#include <memory>
#include <vector>

#include "pgdschwarz/schwarz_online.hpp"

namespace pgdschwarz {

// Affine data of a subdomain problem evaluated at fixed parameters, over all mesh nodes.
SpMat operator_at(const SubdomainProblem& problem, const ParamPoint& mu);
Vec load_at(const SubdomainProblem& problem, const ParamPoint& mu);
Vec dirichlet_at(const SubdomainProblem& problem, const ParamPoint& mu);

// Exact local solve with the interior block factorized once.
class FemEvaluator : public LocalEvaluator {
 public:
  FemEvaluator(const SubdomainProblem& problem, const ParamPoint& mu);

  std::size_t num_nodes() const override { return n_nodes_; }
  std::size_t num_interface_dofs() const override { return interface_.size(); }
  Vec evaluate(const Vec& lambda, bool with_source) const override;
  Vec evaluate_rows(const Vec& lambda, const std::vector<std::size_t>& rows, bool with_source) const override;

 private:
  std::size_t n_nodes_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> interface_;
  SpMat a_;
  Vec load_;
  Vec dirichlet_;
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
};

std::vector<std::shared_ptr<const LocalEvaluator>> fem_evaluators(const MultiDomainProblem& problem,
                                                                   const std::vector<const SubdomainProblem*>& refs,
                                                                   const ParamPoint& mu);
std::vector<const fem::DofPartition*> partitions_of(const std::vector<const SubdomainProblem*>& refs);

// Global conforming FEM on the union mesh: each cell carries its owner's reference element data.
Vec monolithic_fem(const MultiDomainProblem& problem, const GlobalMesh& mesh,
                   const std::vector<const SubdomainProblem*>& refs, const ParamPoint& mu);

enum class DdDriver { Gmres, GaussSeidel };

struct DdFemSettings {
  DdDriver driver = DdDriver::Gmres;
  GmresSettings gmres;
  double sweep_tol = 1e-8;
  int max_sweeps = 10000;
};

struct DdFemResult {
  Vec field;
  Vec lambda;
  int iterations = 0;
  bool converged = false;
  double mismatch = 0.0;
  std::vector<double> history;
};

DdFemResult dd_fem_schwarz(const MultiDomainProblem& problem, const GlobalMesh& mesh,
                           const std::vector<const SubdomainProblem*>& refs, const ParamPoint& mu,
                           const DdFemSettings& settings);

double analytic_test1(double mu, double x, double y);

// Relative L2 error of a nodal field on the global mesh against a closed-form solution.
double relative_l2_error(const MultiDomainProblem& problem, const GlobalMesh& mesh, const Vec& field,
                         const ParamPoint& mu, const fem::ScalarField& exact);
// max |a - ref| / max |ref|
double scaled_max_error(const Vec& a, const Vec& ref);

}  // namespace pgdschwarz
