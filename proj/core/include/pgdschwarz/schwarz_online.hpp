#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "pgdschwarz/gmres.hpp"
#include "pgdschwarz/subdomain_models.hpp"

namespace pgdschwarz {

// Local solution map of one placed subdomain at a fixed parameter value: interface values -> nodal field.
class LocalEvaluator {
 public:
  virtual ~LocalEvaluator() = default;
  virtual std::size_t num_nodes() const = 0;
  virtual std::size_t num_interface_dofs() const = 0;
  // with_source: include source, Neumann and external Dirichlet data.
  virtual Vec evaluate(const Vec& lambda, bool with_source) const = 0;
  virtual Vec evaluate_rows(const Vec& lambda, const std::vector<std::size_t>& rows, bool with_source) const = 0;
  virtual std::size_t clamp_events() const { return 0; }
  virtual void reset_clamp_events() const {}
};

// Surrogate evaluation; interface values outside the Lambda axes are clamped and counted.
class SurrogateEvaluator : public LocalEvaluator {
 public:
  SurrogateEvaluator(std::shared_ptr<const SurrogateModel> model, ParamPoint mu);

  std::size_t num_nodes() const override { return model_->num_nodes; }
  std::size_t num_interface_dofs() const override { return model_->interface_nodes.size(); }
  Vec evaluate(const Vec& lambda, bool with_source) const override;
  Vec evaluate_rows(const Vec& lambda, const std::vector<std::size_t>& rows, bool with_source) const override;
  std::size_t clamp_events() const override { return clamps_.load(); }
  void reset_clamp_events() const override { clamps_ = 0; }

 private:
  Vec clamp(const Vec& lambda) const;

  std::shared_ptr<const SurrogateModel> model_;
  ParamPoint mu_;
  std::vector<double> lo_, hi_;
  mutable std::atomic<std::size_t> clamps_{0};
};

struct InterfaceBlock {
  std::size_t receiver = 0;  // placement whose interface values these are
  std::string interface;     // reference interface name
  std::size_t offset = 0;    // position in the global interface vector
  std::size_t size = 0;
  std::size_t donor = 0;                       // placement holding the interface nodes as free nodes
  std::vector<std::size_t> donor_rows;         // donor node per interface DOF
  std::vector<std::size_t> receiver_positions;  // position in the receiver's interface DOF list
};

// Interface unknowns of all placed subdomains with matrix-free operator I - R N and its right-hand side.
class InterfaceSystem {
 public:
  InterfaceSystem(const MultiDomainProblem& problem, const GlobalMesh& mesh,
                  const std::vector<const fem::DofPartition*>& partitions,
                  std::vector<std::shared_ptr<const LocalEvaluator>> evaluators);

  std::size_t dimension() const { return dimension_; }
  const std::vector<InterfaceBlock>& blocks() const { return blocks_; }
  std::size_t num_placements() const { return evaluators_.size(); }

  // Local interface vector of one placement: unknowns from `lambda`, fixed interfaces from their values
  // (or zero when with_fixed is false).
  Vec local_lambda(std::size_t placement, const Vec& lambda, bool with_fixed) const;
  Vec apply(const Vec& lambda) const;
  Vec rhs() const;
  // New values of one block from its donor's current local solution (data included).
  Vec block_update(std::size_t block, const Vec& lambda) const;

  std::vector<Vec> local_solutions(const Vec& lambda) const;
  // Global field (first placement owns shared nodes) and the largest disagreement at shared nodes.
  Vec glue(const Vec& lambda, double* mismatch = nullptr) const;

  std::size_t clamp_events() const;
  void reset_clamp_events() const;

 private:
  const GlobalMesh* mesh_;
  std::vector<std::shared_ptr<const LocalEvaluator>> evaluators_;
  std::vector<InterfaceBlock> blocks_;
  std::vector<Vec> fixed_;                               // per placement: fixed interface values
  std::vector<std::vector<std::size_t>> donor_rows_;     // per donor: union of rows
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> donor_map_;  // per donor: (block, first row slot)
  std::size_t dimension_ = 0;
};

struct SchwarzResult {
  Vec lambda;
  int sweeps = 0;
  std::vector<double> discrepancy;  // l-infinity change per sweep
  bool converged = false;
};

// Alternating block Gauss-Seidel over the interfaces; at least one sweep.
SchwarzResult schwarz_iterate(const InterfaceSystem& sys, const Vec& lambda0, double tol, int max_k);

struct InterfaceSolve {
  Vec lambda;
  GmresResult gmres;
  Vec field;
  double mismatch = 0.0;
  std::size_t clamp_events = 0;              // during the Krylov iteration
  std::size_t clamp_events_at_solution = 0;  // when evaluating the converged values
};

InterfaceSolve solve_interface(const InterfaceSystem& sys, const GmresSettings& settings);

}  // namespace pgdschwarz
