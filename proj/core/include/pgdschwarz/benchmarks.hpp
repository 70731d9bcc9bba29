#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pgdschwarz/config.hpp"
#include "pgdschwarz/subdomain_models.hpp"

namespace pgdschwarz {

// Assembled multi-domain benchmark: references, placements, active partitions.
struct Benchmark {
  BenchmarkConfig config;
  MultiDomainProblem problem;
  std::vector<std::shared_ptr<const SubdomainProblem>> refs;
  std::vector<ActivePartition> actives;
  // Closed-form solution when one is known.
  std::function<double(const ParamPoint&, const fem::Point&)> exact;

  std::vector<const SubdomainProblem*> ref_ptrs() const;
  // Case by name, or "k=v,k=v" / a bare number for single-parameter benchmarks; bounds-checked.
  ParamPoint parse_point(const std::string& text) const;
};

Benchmark build_benchmark(const BenchmarkConfig& config);

// Manufactured-solution problem data on one rectangle (shared by the monolithic convergence check).
std::vector<OperatorForm> test1_operators();
std::vector<LoadForm> test1_sources();

// Two-subdomain Laplace strip, one cell high with homogeneous Neumann top and bottom, u(0)=0, u(1)=1.
struct StripOptions {
  int cells = 20;
  int overlap_cells = 2;  // each subdomain extends this many cells past the midpoint
  double lambda_lo = -1.0;
  double lambda_hi = 2.0;
  double lambda_spacing = 0.5;
  std::size_t max_active = 2;
};
Benchmark laplace_strip(const StripOptions& options);

}  // namespace pgdschwarz
