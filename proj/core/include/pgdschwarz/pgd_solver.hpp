#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pgdschwarz/separated_tensor.hpp"

namespace pgdschwarz {

struct PgdSettings {
  double eps_enrich = 1e-4;
  double eps_compress = 1e-3;
  std::size_t max_modes = 300;
  double als_tol = 1e-4;
  int als_max_iters = 25;
  bool compress = true;
  std::uint64_t seed = 1;

  void validate() const;
};

SeparatedVector residual(const SeparatedOperator& k, const SeparatedVector& f, const SeparatedVector& u);

struct EnrichResult {
  SeparatedTerm term;
  bool converged = false;
  int iterations = 0;
};

struct PgdResult {
  SeparatedVector solution;
  std::vector<double> relative_amplitudes;
  std::size_t modes_before_compression = 0;
  bool reached_max_modes = false;
  int als_unconverged = 0;
  CompressReport compression;
};

// Greedy rank-one enrichment for K(p) u(p) = F(p) under parametric collocation.
class PgdSolver {
 public:
  PgdSolver(const SeparatedOperator& k, const SeparatedVector& f, PgdSettings settings);
  ~PgdSolver();
  PgdSolver(const PgdSolver&) = delete;
  PgdSolver& operator=(const PgdSolver&) = delete;

  // Seeds the current approximation (e.g. a previous solution); spatial operator products are cached.
  void set_current(const SeparatedVector& u);
  const SeparatedVector& current() const { return u_; }
  EnrichResult enrich(std::uint64_t seed);
  void append(const SeparatedTerm& t);
  PgdResult solve();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SeparatedVector u_;
  PgdSettings settings_;
};

EnrichResult enrich_once(const SeparatedOperator& k, const SeparatedVector& f, const SeparatedVector& u_prev,
                         const PgdSettings& settings, std::uint64_t seed);
PgdResult solve(const SeparatedOperator& k, const SeparatedVector& f, const PgdSettings& settings);

}  // namespace pgdschwarz
