#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pgdschwarz/param_grid.hpp"

namespace pgdschwarz {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// One rank-one term: a spatial nodal vector and one pointwise vector per parametric axis.
struct SeparatedTerm {
  Vec spatial;
  std::vector<Vec> modes;
};

struct OperatorTerm {
  SpMat spatial;
  std::vector<Vec> modes;
};

// Shared dimension bookkeeping for vectors and operators.
class SeparatedDims {
 public:
  SeparatedDims() = default;
  SeparatedDims(std::size_t spatial_size, std::vector<AxisPtr> axes);

  std::size_t spatial_size() const { return spatial_size_; }
  std::size_t num_axes() const { return axes_.size(); }
  const std::vector<AxisPtr>& axes() const { return axes_; }
  const ParamAxis& axis(std::size_t k) const { return *axes_[k]; }
  std::optional<std::size_t> axis_index(const std::string& name) const;
  std::vector<std::string> axis_names() const;
  bool same_dims(const SeparatedDims& other) const;

 protected:
  void check_modes(const std::vector<Vec>& modes) const;

  std::size_t spatial_size_ = 0;
  std::vector<AxisPtr> axes_;
};

class SeparatedVector : public SeparatedDims {
 public:
  SeparatedVector() = default;
  SeparatedVector(std::size_t spatial_size, std::vector<AxisPtr> axes) : SeparatedDims(spatial_size, std::move(axes)) {}

  std::size_t num_terms() const { return terms_.size(); }
  const std::vector<SeparatedTerm>& terms() const { return terms_; }
  const SeparatedTerm& term(std::size_t m) const { return terms_[m]; }
  void push_back(SeparatedTerm t);
  void reserve(std::size_t n) { terms_.reserve(n); }

 private:
  std::vector<SeparatedTerm> terms_;
};

class SeparatedOperator : public SeparatedDims {
 public:
  SeparatedOperator() = default;
  SeparatedOperator(std::size_t spatial_size, std::vector<AxisPtr> axes)
      : SeparatedDims(spatial_size, std::move(axes)) {}

  std::size_t num_terms() const { return terms_.size(); }
  const std::vector<OperatorTerm>& terms() const { return terms_; }
  const OperatorTerm& term(std::size_t l) const { return terms_[l]; }
  void push_back(OperatorTerm t);

 private:
  std::vector<OperatorTerm> terms_;
};

// Product over axes of interpolated modes, one weight per term.
std::vector<double> term_weights(const SeparatedVector& v, const ParamPoint& p);
Vec evaluate(const SeparatedVector& v, const ParamPoint& p);
// Evaluation restricted to the listed spatial rows.
Vec evaluate_rows(const SeparatedVector& v, const ParamPoint& p, const std::vector<std::size_t>& rows);
// Evaluation at a grid node given by one node index per axis (no interpolation).
Vec evaluate_at_nodes(const SeparatedVector& v, const std::vector<std::size_t>& node_index);

SeparatedVector apply(const SeparatedOperator& op, const SeparatedVector& v);
SeparatedVector add(const SeparatedVector& a, const SeparatedVector& b);
SeparatedVector scale(const SeparatedVector& a, double c);
SeparatedVector append_term(const SeparatedVector& a, SeparatedTerm t);
// Re-express v over `axes` (a superset of v's axes, in the requested order); new axes get constant-1 modes.
SeparatedVector extend_dims(const SeparatedVector& v, const std::vector<AxisPtr>& axes);

double amplitude(const SeparatedTerm& t);
double inner(const SeparatedTerm& a, const SeparatedTerm& b);
double inner(const SeparatedVector& a, const SeparatedVector& b);
double norm(const SeparatedVector& v);
// Unit-norm parametric modes (largest entry positive), magnitude folded into the spatial vector.
void normalize(SeparatedTerm& t);

struct CompressSettings {
  double eps = 1e-3;
  double als_tol = 1e-8;
  int als_max_iters = 50;
  std::uint64_t seed = 0x5eed;
};
struct CompressReport {
  std::size_t terms_in = 0;
  std::size_t terms_out = 0;
  double relative_mismatch = 0.0;
  bool kept_input = false;
};
SeparatedVector compress(const SeparatedVector& v, double eps_star, CompressReport* report = nullptr);
SeparatedVector compress(const SeparatedVector& v, const CompressSettings& settings, CompressReport* report = nullptr);

// Binary container: magic, version, dimension header (axes by name), little-endian doubles.
using AxisResolver = std::function<AxisPtr(const std::string& name, std::size_t n_nodes, double lo, double hi)>;
void write_separated(std::ostream& out, const SeparatedVector& v);
SeparatedVector read_separated(std::istream& in, const AxisResolver& resolve);
void save_separated(const std::string& path, const SeparatedVector& v);
SeparatedVector load_separated(const std::string& path, const AxisResolver& resolve);
// Exact node lists of parametric axes.
void save_axes(const std::string& path, const std::vector<AxisPtr>& axes);
std::vector<AxisPtr> load_axes(const std::string& path);

// Deterministic seed from a tuple of identifiers.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

}  // namespace pgdschwarz
