#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pgdschwarz/fem_core.hpp"
#include "pgdschwarz/param_grid.hpp"
#include "pgdschwarz/pgd_solver.hpp"
#include "pgdschwarz/separated_tensor.hpp"

namespace pgdschwarz {

// Parametric coefficient of a separated term: product of one-variable functions of named axes.
struct ParamFactor {
  std::string axis;
  std::function<double(double)> fn;
};
using ParamFactors = std::vector<ParamFactor>;

double eval_factors(const ParamFactors& f, const ParamPoint& p);
// Product of the factors acting on `axis`, collocated at its nodes (ones when none act on it).
Vec collocate(const ParamFactors& f, const ParamAxis& axis);

struct OperatorForm {
  std::string label;
  fem::FormTerm form;
  ParamFactors factors;
};

struct LoadForm {
  enum class Kind { Volume, Boundary };
  Kind kind = Kind::Volume;
  fem::ScalarField f;
  fem::PointPredicate on;  // boundary loads: edge-midpoint selector
  ParamFactors factors;
};

// Dirichlet datum on external Dirichlet nodes: value(x) times parametric factors.
struct DirichletForm {
  fem::ScalarField value;
  ParamFactors factors;
};

// A (reference) subdomain problem in separated affine form.
struct SubdomainDefinition {
  std::string name;
  fem::StructuredMesh mesh;
  std::vector<fem::InterfaceSpec> interfaces;
  fem::PointPredicate dirichlet;
  std::vector<OperatorForm> operators;
  std::vector<LoadForm> loads;
  std::vector<DirichletForm> dirichlet_data;
  std::vector<AxisPtr> mu_axes;
  double lambda_lo = -1.0;
  double lambda_hi = 1.0;
  double lambda_spacing = 0.1;
  std::size_t max_active = 3;
};
using DefinitionPtr = std::shared_ptr<const SubdomainDefinition>;

// Assembled sectional matrices and vectors over all mesh nodes.
struct SubdomainProblem {
  DefinitionPtr def;
  fem::DofPartition partition;
  std::vector<SpMat> operators;
  std::vector<Vec> loads;
  std::vector<Vec> dirichlet_values;
};

SubdomainProblem assemble_problem(DefinitionPtr def);

struct ActivePartition {
  // Positions into the subdomain's concatenated interface DOF list.
  std::vector<std::vector<std::size_t>> sets;
  std::vector<std::vector<AxisPtr>> axes;
};

std::string lambda_axis_name(std::size_t q);
// Greedy contiguous chunks of at most max_active interface DOFs; one Lambda axis per DOF.
ActivePartition partition_active(std::size_t n_interface_dofs, std::size_t max_active, double lo, double hi,
                                 double spacing);
std::vector<std::size_t> chunk_sizes(std::size_t n, std::size_t max_active);

struct Subproblem {
  enum class Kind { Source, Boundary };
  Kind kind = Kind::Source;
  std::size_t set = 0;
};

// Interior-block operator and right-hand side for one subproblem.
std::pair<SeparatedOperator, SeparatedVector> build_parametric_system(const SubdomainProblem& problem,
                                                                      const ActivePartition& active,
                                                                      const Subproblem& which);

struct SubproblemLog {
  std::string id;
  std::vector<double> relative_amplitudes;
  std::size_t modes_before_compression = 0;
  std::size_t modes_after_compression = 0;
  bool reached_max_modes = false;
  int als_unconverged = 0;
  double seconds = 0.0;
};

struct SurrogateModel {
  std::string name;
  std::size_t num_nodes = 0;
  std::vector<std::size_t> interface_nodes;  // mesh node of each interface DOF, interface order
  std::vector<AxisPtr> mu_axes;
  SeparatedVector source_part;
  ActivePartition active;
  std::vector<SeparatedVector> boundary_parts;
  std::vector<SubproblemLog> logs;
};

// Source part extended with lifts, and one boundary part per active set, each with its nodal ramp lift.
SurrogateModel build_surrogate(const SubdomainProblem& problem, const ActivePartition& active,
                               const PgdSettings& settings, std::size_t workers = 1, std::uint64_t seed_tag = 0);
// Several subdomains at once sharing one bounded worker pool.
std::vector<SurrogateModel> build_surrogates(const std::vector<const SubdomainProblem*>& problems,
                                             const std::vector<ActivePartition>& actives, const PgdSettings& settings,
                                             std::size_t workers);

// Full-model parameter point: mu axes plus lambda_q for every interface DOF.
ParamPoint model_point(const SurrogateModel& m, const ParamPoint& mu, const Vec& lambda);
Vec evaluate_model(const SurrogateModel& m, const ParamPoint& mu, const Vec& lambda, bool with_source = true);
Vec evaluate_model_rows(const SurrogateModel& m, const ParamPoint& mu, const Vec& lambda,
                        const std::vector<std::size_t>& rows, bool with_source = true);
// Boundary part j over the full (mu, all lambda) axis list.
SeparatedVector extended_boundary_part(const SurrogateModel& m, std::size_t j);

// Reference-to-physical maps.
struct GeometricMap {
  enum class Kind { Identity, GraetzStretch, Rigid };
  Kind kind = Kind::Identity;
  // Stretch: x = offset + xr for xr <= h_bar, offset + h_bar + zeta (xr - h_bar) beyond.
  double h_bar = 0.05;
  double x_offset = 1.0;
  std::string stretch_axis = "mu2";
  // Rigid: rotation by quarter_turns * pi/2 about `center`, then translation.
  int quarter_turns = 0;
  fem::Point center{0.0, 0.0};
  fem::Point translation{0.0, 0.0};

  static GeometricMap identity();
  static GeometricMap graetz(double h_bar, double x_offset, std::string axis);
  static GeometricMap rigid(fem::Point translation, int quarter_turns, fem::Point center);

  fem::Point to_physical(const fem::Point& ref, const ParamPoint& mu) const;
  fem::Point to_reference(const fem::Point& phys, const ParamPoint& mu) const;
  double zeta(double mu2) const;
  void validate(const ParamAxis* stretch_axis_bounds) const;
};

// Convection-diffusion data for the channel benchmark: diffusion 1/mu1, velocity, frozen SUPG tau.
struct ChannelPhysics {
  std::string diffusion_axis = "mu1";
  fem::VectorField velocity;
  fem::ScalarField tau;
};
std::vector<OperatorForm> channel_forms(const ChannelPhysics& physics);
// Forms on the reference domain of the stretched subdomain, affine in zeta(mu2) and 1/zeta(mu2).
std::vector<OperatorForm> pull_back_graetz(const ChannelPhysics& physics, const GeometricMap& map);

struct PlacedSubdomain {
  std::string name;
  std::size_t reference = 0;
  GeometricMap map;
  std::map<std::string, std::string> binding;  // local axis -> global parameter
  std::map<std::string, double> fixed_interfaces;  // reference interface -> fixed value
};

ParamPoint local_parameters(const PlacedSubdomain& p, const ParamPoint& global);
// Physical coordinates of every reference node (place_rigid view; exact for quarter turns).
std::vector<fem::Point> place_nodes(const fem::StructuredMesh& mesh, const GeometricMap& map, const ParamPoint& mu);

struct MultiDomainProblem {
  std::vector<DefinitionPtr> references;
  std::vector<PlacedSubdomain> placements;
  std::vector<AxisPtr> parameters;  // global parameter axes (bounds)
};

void check_parameters(const MultiDomainProblem& problem, const ParamPoint& mu);

// Union of placed meshes with coincident nodes merged; the first placement owns overlapping cells.
struct GlobalMesh {
  std::vector<fem::Point> nodes;
  std::vector<fem::VtkCell> cells;
  std::vector<std::size_t> cell_owner;
  std::vector<std::size_t> cell_reference_index;
  std::vector<std::vector<std::size_t>> local_to_global;
  std::vector<std::vector<fem::Point>> placed_nodes;
  std::vector<std::vector<long>> owned_cell;  // per placement: reference cell -> global cell if owned, else -1
};
GlobalMesh build_global_mesh(const MultiDomainProblem& problem, const ParamPoint& mu);

}  // namespace pgdschwarz
