#include <gtest/gtest.h>

#include <random>

#include "pgdschwarz/benchmarks.hpp"
#include "pgdschwarz/config.hpp"
#include "pgdschwarz/reference_solvers.hpp"
#include "pgdschwarz/subdomain_models.hpp"

using namespace pgdschwarz;

namespace {

const std::string kConfigDir = PGDSCHWARZ_CONFIG_DIR;

std::vector<std::size_t> sizes(const ActivePartition& a) {
  std::vector<std::size_t> s;
  for (const auto& set : a.sets) s.push_back(set.size());
  return s;
}

bool near_point(const fem::Point& a, const fem::Point& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) < 1e-12; }

}  // namespace

TEST(SubdomainModels, GreedyActivePartition) {
  EXPECT_EQ(sizes(partition_active(19, 3, -10, 10, 1.0)), (std::vector<std::size_t>{3, 3, 3, 3, 3, 3, 1}));
  EXPECT_EQ(partition_active(4, 4, -1, 1, 0.5).sets.size(), 1u);
  EXPECT_EQ(partition_active(63, 3, -5, 5, 1.0).sets.size(), 21u);
  const auto p = partition_active(7, 3, -1, 1, 0.5);
  std::vector<std::size_t> all;
  for (std::size_t j = 0; j < p.sets.size(); ++j) {
    ASSERT_EQ(p.axes[j].size(), p.sets[j].size());
    for (std::size_t k = 0; k < p.sets[j].size(); ++k) {
      all.push_back(p.sets[j][k]);
      EXPECT_EQ(p.axes[j][k]->name(), lambda_axis_name(p.sets[j][k]));
      EXPECT_EQ(p.axes[j][k]->size(), 5u);
    }
  }
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
  EXPECT_THROW(partition_active(5, 0, -1, 1, 0.5), std::invalid_argument);
}

TEST(SubdomainModels, ManufacturedProblemSeparatedStructure) {
  const auto bench = build_benchmark(load_config(kConfigDir + "/test1.json", "desk"));
  ASSERT_EQ(bench.refs.size(), 2u);
  const auto& ref = *bench.refs[0];
  EXPECT_EQ(ref.partition.num_interface_dofs(), 19u);
  EXPECT_EQ(bench.actives[0].sets.size(), 7u);
  const auto [k, f] = build_parametric_system(ref, bench.actives[0], {Subproblem::Kind::Source, 0});
  ASSERT_EQ(k.num_terms(), 2u);
  ASSERT_EQ(f.num_terms(), 3u);
  const auto& mu = k.axis(0);
  for (std::size_t j = 0; j < mu.size(); j += 97) {
    const auto jj = static_cast<Eigen::Index>(j);
    EXPECT_DOUBLE_EQ(k.term(0).modes[0](jj), 1.0);
    EXPECT_DOUBLE_EQ(k.term(1).modes[0](jj), mu.node(j));
    EXPECT_DOUBLE_EQ(f.term(0).modes[0](jj), 1.0);
    EXPECT_DOUBLE_EQ(f.term(1).modes[0](jj), mu.node(j));
    EXPECT_DOUBLE_EQ(f.term(2).modes[0](jj), mu.node(j) * mu.node(j));
  }
  // Last set holds one active parameter: one term per operator term, ramp on its axis.
  const std::size_t last = bench.actives[0].sets.size() - 1;
  const auto [kb, fb] = build_parametric_system(ref, bench.actives[0], {Subproblem::Kind::Boundary, last});
  ASSERT_EQ(fb.num_terms(), 2u);
  ASSERT_EQ(fb.num_axes(), 2u);
  const auto& lam = fb.axis(1);
  for (std::size_t j = 0; j < lam.size(); ++j)
    EXPECT_DOUBLE_EQ(fb.term(0).modes[1](static_cast<Eigen::Index>(j)), lam.node(j));
}

TEST(SubdomainModels, SurrogateNodalTraceAndSuperposition) {
  StripOptions o;
  o.cells = 12;
  o.max_active = 1;
  const auto b = laplace_strip(o);
  const auto m = build_surrogate(*b.refs[0], b.actives[0], b.config.pgd);
  ASSERT_EQ(m.boundary_parts.size(), 2u);
  const ParamPoint mu{{"mu", 1.5}};
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 6);
  for (int trial = 0; trial < 10; ++trial) {
    Vec lambda(2);
    lambda << -1.0 + 0.5 * pick(rng), -1.0 + 0.5 * pick(rng);
    const Vec u = evaluate_model(m, mu, lambda, false);
    for (std::size_t q = 0; q < 2; ++q)
      EXPECT_NEAR(u(static_cast<Eigen::Index>(m.interface_nodes[q])), lambda(static_cast<Eigen::Index>(q)), 1e-12);
    // Additivity over active sets.
    Vec l0 = lambda, l1 = lambda;
    l0(1) = 0.0;
    l1(0) = 0.0;
    EXPECT_LE((u - evaluate_model(m, mu, l0, false) - evaluate_model(m, mu, l1, false)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_LE(evaluate_model(m, mu, Vec::Zero(2), false).cwiseAbs().maxCoeff(), 1e-12);
  // Zero-data source part with a linear Dirichlet lift only.
  const Vec full = evaluate_model(m, mu, Vec::Zero(2), true);
  EXPECT_NEAR(full(0), 0.0, 1e-14);
}

TEST(SubdomainModels, BoundaryPartMatchesDirectSolve) {
  StripOptions o;
  o.cells = 12;
  o.max_active = 2;
  const auto b = laplace_strip(o);
  const auto m = build_surrogate(*b.refs[1], b.actives[1], b.config.pgd);
  const FemEvaluator fem(*b.refs[1], {{"mu", 2.0}});
  Vec lambda(2);
  lambda << 0.5, -1.0;
  const Vec ref = fem.evaluate(lambda, false);
  const Vec got = evaluate_model(m, {{"mu", 2.0}}, lambda, false);
  EXPECT_LE((got - ref).norm(), 1e-8 * ref.norm());
}

TEST(SubdomainModels, PullBackOfStretchedChannel) {
  const auto mu1 = make_axis_ptr(make_uniform_axis("mu1", 1e4, 2e4, 1e3));
  const auto mu2 = make_axis_ptr(make_uniform_axis("mu2", 0.5, 4.0, 0.5));
  const auto map = GeometricMap::graetz(0.05, 1.0, "mu2");
  EXPECT_NEAR(1.0 / map.zeta(4.0), 0.95 / 3.95, 1e-15);
  EXPECT_NEAR(map.zeta(1.0), 1.0, 1e-15);
  const fem::VectorField vel = [](const fem::Point& q) { return std::array<double, 2>{4.0 * q.y * (1.0 - q.y), 0.0}; };
  const std::vector<double> xr{0.0, 0.025, 0.05, 0.3, 0.6, 1.0};
  const std::vector<double> yr{0.0, 0.2, 0.5, 1.0};
  const fem::StructuredMesh ref_mesh(xr, yr);
  const auto tau = fem::supg_tau_cells(ref_mesh, vel, 2e4);
  auto make = [&](fem::StructuredMesh mesh, std::vector<OperatorForm> forms) {
    auto d = std::make_shared<SubdomainDefinition>();
    d->name = "channel";
    d->mesh = std::move(mesh);
    d->dirichlet = [](const fem::Point&) { return false; };
    d->operators = std::move(forms);
    d->mu_axes = {mu1, mu2};
    return assemble_problem(d);
  };
  ChannelPhysics ph{"mu1", vel, fem::cellwise_field(ref_mesh, tau)};
  const auto pulled = make(ref_mesh, pull_back_graetz(ph, map));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d2(0.5, 4.0);
  std::vector<double> m2s{1.0};
  for (int k = 0; k < 5; ++k) m2s.push_back(d2(rng));
  for (double m2 : m2s) {
    const ParamPoint p{{"mu1", 1.25e4}, {"mu2", m2}};
    std::vector<double> xp;
    for (double x : xr) xp.push_back(map.to_physical({x, 0.0}, p).x);
    const fem::StructuredMesh phys_mesh(xp, yr);
    ChannelPhysics pp{"mu1", vel, fem::cellwise_field(phys_mesh, tau)};
    const auto direct = make(phys_mesh, channel_forms(pp));
    const Eigen::MatrixXd a = operator_at(pulled, p);
    const Eigen::MatrixXd e = operator_at(direct, p);
    EXPECT_LE((a - e).cwiseAbs().maxCoeff(), 1e-10 * e.cwiseAbs().maxCoeff()) << "mu2=" << m2;
  }
}

TEST(SubdomainModels, QuarterTurnsAreExact) {
  const fem::Point c{0.5, 0.5};
  const fem::Point q{0.2, -0.1};
  for (int k = 0; k < 4; ++k) {
    const auto m = GeometricMap::rigid({3.0, 1.5}, k, c);
    const auto back = m.to_reference(m.to_physical(q, {}), {});
    EXPECT_TRUE(near_point(back, q));
  }
  const auto half = GeometricMap::rigid({0.0, 0.0}, 2, c);
  EXPECT_TRUE(near_point(half.to_physical(half.to_physical(q, {}), {}), q));
  const auto quarter = GeometricMap::rigid({0.0, 0.0}, 1, c);
  EXPECT_TRUE(near_point(quarter.to_physical({1.0, 0.5}, {}), {0.5, 1.0}));
  const auto id = GeometricMap::identity();
  EXPECT_TRUE(near_point(id.to_physical(q, {}), q));
}

TEST(SubdomainModels, ModularPlacementsProduceTwelveOverlaps) {
  const auto bench = build_benchmark(load_config(kConfigDir + "/thermal.json", "desk"));
  const auto& pr = bench.problem;
  ASSERT_EQ(pr.placements.size(), 9u);
  std::vector<std::vector<fem::Point>> centers;
  for (const auto& pl : pr.placements) {
    const auto& mesh = pr.references[pl.reference]->mesh;
    std::vector<fem::Point> c;
    for (std::size_t e = 0; e < mesh.num_cells(); ++e) c.push_back(pl.map.to_physical(mesh.cell_center(e), {}));
    centers.push_back(std::move(c));
  }
  int overlaps = 0;
  for (std::size_t a = 0; a < centers.size(); ++a)
    for (std::size_t b = a + 1; b < centers.size(); ++b) {
      const fem::NodeLocator loc(centers[b], 1e-9);
      bool shared = false;
      for (const auto& p : centers[a]) shared = shared || loc.find(p).has_value();
      overlaps += shared ? 1 : 0;
    }
  EXPECT_EQ(overlaps, 12);
  std::vector<std::size_t> dofs;
  for (const auto& r : bench.refs) dofs.push_back(r->partition.num_interface_dofs());
  EXPECT_EQ(dofs, (std::vector<std::size_t>{42, 63, 84, 42}));
  EXPECT_THROW(check_parameters(pr, {{"mu1", 1.0}}), std::invalid_argument);
  ParamPoint p = bench.parse_point("case2");
  EXPECT_NO_THROW(check_parameters(pr, p));
  p["mu4"] = 20.0;
  EXPECT_THROW(check_parameters(pr, p), std::out_of_range);
}
