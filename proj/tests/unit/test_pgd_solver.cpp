#include <gtest/gtest.h>

#include <random>

#include "pgdschwarz/pgd_solver.hpp"

using namespace pgdschwarz;

namespace {

SpMat diag(const Vec& d) {
  SpMat m(d.size(), d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d(i);
  return m;
}

SpMat laplace1d(int n) {
  SpMat m(n, n);
  for (int i = 0; i < n; ++i) {
    m.insert(i, i) = 2.0;
    if (i > 0) m.insert(i, i - 1) = -1.0;
    if (i + 1 < n) m.insert(i, i + 1) = -1.0;
  }
  return m;
}

OperatorTerm op_term(SpMat k, Vec mode) { return {std::move(k), {std::move(mode)}}; }

Vec nodes_of(const ParamAxis& a) { return Eigen::Map<const Vec>(a.nodes().data(), static_cast<Eigen::Index>(a.size())); }

PgdSettings tight() {
  PgdSettings s;
  s.eps_enrich = 1e-8;
  s.compress = false;
  s.max_modes = 60;
  s.als_tol = 1e-10;
  s.als_max_iters = 100;
  return s;
}

}  // namespace

TEST(PgdSolver, SettingsValidation) {
  PgdSettings s;
  EXPECT_NO_THROW(s.validate());
  s.eps_enrich = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.als_max_iters = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(PgdSolver, ResidualOfZeroIsRightHandSide) {
  const auto axis = make_axis_ptr(make_uniform_axis("mu", 1.0, 2.0, 0.25));
  SeparatedOperator k(3, {axis});
  k.push_back(op_term(laplace1d(3), Vec::Ones(5)));
  SeparatedVector f(3, {axis});
  f.push_back({Vec::Ones(3), {nodes_of(*axis)}});
  SeparatedVector u(3, {axis});
  const auto r = residual(k, f, u);
  EXPECT_LE((evaluate(r, {{"mu", 1.5}}) - evaluate(f, {{"mu", 1.5}})).cwiseAbs().maxCoeff(), 1e-15);
  // F built from an exact u: residual vanishes at grid nodes.
  u.push_back({Vec::LinSpaced(3, 1.0, 3.0), {nodes_of(*axis)}});
  const auto exact_f = apply(k, u);
  const auto r2 = residual(k, exact_f, u);
  for (std::size_t j = 0; j < axis->size(); ++j) EXPECT_LE(evaluate_at_nodes(r2, {j}).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PgdSolver, IdentityOperatorRecoversRankOneRightHandSide) {
  const auto axis = make_axis_ptr(make_uniform_axis("mu", 0.0, 1.0, 0.1));
  SeparatedOperator k(4, {axis});
  SpMat eye(4, 4);
  eye.setIdentity();
  k.push_back(op_term(eye, Vec::Ones(11)));
  SeparatedVector f(4, {axis});
  Vec mode = nodes_of(*axis).array().square() + 1.0;
  f.push_back({Vec::LinSpaced(4, -1.0, 2.0), {mode}});
  const auto e = enrich_once(k, f, SeparatedVector(4, {axis}), tight(), 1);
  EXPECT_TRUE(e.converged);
  SeparatedVector got(4, {axis});
  got.push_back(e.term);
  for (std::size_t j = 0; j < 11; ++j)
    EXPECT_LE((evaluate_at_nodes(got, {j}) - evaluate_at_nodes(f, {j})).cwiseAbs().maxCoeff(), 1e-10);
  const auto sol = solve(k, f, tight());
  EXPECT_EQ(sol.solution.num_terms(), 1u);
}

TEST(PgdSolver, ZeroRightHandSideStops) {
  const auto axis = make_axis_ptr(make_uniform_axis("mu", 0.0, 1.0, 0.1));
  SeparatedOperator k(3, {axis});
  k.push_back(op_term(laplace1d(3), Vec::Ones(11)));
  SeparatedVector f(3, {axis});
  f.push_back({Vec::Zero(3), {Vec::Ones(11)}});
  const auto e = enrich_once(k, f, SeparatedVector(3, {axis}), tight(), 1);
  EXPECT_TRUE(e.converged);
  EXPECT_EQ(amplitude(e.term), 0.0);
  const auto sol = solve(k, f, tight());
  EXPECT_LE(sol.solution.num_terms(), 1u);
  EXPECT_FALSE(sol.reached_max_modes);
}

TEST(PgdSolver, AffinePoissonMatchesPerNodeSolves) {
  const auto axis = make_axis_ptr(make_uniform_axis("mu", 1.0, 5.0, 0.1));
  const SpMat k0 = laplace1d(3);
  const SpMat k1 = diag(Vec::LinSpaced(3, 1.0, 3.0));
  SeparatedOperator k(3, {axis});
  k.push_back(op_term(k0, Vec::Ones(static_cast<Eigen::Index>(axis->size()))));
  k.push_back(op_term(k1, nodes_of(*axis)));
  SeparatedVector f(3, {axis});
  f.push_back({Vec(Eigen::Vector3d(1.0, -2.0, 0.5)), {Vec::Ones(static_cast<Eigen::Index>(axis->size()))}});
  const auto sol = solve(k, f, tight());
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < axis->size(); ++j) {
    const Eigen::Matrix3d a = Eigen::Matrix3d(Eigen::MatrixXd(k0)) + axis->node(j) * Eigen::Matrix3d(Eigen::MatrixXd(k1));
    const Eigen::Vector3d ref = a.lu().solve(Eigen::Vector3d(1.0, -2.0, 0.5));
    num += (evaluate_at_nodes(sol.solution, {j}) - ref).squaredNorm();
    den += ref.squaredNorm();
  }
  EXPECT_LE(std::sqrt(num / den), 1e-6);
}

TEST(PgdSolver, ReactionSystemMatchesClosedForm) {
  const auto axis = make_axis_ptr(make_uniform_axis("mu", 0.1, 10.0, 0.01));
  const Vec k0 = Vec::LinSpaced(6, 1.0, 2.0);
  const Vec k1 = Vec::LinSpaced(6, 0.5, 3.0);
  const Vec fv = Vec::LinSpaced(6, -1.0, 1.5);
  SeparatedOperator k(6, {axis});
  k.push_back(op_term(diag(k0), Vec::Ones(static_cast<Eigen::Index>(axis->size()))));
  k.push_back(op_term(diag(k1), nodes_of(*axis)));
  SeparatedVector f(6, {axis});
  f.push_back({fv, {Vec::Ones(static_cast<Eigen::Index>(axis->size()))}});
  PgdSettings s;
  s.eps_enrich = 1e-4;
  s.compress = false;
  const auto sol = solve(k, f, s);
  for (std::size_t j = 0; j < axis->size(); j += 7) {
    const Vec got = evaluate_at_nodes(sol.solution, {j});
    const Vec ref = fv.array() / (k0.array() + axis->node(j) * k1.array());
    EXPECT_LE((got - ref).norm() / ref.norm(), 1e-3) << "mu=" << axis->node(j);
  }
  EXPECT_FALSE(sol.relative_amplitudes.empty());
  EXPECT_DOUBLE_EQ(sol.relative_amplitudes.front(), 1.0);
}

TEST(PgdSolver, RandomSpdSystemWithinTenEps) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const int n = 6;
  Eigen::MatrixXd b0(n, n), b1(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      b0(i, j) = d(rng);
      b1(i, j) = d(rng);
    }
  const Eigen::MatrixXd a0 = b0 * b0.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a1 = b1 * b1.transpose();
  const auto axis = make_axis_ptr(make_uniform_axis("mu", 0.0, 3.0, 0.05));
  SeparatedOperator k(n, {axis});
  k.push_back(op_term(a0.sparseView(), Vec::Ones(static_cast<Eigen::Index>(axis->size()))));
  k.push_back(op_term(a1.sparseView(), nodes_of(*axis)));
  Vec fv(n);
  for (int i = 0; i < n; ++i) fv(i) = d(rng);
  SeparatedVector f(n, {axis});
  f.push_back({fv, {Vec::Ones(static_cast<Eigen::Index>(axis->size()))}});
  PgdSettings s;
  s.eps_enrich = 1e-4;
  s.compress = false;
  const auto sol = solve(k, f, s);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < axis->size(); ++j) {
    const Vec ref = (a0 + axis->node(j) * a1).ldlt().solve(fv);
    num += (evaluate_at_nodes(sol.solution, {j}) - ref).squaredNorm();
    den += ref.squaredNorm();
  }
  EXPECT_LE(std::sqrt(num / den), 10.0 * s.eps_enrich);
}

TEST(PgdSolver, DeterministicUnderFixedSeed) {
  const auto axis = make_axis_ptr(make_uniform_axis("mu", 1.0, 3.0, 0.1));
  SeparatedOperator k(4, {axis});
  k.push_back(op_term(laplace1d(4), Vec::Ones(21)));
  k.push_back(op_term(diag(Vec::Ones(4)), nodes_of(*axis)));
  SeparatedVector f(4, {axis});
  f.push_back({Vec::LinSpaced(4, 1.0, 2.0), {nodes_of(*axis)}});
  PgdSettings s;
  s.compress = true;
  const auto a = solve(k, f, s);
  const auto b = solve(k, f, s);
  ASSERT_EQ(a.solution.num_terms(), b.solution.num_terms());
  for (std::size_t m = 0; m < a.solution.num_terms(); ++m)
    EXPECT_EQ(a.solution.term(m).spatial, b.solution.term(m).spatial);
}
