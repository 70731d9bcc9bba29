#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include <random>

#include "pgdschwarz/benchmarks.hpp"
#include "pgdschwarz/commands.hpp"
#include "pgdschwarz/config.hpp"
#include "pgdschwarz/fem_core.hpp"
#include "pgdschwarz/reference_solvers.hpp"
#include "pgdschwarz/schwarz_online.hpp"
#include "pgdschwarz/separated_tensor.hpp"

using namespace pgdschwarz;

namespace {

SeparatedVector random_separated(std::size_t n, std::size_t terms, std::size_t axis_nodes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const auto rnd = [&](std::size_t k) {
    Vec v(static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = d(rng);
    return v;
  };
  const double h = 1.0 / static_cast<double>(axis_nodes - 1);
  std::vector<AxisPtr> axes{make_axis_ptr(make_uniform_axis("a", 0.0, 1.0, h)),
                            make_axis_ptr(make_uniform_axis("b", 0.0, 1.0, h))};
  SeparatedVector v(n, axes);
  for (std::size_t m = 0; m < terms; ++m) v.push_back({rnd(n), {rnd(axes[0]->size()), rnd(axes[1]->size())}});
  return v;
}

std::vector<double> lines(int n) {
  std::vector<double> v;
  for (int k = 0; k <= n; ++k) v.push_back(static_cast<double>(k) / n);
  return v;
}

// Surrogate evaluation at an off-grid point: the inner loop of every online iteration.
void BM_SeparatedEvaluate(benchmark::State& state) {
  const auto v = random_separated(2000, static_cast<std::size_t>(state.range(0)), 1001);
  const ParamPoint p{{"a", 0.3141}, {"b", 0.2718}};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(v, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SeparatedEvaluate)->Arg(50)->Arg(200)->Arg(800);

void BM_SeparatedApply(benchmark::State& state) {
  const auto v = random_separated(2000, static_cast<std::size_t>(state.range(0)), 101);
  const fem::StructuredMesh mesh(lines(44), lines(44));
  const SpMat k = fem::assemble_stiffness(mesh, fem::constant(1.0));
  const auto n = static_cast<std::size_t>(k.rows());
  SeparatedOperator op(n, v.axes());
  SeparatedVector w(n, v.axes());
  for (const auto& t : v.terms()) w.push_back({Vec::Ones(k.rows()), t.modes});
  op.push_back({k, {Vec::Ones(static_cast<Eigen::Index>(v.axis(0).size())),
                   Vec::Ones(static_cast<Eigen::Index>(v.axis(1).size()))}});
  for (auto _ : state) benchmark::DoNotOptimize(apply(op, w));
}
BENCHMARK(BM_SeparatedApply)->Arg(50)->Arg(200);

void BM_CompressDuplicates(benchmark::State& state) {
  const auto v = random_separated(500, static_cast<std::size_t>(state.range(0)), 101);
  const auto doubled = add(v, v);
  for (auto _ : state) benchmark::DoNotOptimize(compress(doubled, 1e-3));
}
BENCHMARK(BM_CompressDuplicates)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_AssembleStiffness(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fem::StructuredMesh mesh(lines(n), lines(n));
  const auto coeff = [](const fem::Point& q) { return 1.0 + q.x * q.y; };
  for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_stiffness(mesh, coeff));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(mesh.num_cells()));
}
BENCHMARK(BM_AssembleStiffness)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_AssembleSupg(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fem::StructuredMesh mesh(lines(n), lines(n));
  const fem::VectorField vel = [](const fem::Point& q) { return std::array<double, 2>{4.0 * q.y * (1.0 - q.y), 0.0}; };
  const auto tau = fem::supg_tau(mesh, vel, 2e4);
  for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_supg(mesh, vel, tau));
}
BENCHMARK(BM_AssembleSupg)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

// One matrix-free interface operator application on the manufactured two-subdomain problem.
struct InterfaceFixture {
  Benchmark bench;
  ModelSet models;
  ParamPoint mu;
  GlobalMesh mesh;
  std::unique_ptr<InterfaceSystem> pgd, fem;

  InterfaceFixture() {
    spdlog::set_level(spdlog::level::warn);
    bench = build_benchmark(load_config(std::string(PGDSCHWARZ_CONFIG_DIR) + "/test1.json", "desk"));
    for (auto& m : build_surrogates(bench.ref_ptrs(), bench.actives, bench.config.pgd, 1))
      models.push_back(std::make_shared<const SurrogateModel>(std::move(m)));
    mu = bench.parse_point("mu3");
    mesh = build_global_mesh(bench.problem, mu);
    std::vector<std::shared_ptr<const LocalEvaluator>> ev;
    for (const auto& pl : bench.problem.placements)
      ev.push_back(std::make_shared<SurrogateEvaluator>(models.at(pl.reference), local_parameters(pl, mu)));
    pgd = std::make_unique<InterfaceSystem>(bench.problem, mesh, partitions_of(bench.ref_ptrs()), std::move(ev));
    fem = std::make_unique<InterfaceSystem>(bench.problem, mesh, partitions_of(bench.ref_ptrs()),
                                            fem_evaluators(bench.problem, bench.ref_ptrs(), mu));
  }
};

InterfaceFixture& fixture() {
  static InterfaceFixture f;
  return f;
}

void BM_InterfaceApplySurrogate(benchmark::State& state) {
  auto& f = fixture();
  const Vec l = Vec::Constant(static_cast<Eigen::Index>(f.pgd->dimension()), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(f.pgd->apply(l));
}
BENCHMARK(BM_InterfaceApplySurrogate)->Unit(benchmark::kMicrosecond);

void BM_InterfaceApplyFem(benchmark::State& state) {
  auto& f = fixture();
  const Vec l = Vec::Constant(static_cast<Eigen::Index>(f.fem->dimension()), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(f.fem->apply(l));
}
BENCHMARK(BM_InterfaceApplyFem)->Unit(benchmark::kMicrosecond);

void BM_OnlineSolve(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(run_online(f.bench, f.models, f.mu, f.bench.config.gmres));
}
BENCHMARK(BM_OnlineSolve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
