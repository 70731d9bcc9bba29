#include "pgdschwarz/subdomain_models.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace pgdschwarz {

double eval_factors(const ParamFactors& f, const ParamPoint& p) {
  double v = 1.0;
  for (const auto& x : f) v *= x.fn(lookup(p, x.axis));
  return v;
}

Vec collocate(const ParamFactors& f, const ParamAxis& axis) {
  Vec v = Vec::Ones(static_cast<Eigen::Index>(axis.size()));
  for (const auto& x : f) {
    if (x.axis != axis.name()) continue;
    for (std::size_t i = 0; i < axis.size(); ++i) v(static_cast<Eigen::Index>(i)) *= x.fn(axis.node(i));
  }
  return v;
}

SubdomainProblem assemble_problem(DefinitionPtr def) {
  SubdomainProblem p;
  p.def = def;
  const auto& mesh = def->mesh;
  p.partition = fem::make_partition(mesh, def->interfaces, def->dirichlet);
  for (const auto& op : def->operators) p.operators.push_back(fem::assemble(mesh, op.form));
  for (const auto& ld : def->loads) {
    if (ld.kind == LoadForm::Kind::Volume)
      p.loads.push_back(fem::assemble_load(mesh, ld.f));
    else
      p.loads.push_back(fem::assemble_neumann(mesh, ld.on, ld.f));
  }
  for (const auto& g : def->dirichlet_data) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
    for (auto i : p.partition.external_dirichlet) v(static_cast<Eigen::Index>(i)) = g.value(mesh.node(i));
    p.dirichlet_values.push_back(std::move(v));
  }
  for (const auto& op : def->operators)
    for (const auto& f : op.factors) {
      bool known = false;
      for (const auto& a : def->mu_axes) known = known || a->name() == f.axis;
      if (!known) throw std::invalid_argument("form '" + op.label + "' depends on unknown axis '" + f.axis + "'");
    }
  return p;
}

std::string lambda_axis_name(std::size_t q) { return "lambda_" + std::to_string(q); }

std::vector<std::size_t> chunk_sizes(std::size_t n, std::size_t max_active) {
  if (max_active == 0) throw std::invalid_argument("max_active must be positive");
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < n; s += max_active) out.push_back(std::min(max_active, n - s));
  return out;
}

ActivePartition partition_active(std::size_t n_interface_dofs, std::size_t max_active, double lo, double hi,
                                 double spacing) {
  ActivePartition ap;
  const auto base = make_uniform_axis("lambda", lo, hi, spacing);
  std::size_t q = 0;
  for (auto size : chunk_sizes(n_interface_dofs, max_active)) {
    std::vector<std::size_t> set;
    std::vector<AxisPtr> axes;
    for (std::size_t k = 0; k < size; ++k, ++q) {
      set.push_back(q);
      axes.push_back(make_axis_ptr(ParamAxis(lambda_axis_name(q), base.nodes())));
    }
    ap.sets.push_back(std::move(set));
    ap.axes.push_back(std::move(axes));
  }
  return ap;
}

std::pair<SeparatedOperator, SeparatedVector> build_parametric_system(const SubdomainProblem& problem,
                                                                      const ActivePartition& active,
                                                                      const Subproblem& which) {
  const auto& def = *problem.def;
  const auto& part = problem.partition;
  const auto& interior = part.interior;
  std::vector<AxisPtr> axes = def.mu_axes;
  if (which.kind == Subproblem::Kind::Boundary) {
    if (which.set >= active.sets.size()) throw std::out_of_range("active set index out of range");
    axes.insert(axes.end(), active.axes[which.set].begin(), active.axes[which.set].end());
  }
  const std::size_t n_mu = def.mu_axes.size();
  auto modes_for = [&](const ParamFactors& f) {
    std::vector<Vec> m;
    for (std::size_t k = 0; k < axes.size(); ++k)
      m.push_back(k < n_mu ? collocate(f, *axes[k]) : Vec::Ones(static_cast<Eigen::Index>(axes[k]->size())));
    return m;
  };
  SeparatedOperator op(interior.size(), axes);
  for (std::size_t l = 0; l < def.operators.size(); ++l)
    op.push_back({fem::submatrix(problem.operators[l], interior, interior), modes_for(def.operators[l].factors)});

  SeparatedVector rhs(interior.size(), axes);
  if (which.kind == Subproblem::Kind::Source) {
    for (std::size_t s = 0; s < def.loads.size(); ++s) {
      Vec v = fem::gather(problem.loads[s], interior);
      if (v.squaredNorm() == 0.0) continue;
      rhs.push_back({std::move(v), modes_for(def.loads[s].factors)});
    }
    for (std::size_t g = 0; g < def.dirichlet_data.size(); ++g) {
      const auto gm = modes_for(def.dirichlet_data[g].factors);
      for (std::size_t l = 0; l < def.operators.size(); ++l) {
        Vec v = -fem::gather(problem.operators[l] * problem.dirichlet_values[g], interior);
        if (v.squaredNorm() == 0.0) continue;
        auto m = modes_for(def.operators[l].factors);
        for (std::size_t k = 0; k < m.size(); ++k) m[k] = m[k].cwiseProduct(gm[k]);
        rhs.push_back({std::move(v), std::move(m)});
      }
    }
  } else {
    const auto dofs = part.interface_dofs();
    const auto& set = active.sets[which.set];
    for (std::size_t a = 0; a < set.size(); ++a) {
      const std::size_t node = dofs.at(set[a]);
      for (std::size_t l = 0; l < def.operators.size(); ++l) {
        auto cols = fem::dirichlet_columns(problem.operators[l], part, {node});
        Vec v = std::move(cols.begin()->second);
        if (v.squaredNorm() == 0.0) continue;
        auto m = modes_for(def.operators[l].factors);
        const auto& ax = *axes[n_mu + a];
        m[n_mu + a] = Eigen::Map<const Vec>(ax.nodes().data(), static_cast<Eigen::Index>(ax.size()));
        rhs.push_back({std::move(v), std::move(m)});
      }
    }
  }
  return {std::move(op), std::move(rhs)};
}

namespace {

SeparatedVector embed(const SeparatedVector& v, const std::vector<std::size_t>& interior, std::size_t n_nodes) {
  SeparatedVector out(n_nodes, v.axes());
  out.reserve(v.num_terms());
  for (const auto& t : v.terms()) {
    SeparatedTerm e;
    e.spatial = Vec::Zero(static_cast<Eigen::Index>(n_nodes));
    for (std::size_t k = 0; k < interior.size(); ++k)
      e.spatial(static_cast<Eigen::Index>(interior[k])) = t.spatial(static_cast<Eigen::Index>(k));
    e.modes = t.modes;
    out.push_back(std::move(e));
  }
  return out;
}

struct Task {
  std::size_t problem;
  Subproblem which;
};

void solve_task(const SubdomainProblem& problem, const ActivePartition& active, const Subproblem& which,
                const PgdSettings& base, std::uint64_t tag, SeparatedVector& out, SubproblemLog& log) {
  const auto& def = *problem.def;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t index = which.kind == Subproblem::Kind::Source ? 0 : which.set + 1;
  log.id = def.name + (which.kind == Subproblem::Kind::Source ? "/source" : "/boundary_" + std::to_string(which.set));
  try {
    auto [op, rhs] = build_parametric_system(problem, active, which);
    const std::size_t n_nodes = def.mesh.num_nodes();
    SeparatedVector sol(n_nodes, op.axes());
    if (rhs.num_terms() > 0) {
      PgdSettings s = base;
      s.seed = mix_seed({base.seed, tag, index});
      auto res = solve(op, rhs, s);
      log.relative_amplitudes = res.relative_amplitudes;
      log.modes_before_compression = res.modes_before_compression;
      log.modes_after_compression = res.solution.num_terms();
      log.reached_max_modes = res.reached_max_modes;
      log.als_unconverged = res.als_unconverged;
      if (res.reached_max_modes) spdlog::warn("{}: mode cap reached before the amplitude tolerance", log.id);
      sol = embed(res.solution, problem.partition.interior, n_nodes);
    }
    const std::size_t n_mu = def.mu_axes.size();
    if (which.kind == Subproblem::Kind::Source) {
      for (std::size_t g = 0; g < def.dirichlet_data.size(); ++g) {
        SeparatedTerm t;
        t.spatial = problem.dirichlet_values[g];
        if (t.spatial.squaredNorm() == 0.0) continue;
        for (std::size_t k = 0; k < n_mu; ++k) t.modes.push_back(collocate(def.dirichlet_data[g].factors, *def.mu_axes[k]));
        sol.push_back(std::move(t));
      }
    } else {
      const auto dofs = problem.partition.interface_dofs();
      const auto& set = active.sets[which.set];
      for (std::size_t a = 0; a < set.size(); ++a) {
        SeparatedTerm t;
        t.spatial = Vec::Zero(static_cast<Eigen::Index>(n_nodes));
        t.spatial(static_cast<Eigen::Index>(dofs[set[a]])) = 1.0;
        for (std::size_t k = 0; k < sol.num_axes(); ++k) {
          const auto& ax = sol.axis(k);
          if (k == n_mu + a)
            t.modes.push_back(Eigen::Map<const Vec>(ax.nodes().data(), static_cast<Eigen::Index>(ax.size())));
          else
            t.modes.push_back(Vec::Ones(static_cast<Eigen::Index>(ax.size())));
        }
        sol.push_back(std::move(t));
      }
    }
    out = std::move(sol);
  } catch (const std::exception& e) {
    throw std::runtime_error(log.id + ": " + e.what());
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<SurrogateModel> build_surrogates(const std::vector<const SubdomainProblem*>& problems,
                                             const std::vector<ActivePartition>& actives, const PgdSettings& settings,
                                             std::size_t workers) {
  if (problems.size() != actives.size()) throw std::invalid_argument("one active partition per problem required");
  settings.validate();
  std::vector<SurrogateModel> models(problems.size());
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto& p = *problems[i];
    auto& m = models[i];
    m.name = p.def->name;
    m.num_nodes = p.def->mesh.num_nodes();
    m.interface_nodes = p.partition.interface_dofs();
    m.mu_axes = p.def->mu_axes;
    m.active = actives[i];
    if (m.active.sets.empty() && !m.interface_nodes.empty())
      throw std::invalid_argument(m.name + ": empty active partition");
    std::size_t covered = 0;
    for (const auto& s : m.active.sets) covered += s.size();
    if (covered != m.interface_nodes.size())
      throw std::invalid_argument(m.name + ": active partition does not cover the interface DOFs");
    m.boundary_parts.resize(m.active.sets.size());
    m.logs.resize(m.active.sets.size() + 1);
    tasks.push_back({i, {Subproblem::Kind::Source, 0}});
    for (std::size_t j = 0; j < m.active.sets.size(); ++j) tasks.push_back({i, {Subproblem::Kind::Boundary, j}});
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mtx;
  auto work = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      {
        std::lock_guard<std::mutex> lock(mtx);
        if (failure) return;
      }
      const auto& t = tasks[k];
      auto& m = models[t.problem];
      try {
        if (t.which.kind == Subproblem::Kind::Source)
          solve_task(*problems[t.problem], actives[t.problem], t.which, settings, t.problem, m.source_part, m.logs[0]);
        else
          solve_task(*problems[t.problem], actives[t.problem], t.which, settings, t.problem,
                     m.boundary_parts[t.which.set], m.logs[t.which.set + 1]);
        spdlog::debug("built {}", t.which.kind == Subproblem::Kind::Source ? m.logs[0].id : m.logs[t.which.set + 1].id);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mtx);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t nw = std::max<std::size_t>(1, std::min(workers, tasks.size()));
  if (nw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return models;
}

SurrogateModel build_surrogate(const SubdomainProblem& problem, const ActivePartition& active,
                               const PgdSettings& settings, std::size_t workers, std::uint64_t seed_tag) {
  PgdSettings s = settings;
  s.seed = mix_seed({settings.seed, seed_tag});
  auto models = build_surrogates({&problem}, {active}, s, workers);
  return std::move(models.front());
}

namespace {

ParamPoint part_point(const SeparatedVector& part, std::size_t n_mu, const ParamPoint& mu,
                      const ActivePartition& active, std::size_t set, const Vec& lambda) {
  ParamPoint p;
  for (std::size_t k = 0; k < n_mu; ++k) p[part.axis(k).name()] = lookup(mu, part.axis(k).name());
  for (auto q : active.sets[set]) p[lambda_axis_name(q)] = lambda(static_cast<Eigen::Index>(q));
  return p;
}

}  // namespace

ParamPoint model_point(const SurrogateModel& m, const ParamPoint& mu, const Vec& lambda) {
  ParamPoint p;
  for (const auto& a : m.mu_axes) p[a->name()] = lookup(mu, a->name());
  for (Eigen::Index q = 0; q < lambda.size(); ++q) p[lambda_axis_name(static_cast<std::size_t>(q))] = lambda(q);
  return p;
}

Vec evaluate_model(const SurrogateModel& m, const ParamPoint& mu, const Vec& lambda, bool with_source) {
  if (static_cast<std::size_t>(lambda.size()) != m.interface_nodes.size())
    throw std::invalid_argument(m.name + ": interface vector has the wrong length");
  Vec u = Vec::Zero(static_cast<Eigen::Index>(m.num_nodes));
  if (with_source && m.source_part.num_terms() > 0) u += evaluate(m.source_part, mu);
  for (std::size_t j = 0; j < m.boundary_parts.size(); ++j) {
    bool zero = true;
    for (auto q : m.active.sets[j]) zero = zero && lambda(static_cast<Eigen::Index>(q)) == 0.0;
    if (zero) continue;
    u += evaluate(m.boundary_parts[j], part_point(m.boundary_parts[j], m.mu_axes.size(), mu, m.active, j, lambda));
  }
  return u;
}

Vec evaluate_model_rows(const SurrogateModel& m, const ParamPoint& mu, const Vec& lambda,
                        const std::vector<std::size_t>& rows, bool with_source) {
  if (static_cast<std::size_t>(lambda.size()) != m.interface_nodes.size())
    throw std::invalid_argument(m.name + ": interface vector has the wrong length");
  Vec u = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  if (with_source && m.source_part.num_terms() > 0) u += evaluate_rows(m.source_part, mu, rows);
  for (std::size_t j = 0; j < m.boundary_parts.size(); ++j) {
    bool zero = true;
    for (auto q : m.active.sets[j]) zero = zero && lambda(static_cast<Eigen::Index>(q)) == 0.0;
    if (zero) continue;
    u += evaluate_rows(m.boundary_parts[j],
                       part_point(m.boundary_parts[j], m.mu_axes.size(), mu, m.active, j, lambda), rows);
  }
  return u;
}

SeparatedVector extended_boundary_part(const SurrogateModel& m, std::size_t j) {
  std::vector<AxisPtr> axes = m.mu_axes;
  for (const auto& set_axes : m.active.axes) axes.insert(axes.end(), set_axes.begin(), set_axes.end());
  return extend_dims(m.boundary_parts.at(j), axes);
}

}  // namespace pgdschwarz
