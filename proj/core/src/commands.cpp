#include "pgdschwarz/commands.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <random>

#include "pgdschwarz/csv.hpp"
#include "pgdschwarz/reference_solvers.hpp"
#include "pgdschwarz/surrogate_io.hpp"

namespace pgdschwarz {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

json point_json(const ParamPoint& mu) {
  json j = json::object();
  for (const auto& [k, v] : mu) j[k] = v;
  return j;
}

std::string point_label(const ParamPoint& mu) {
  std::string s;
  for (const auto& [k, v] : mu) s += (s.empty() ? "" : ";") + k + "=" + csv_number(v);
  return s;
}

void write_field(const fs::path& path, const GlobalMesh& mesh, const std::vector<std::pair<std::string, const Vec*>>& f) {
  fem::write_vtk(path.string(), mesh.nodes, mesh.cells, f, "pgdschwarz");
}

std::vector<ParamPoint> requested_points(const Benchmark& b, const CommandOptions& o) {
  std::vector<ParamPoint> pts;
  for (const auto& m : o.mu) pts.push_back(b.parse_point(m));
  if (o.count > 0) {
    auto r = random_points(b.problem, o.seed.value_or(1), o.count);
    pts.insert(pts.end(), r.begin(), r.end());
  }
  if (pts.empty())
    for (const auto& c : b.config.cases) pts.push_back(b.parse_point(c.name));
  return pts;
}

}  // namespace

std::vector<ParamPoint> random_points(const MultiDomainProblem& problem, std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::vector<ParamPoint> out;
  for (std::size_t k = 0; k < count; ++k) {
    ParamPoint p;
    for (const auto& a : problem.parameters) {
      std::uniform_real_distribution<double> d(a->lo(), a->hi());
      p[a->name()] = d(rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

int cmd_offline(const CommandOptions& o) {
  if (o.config.empty()) throw std::invalid_argument("offline needs --config");
  if (o.out.empty()) throw std::invalid_argument("offline needs --out");
  auto cfg = load_config(o.config, o.scale);
  if (o.seed) cfg.pgd.seed = *o.seed;
  const auto t0 = Clock::now();
  const auto bench = build_benchmark(cfg);
  spdlog::info("{} ({} scale): {} reference subdomains, {} placements", cfg.benchmark, cfg.scale,
               bench.refs.size(), bench.problem.placements.size());
  const auto models = build_surrogates(bench.ref_ptrs(), bench.actives, cfg.pgd, std::max<std::size_t>(1, o.workers));
  const double build_seconds = seconds_since(t0);
  fs::create_directories(o.out / "models");
  json summary = json::array();
  CsvWriter amps(o.out / "amplitudes.csv", {"subproblem", "mode", "relative_amplitude"});
  for (std::size_t r = 0; r < models.size(); ++r) {
    const auto& m = models[r];
    json placements = json::array();
    for (const auto& pl : bench.problem.placements)
      if (pl.reference == r) placements.push_back(pl.name);
    save_model(o.out / "models" / m.name, m, {{"reference_index", r}, {"placements", placements}});
    std::size_t before = 0, after = 0;
    for (const auto& l : m.logs) {
      before += l.modes_before_compression;
      after += l.modes_after_compression;
      for (std::size_t k = 0; k < l.relative_amplitudes.size(); ++k)
        amps.row({l.id, std::to_string(k + 1), csv_number(l.relative_amplitudes[k])});
    }
    const auto& part = bench.refs[r]->partition;
    summary.push_back({{"reference", m.name},
                       {"free_dofs", part.interior.size()},
                       {"interface_parameters", m.interface_nodes.size()},
                       {"boundary_subproblems", m.boundary_parts.size()},
                       {"pgd_modes", before},
                       {"modes_after_compression", after},
                       {"mode_cap_reached", std::any_of(m.logs.begin(), m.logs.end(),
                                                        [](const auto& l) { return l.reached_max_modes; })}});
    spdlog::info("{}: {} free DOFs, {} interface parameters, {} modes ({} after compression)", m.name,
                 part.interior.size(), m.interface_nodes.size(), before, after);
  }
  write_json(o.out / "config.json", cfg.source);
  write_json(o.out / "offline.json",
             {{"benchmark", cfg.benchmark}, {"scale", cfg.scale}, {"seed", cfg.pgd.seed}, {"references", summary}});
  write_json(o.out / "timings.json", {{"offline_seconds", build_seconds}, {"workers", o.workers}});
  return 0;
}

OfflineState load_offline(const fs::path& dir) {
  const auto meta = read_json(dir / "offline.json");
  auto cfg = parse_config(read_json(dir / "config.json"), meta.at("scale").get<std::string>());
  cfg.pgd.seed = meta.at("seed").get<std::uint64_t>();
  OfflineState st{build_benchmark(cfg), {}};
  for (const auto& ref : st.bench.problem.references) {
    auto m = std::make_shared<SurrogateModel>(load_model(dir / "models" / ref->name));
    const auto r = st.models.size();
    if (m->interface_nodes != st.bench.refs[r]->partition.interface_dofs() ||
        m->num_nodes != ref->mesh.num_nodes())
      throw std::runtime_error("surrogate '" + ref->name + "' does not match its configuration");
    st.models.push_back(std::move(m));
  }
  return st;
}

OnlineRun run_online(const Benchmark& b, const ModelSet& models, const ParamPoint& mu, const GmresSettings& settings) {
  OnlineRun run;
  run.mu = mu;
  check_parameters(b.problem, mu);
  run.mesh = build_global_mesh(b.problem, mu);
  const auto t0 = Clock::now();
  std::vector<std::shared_ptr<const LocalEvaluator>> ev;
  for (const auto& pl : b.problem.placements)
    ev.push_back(std::make_shared<SurrogateEvaluator>(models.at(pl.reference), local_parameters(pl, mu)));
  InterfaceSystem sys(b.problem, run.mesh, partitions_of(b.ref_ptrs()), std::move(ev));
  run.solve = solve_interface(sys, settings);
  run.seconds = seconds_since(t0);
  run.dimension = sys.dimension();
  if (b.exact)
    run.rel_l2_exact = relative_l2_error(b.problem, run.mesh, run.solve.field, mu,
                                         [&](const fem::Point& q) { return b.exact(mu, q); });
  return run;
}

int cmd_online(const CommandOptions& o) {
  if (o.surrogates.empty()) throw std::invalid_argument("online needs --surrogates");
  if (o.out.empty()) throw std::invalid_argument("online needs --out");
  if (o.mu.size() != 1) throw std::invalid_argument("online needs exactly one --mu");
  const auto st = load_offline(o.surrogates);
  const auto mu = st.bench.parse_point(o.mu.front());
  const auto run = run_online(st.bench, st.models, mu, st.bench.config.gmres);
  fs::create_directories(o.out);
  {
    CsvWriter res(o.out / "residuals.csv", {"iteration", "relative_residual"});
    for (std::size_t k = 0; k < run.solve.gmres.history.size(); ++k)
      res.row({std::to_string(k), csv_number(run.solve.gmres.history[k])});
  }
  {
    CsvWriter lam(o.out / "lambda.csv", {"index", "value"});
    for (Eigen::Index k = 0; k < run.solve.lambda.size(); ++k)
      lam.row({std::to_string(k), csv_number(run.solve.lambda(k))});
  }
  std::vector<std::pair<std::string, const Vec*>> fields{{"u", &run.solve.field}};
  Vec err;
  if (st.bench.exact) {
    Vec ex(run.solve.field.size());
    for (std::size_t i = 0; i < run.mesh.nodes.size(); ++i)
      ex(static_cast<Eigen::Index>(i)) = st.bench.exact(mu, run.mesh.nodes[i]);
    err = (run.solve.field - ex).cwiseAbs() / ex.cwiseAbs().maxCoeff();
    fields.push_back({"scaled_error", &err});
  }
  write_field(o.out / "field.vtk", run.mesh, fields);
  const bool converged = run.solve.gmres.status == GmresStatus::Converged;
  const bool clamped = run.solve.clamp_events_at_solution > 0;
  json summary = {{"benchmark", st.bench.config.benchmark},
                  {"scale", st.bench.config.scale},
                  {"mu", point_json(mu)},
                  {"interface_dimension", run.dimension},
                  {"gmres",
                   {{"iterations", run.solve.gmres.iterations},
                    {"status", to_string(run.solve.gmres.status)},
                    {"final_relative_residual", run.solve.gmres.history.back()},
                    {"restart", st.bench.config.gmres.restart},
                    {"tol", st.bench.config.gmres.tol}}},
                  {"overlap_mismatch", run.solve.mismatch},
                  {"clamp_events", run.solve.clamp_events},
                  {"clamp_events_at_solution", run.solve.clamp_events_at_solution},
                  {"status", !converged ? "not_converged" : clamped ? "clamped_at_solution" : "ok"}};
  if (run.rel_l2_exact) summary["rel_l2_vs_exact"] = *run.rel_l2_exact;
  write_json(o.out / "summary.json", summary);
  write_json(o.out / "timings.json", {{"online_seconds", run.seconds}});
  spdlog::info("{} GMRES iterations ({}), overlap mismatch {:.3e}", run.solve.gmres.iterations,
               to_string(run.solve.gmres.status), run.solve.mismatch);
  if (clamped) spdlog::error("interface values outside the Lambda bounds at the converged solution");
  return converged && !clamped ? 0 : 3;
}

int cmd_compare(const CommandOptions& o) {
  if (o.surrogates.empty()) throw std::invalid_argument("compare needs --surrogates");
  if (o.out.empty()) throw std::invalid_argument("compare needs --out");
  const auto st = load_offline(o.surrogates);
  const auto& b = st.bench;
  const auto pts = requested_points(b, o);
  fs::create_directories(o.out);
  CsvWriter csv(o.out / "compare.csv",
                {"mu", "pgd_iterations", "pgd_status", "ddfem_iterations", "pgd_scaled_max_vs_monolithic",
                 "pgd_scaled_max_vs_ddfem", "ddfem_linf_vs_monolithic", "pgd_rel_l2_exact", "ddfem_rel_l2_exact",
                 "monolithic_rel_l2_exact", "pgd_overlap_mismatch", "pgd_seconds", "ddfem_seconds",
                 "monolithic_seconds", "speedup"});
  for (const auto& mu : pts) {
    const auto run = run_online(b, st.models, mu, b.config.gmres);
    auto t0 = Clock::now();
    DdFemSettings ds;
    ds.gmres = b.config.gmres;
    const auto dd = dd_fem_schwarz(b.problem, run.mesh, b.ref_ptrs(), mu, ds);
    const double dd_s = seconds_since(t0);
    t0 = Clock::now();
    const Vec mono = monolithic_fem(b.problem, run.mesh, b.ref_ptrs(), mu);
    const double mono_s = seconds_since(t0);
    std::string e_pgd, e_dd, e_mono;
    if (b.exact) {
      const auto ex = [&](const fem::Point& q) { return b.exact(mu, q); };
      e_pgd = csv_number(*run.rel_l2_exact);
      e_dd = csv_number(relative_l2_error(b.problem, run.mesh, dd.field, mu, ex));
      e_mono = csv_number(relative_l2_error(b.problem, run.mesh, mono, mu, ex));
    }
    csv.row({point_label(mu), std::to_string(run.solve.gmres.iterations), to_string(run.solve.gmres.status),
             std::to_string(dd.iterations), csv_number(scaled_max_error(run.solve.field, mono)),
             csv_number(scaled_max_error(run.solve.field, dd.field)),
             csv_number((dd.field - mono).cwiseAbs().maxCoeff()), e_pgd, e_dd, e_mono,
             csv_number(run.solve.mismatch), csv_number(run.seconds), csv_number(dd_s), csv_number(mono_s),
             csv_number(run.seconds > 0.0 ? dd_s / run.seconds : 0.0)});
    spdlog::info("{}: DD-PGD {} its, DD-FEM {} its, scaled error vs monolithic {:.3e}", point_label(mu),
                 run.solve.gmres.iterations, dd.iterations, scaled_max_error(run.solve.field, mono));
  }
  return 0;
}

int cmd_report(const CommandOptions& o) {
  if (o.out.empty()) throw std::invalid_argument("report needs --out");
  fs::create_directories(o.out);
  CsvWriter runs(o.out / "runs.csv", {"run", "benchmark", "mu", "iterations", "status", "overlap_mismatch",
                                      "interface_dimension", "rel_l2_vs_exact"});
  CsvWriter res(o.out / "residuals.csv", {"run", "iteration", "relative_residual"});
  for (const auto& dir : o.runs) {
    const auto name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    const auto s = read_json(dir / "summary.json");
    ParamPoint mu;
    for (auto it = s.at("mu").begin(); it != s.at("mu").end(); ++it) mu[it.key()] = it.value().get<double>();
    runs.row({name, s.at("benchmark").get<std::string>(), point_label(mu),
              std::to_string(s.at("gmres").at("iterations").get<int>()), s.at("status").get<std::string>(),
              csv_number(s.at("overlap_mismatch").get<double>()),
              std::to_string(s.at("interface_dimension").get<std::size_t>()),
              s.contains("rel_l2_vs_exact") ? csv_number(s.at("rel_l2_vs_exact").get<double>()) : ""});
    const auto table = read_csv(dir / "residuals.csv");
    for (std::size_t k = 1; k < table.size(); ++k)
      if (table[k].size() == 2) res.row({name, table[k][0], table[k][1]});
    if (fs::exists(dir / "field.vtk"))
      fs::copy_file(dir / "field.vtk", o.out / (name + ".vtk"), fs::copy_options::overwrite_existing);
  }
  return 0;
}

}  // namespace pgdschwarz
