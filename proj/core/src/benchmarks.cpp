#include "pgdschwarz/benchmarks.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pgdschwarz/reference_solvers.hpp"

namespace pgdschwarz {

using nlohmann::json;

namespace {

constexpr double kGeomTol = 1e-9;

bool near(double a, double b) { return std::abs(a - b) <= kGeomTol; }

AxisPtr axis_from(const BenchmarkConfig& c, const std::string& name) {
  for (const auto& a : c.parameters)
    if (a.name == name) return make_axis_ptr(make_uniform_axis(a.name, a.lo, a.hi, a.spacing));
  throw ConfigError("parameters", "axis '" + name + "' required by benchmark '" + c.benchmark + "'");
}

std::vector<double> uniform_breaks(double lo, double hi, int n) {
  std::vector<double> b(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) b[static_cast<std::size_t>(k)] = k == n ? hi : lo + (hi - lo) * k / n;
  return b;
}

ActivePartition active_for(const SubdomainProblem& p, std::size_t max_active, const BenchmarkConfig& c) {
  return partition_active(p.partition.num_interface_dofs(), max_active, c.lambda_lo, c.lambda_hi, c.lambda_spacing);
}

void finish(Benchmark& b, const std::vector<std::size_t>& max_active) {
  for (std::size_t r = 0; r < b.refs.size(); ++r)
    b.actives.push_back(active_for(*b.refs[r], max_active[r], b.config));
  for (const auto& cs : b.config.cases) {
    try {
      check_parameters(b.problem, cs.mu);
    } catch (const std::exception& e) {
      throw ConfigError("cases." + cs.name, e.what());
    }
  }
}

// ---- manufactured diffusion problem ----

Benchmark build_test1(const BenchmarkConfig& c) {
  const auto& p = c.problem;
  const double h = get_positive(p, "h", "problem");
  const int n = get_int(p, "overlap_layers", "problem", 1);
  const double length = get_positive(p, "length", "problem");
  const double height = get_positive(p, "height", "problem");
  const double split = get_positive(p, "split", "problem");
  const auto max_active = static_cast<std::size_t>(get_int(p, "max_active", "problem", 1));
  if (!(split < length)) throw ConfigError("problem.split", "must lie inside the domain");
  const auto cells = [&](double len, const std::string& field) {
    const double r = len / h;
    if (std::abs(r - std::round(r)) > 1e-9 * r) throw ConfigError(field, "must be a multiple of problem.h");
    return static_cast<int>(std::round(r));
  };
  const int ny = cells(height, "problem.height");
  const int n_split = cells(split, "problem.split");
  const int n_total = cells(length, "problem.length");
  if (n_split - n < 1 || n_split + n > n_total - 1) throw ConfigError("problem.overlap_layers", "overlap too wide");
  const double right1 = (n_split + n) * h;
  const double left2 = (n_split - n) * h;
  const auto mu = axis_from(c, "mu");

  auto make = [&](const std::string& name, double x0, double x1, int nx, const std::string& iface, double xi) {
    auto def = std::make_shared<SubdomainDefinition>();
    def->name = name;
    def->mesh = fem::StructuredMesh(uniform_breaks(x0, x1, nx), uniform_breaks(0.0, height, ny), 1);
    def->interfaces = {{iface, [xi](const fem::Point& q) { return near(q.x, xi); }}};
    // Corner nodes of the interface lie on the outer boundary, where Dirichlet takes precedence.
    def->dirichlet = [length, height](const fem::Point& q) {
      return near(q.x, 0.0) || near(q.x, length) || near(q.y, 0.0) || near(q.y, height);
    };
    def->operators = test1_operators();
    def->loads = test1_sources();
    def->mu_axes = {mu};
    def->lambda_lo = c.lambda_lo;
    def->lambda_hi = c.lambda_hi;
    def->lambda_spacing = c.lambda_spacing;
    def->max_active = max_active;
    return def;
  };
  Benchmark b;
  b.config = c;
  auto d1 = make("omega1", 0.0, right1, n_split + n, "right", right1);
  auto d2 = make("omega2", left2, length, n_total - (n_split - n), "left", left2);
  b.problem.references = {d1, d2};
  b.problem.placements = {{"omega1", 0, GeometricMap::identity(), {}, {}},
                          {"omega2", 1, GeometricMap::identity(), {}, {}}};
  b.problem.parameters = {mu};
  b.refs = {std::make_shared<const SubdomainProblem>(assemble_problem(d1)),
            std::make_shared<const SubdomainProblem>(assemble_problem(d2))};
  b.exact = [](const ParamPoint& m, const fem::Point& q) { return analytic_test1(lookup(m, "mu"), q.x, q.y); };
  finish(b, {max_active, max_active});
  return b;
}

// ---- convection-dominated channel with a stretched outlet ----

Benchmark build_graetz(const BenchmarkConfig& c) {
  const auto& p = c.problem;
  const double h_bar = get_positive(p, "h_bar", "problem");
  const double x_offset = get_positive(p, "x_offset", "problem");
  const double tau_freeze = get_positive(p, "tau_freeze", "problem");
  const double amp = get_positive(p, "velocity_amplitude", "problem");
  const auto yb = segment_breaks(get_array(p, "y", "problem"), "problem.y");
  const auto xf = segment_breaks(get_array(p, "fixed_x", "problem"), "problem.fixed_x");
  const auto xs = segment_breaks(get_array(p, "stretched_x", "problem"), "problem.stretched_x");
  const auto& ma = get_object(p, "max_active", "problem");
  const auto ma_fixed = static_cast<std::size_t>(get_int(ma, "fixed", "problem.max_active", 1));
  const auto ma_stretched = static_cast<std::size_t>(get_int(ma, "stretched", "problem.max_active", 1));
  if (!near(yb.front(), 0.0) || !near(yb.back(), 1.0)) throw ConfigError("problem.y", "must span [0, 1]");
  if (!near(xf.front(), 0.0) || !(xf.back() > x_offset)) throw ConfigError("problem.fixed_x", "must span [0, > x_offset]");
  if (!near(xs.front(), 0.0) || !near(xs.back(), 1.0)) throw ConfigError("problem.stretched_x", "must span [0, 1]");
  if (!(h_bar < 1.0)) throw ConfigError("problem.h_bar", "must be below 1");
  if (!near(xf.back(), x_offset + h_bar)) throw ConfigError("problem.fixed_x", "must end at x_offset + h_bar");
  bool has_split = false;
  for (double x : xs) has_split = has_split || near(x, h_bar);
  if (!has_split) throw ConfigError("problem.stretched_x", "must contain a grid line at h_bar");
  for (double x : xf)
    if (x > x_offset + kGeomTol) {
      bool found = false;
      for (double r : xs) found = found || near(r, x - x_offset);
      if (!found) throw ConfigError("problem.fixed_x", "overlap grid lines must coincide with problem.stretched_x");
    }

  const auto mu1 = axis_from(c, "mu1");
  const auto mu2 = axis_from(c, "mu2");
  const auto map = GeometricMap::graetz(h_bar, x_offset, "mu2");
  map.validate(mu2.get());
  const fem::VectorField velocity = [amp](const fem::Point& q) {
    return std::array<double, 2>{amp * q.y * (1.0 - q.y), 0.0};
  };
  const double xend = xf.back();

  auto d1 = std::make_shared<SubdomainDefinition>();
  d1->name = "omega1";
  d1->mesh = fem::StructuredMesh(xf, yb, 1);
  d1->interfaces = {{"right", [xend](const fem::Point& q) { return near(q.x, xend); }}};
  d1->dirichlet = [](const fem::Point& q) { return near(q.x, 0.0) || near(q.y, 0.0) || near(q.y, 1.0); };
  d1->dirichlet_data = {{[x_offset](const fem::Point& q) {
                           return (near(q.y, 0.0) || near(q.y, 1.0)) && q.x > x_offset + kGeomTol ? 1.0 : 0.0;
                         },
                         {}}};
  ChannelPhysics ph1{"mu1", velocity, fem::supg_tau(d1->mesh, velocity, tau_freeze)};
  d1->operators = channel_forms(ph1);
  d1->mu_axes = {mu1};
  d1->max_active = ma_fixed;

  auto d2 = std::make_shared<SubdomainDefinition>();
  d2->name = "omega2_ref";
  d2->mesh = fem::StructuredMesh(xs, yb, 1);
  d2->interfaces = {{"left", [](const fem::Point& q) { return near(q.x, 0.0); }}};
  d2->dirichlet = [](const fem::Point& q) { return near(q.y, 0.0) || near(q.y, 1.0); };
  d2->dirichlet_data = {{[](const fem::Point& q) { return q.x > kGeomTol ? 1.0 : 0.0; }, {}}};
  ChannelPhysics ph2{"mu1", velocity, fem::supg_tau(d2->mesh, velocity, tau_freeze)};
  d2->operators = pull_back_graetz(ph2, map);
  d2->mu_axes = {mu1, mu2};
  d2->max_active = ma_stretched;
  for (auto* d : {d1.get(), d2.get()}) {
    d->lambda_lo = c.lambda_lo;
    d->lambda_hi = c.lambda_hi;
    d->lambda_spacing = c.lambda_spacing;
  }

  Benchmark b;
  b.config = c;
  b.problem.references = {d1, d2};
  b.problem.placements = {{"omega1", 0, GeometricMap::identity(), {}, {}}, {"omega2", 1, map, {}, {}}};
  b.problem.parameters = {mu1, mu2};
  b.refs = {std::make_shared<const SubdomainProblem>(assemble_problem(d1)),
            std::make_shared<const SubdomainProblem>(assemble_problem(d2))};
  finish(b, {ma_fixed, ma_stretched});
  return b;
}

// ---- modular thermal structure ----

Benchmark build_thermal(const BenchmarkConfig& c) {
  const auto& p = c.problem;
  const int degree = p.contains("degree") ? get_int(p, "degree", "problem", 1) : 1;
  if (degree > 2) throw ConfigError("problem.degree", "must be 1 or 2");
  const int bulk_n = get_int(p, "bulk_intervals", "problem", 1);
  const double wing_len = get_positive(p, "wing_length", "problem");
  const int wing_n = get_int(p, "wing_intervals", "problem", 1);
  const auto max_active = static_cast<std::size_t>(get_int(p, "max_active", "problem", 1));
  const auto& center_j = get_array(p, "center", "problem");
  if (center_j.size() != 2 || !center_j[0].is_number() || !center_j[1].is_number())
    throw ConfigError("problem.center", "must be a pair of numbers");
  const fem::Point center{center_j[0].get<double>(), center_j[1].get<double>()};
  const auto mu = axis_from(c, "mu");

  std::vector<double> breaks = uniform_breaks(-wing_len, 0.0, wing_n);
  for (double x : uniform_breaks(0.0, 1.0, bulk_n)) if (x > 0.0) breaks.push_back(x);
  for (double x : uniform_breaks(1.0, 1.0 + wing_len, wing_n)) if (x > 1.0) breaks.push_back(x);
  const auto in_bulk_band = [](double v) { return v > 0.0 && v < 1.0; };
  const fem::PointPredicate active = [in_bulk_band](const fem::Point& q) {
    return in_bulk_band(q.x) || in_bulk_band(q.y);
  };
  const fem::ScalarField bulk = [in_bulk_band](const fem::Point& q) {
    return in_bulk_band(q.x) && in_bulk_band(q.y) ? 1.0 : 0.0;
  };
  const fem::ScalarField wings = [bulk](const fem::Point& q) { return 1.0 - bulk(q); };
  const double lo = -wing_len, hi = 1.0 + wing_len;
  const auto side_pred = [lo, hi](const std::string& side, const std::string& field) -> fem::PointPredicate {
    if (side == "left") return [lo](const fem::Point& q) { return near(q.x, lo); };
    if (side == "right") return [hi](const fem::Point& q) { return near(q.x, hi); };
    if (side == "bottom") return [lo](const fem::Point& q) { return near(q.y, lo); };
    if (side == "top") return [hi](const fem::Point& q) { return near(q.y, hi); };
    throw ConfigError(field, "must be left, right, bottom or top");
  };

  Benchmark b;
  b.config = c;
  std::map<std::string, std::size_t> ref_index;
  std::vector<std::size_t> actives;
  const auto& refs = get_array(p, "references", "problem");
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const auto path = "problem.references[" + std::to_string(r) + "]";
    auto def = std::make_shared<SubdomainDefinition>();
    def->name = get_string(refs[r], "name", path);
    if (ref_index.count(def->name)) throw ConfigError(path + ".name", "duplicate reference");
    def->mesh = fem::StructuredMesh(breaks, breaks, degree, active);
    for (const auto& s : get_array(refs[r], "interfaces", path)) {
      if (!s.is_string()) throw ConfigError(path + ".interfaces", "entries must be side names");
      def->interfaces.push_back({s.get<std::string>(), side_pred(s.get<std::string>(), path + ".interfaces")});
    }
    def->dirichlet = [](const fem::Point&) { return false; };
    fem::FormTerm kb;
    kb.kind = fem::FormKind::Diffusion;
    kb.coeff = bulk;
    fem::FormTerm kw = kb;
    kw.coeff = wings;
    def->operators = {{"bulk", kb, {{"mu", [](double m) { return m; }}}}, {"wings", kw, {}}};
    if (refs[r].contains("flux") && !refs[r].at("flux").is_null()) {
      const auto& fl = get_object(refs[r], "flux", path);
      const auto side = get_string(fl, "side", path + ".flux");
      const double value = get_number(fl, "value", path + ".flux");
      for (const auto& i : def->interfaces)
        if (i.name == side) throw ConfigError(path + ".flux.side", "side is already an interface");
      def->loads.push_back({LoadForm::Kind::Boundary, fem::constant(value), side_pred(side, path + ".flux.side"), {}});
    }
    def->mu_axes = {mu};
    def->lambda_lo = c.lambda_lo;
    def->lambda_hi = c.lambda_hi;
    def->lambda_spacing = c.lambda_spacing;
    def->max_active = max_active;
    ref_index[def->name] = r;
    b.problem.references.push_back(def);
    b.refs.push_back(std::make_shared<const SubdomainProblem>(assemble_problem(def)));
    actives.push_back(max_active);
  }
  const auto& places = get_array(p, "placements", "problem");
  std::map<std::string, bool> seen_param;
  for (std::size_t k = 0; k < places.size(); ++k) {
    const auto path = "problem.placements[" + std::to_string(k) + "]";
    PlacedSubdomain pl;
    pl.name = get_string(places[k], "name", path);
    const auto ref = get_string(places[k], "reference", path);
    if (!ref_index.count(ref)) throw ConfigError(path + ".reference", "unknown reference '" + ref + "'");
    pl.reference = ref_index[ref];
    const auto& t = get_array(places[k], "translation", path);
    if (t.size() != 2 || !t[0].is_number() || !t[1].is_number())
      throw ConfigError(path + ".translation", "must be a pair of numbers");
    const int turns = get_int(places[k], "quarter_turns", path, 0);
    if (turns > 3) throw ConfigError(path + ".quarter_turns", "must be 0, 1, 2 or 3");
    pl.map = GeometricMap::rigid({t[0].get<double>(), t[1].get<double>()}, turns, center);
    const auto param = get_string(places[k], "parameter", path);
    pl.binding["mu"] = param;
    if (!seen_param[param]) {
      seen_param[param] = true;
      b.problem.parameters.push_back(make_axis_ptr(ParamAxis(param, mu->nodes())));
    }
    if (places[k].contains("fixed")) {
      const auto& fx = get_object(places[k], "fixed", path);
      const auto& names = b.refs[pl.reference]->partition.interface_names;
      for (auto it = fx.begin(); it != fx.end(); ++it) {
        if (std::find(names.begin(), names.end(), it.key()) == names.end())
          throw ConfigError(path + ".fixed." + it.key(), "not an interface of reference '" + ref + "'");
        pl.fixed_interfaces[it.key()] = get_number(fx, it.key(), path + ".fixed");
      }
    }
    b.problem.placements.push_back(std::move(pl));
  }
  if (b.problem.placements.empty()) throw ConfigError("problem.placements", "at least one placement required");
  finish(b, actives);
  return b;
}

}  // namespace

std::vector<OperatorForm> test1_operators() {
  fem::FormTerm k1;
  k1.kind = fem::FormKind::Diffusion;
  k1.constant_coefficient = true;
  fem::FormTerm kx;
  kx.kind = fem::FormKind::Diffusion;
  kx.coeff = [](const fem::Point& q) { return q.x; };
  return {{"unit", k1, {}}, {"linear", kx, {{"mu", [](double m) { return m; }}}}};
}

std::vector<LoadForm> test1_sources() {
  constexpr double pi = std::numbers::pi;
  constexpr double tp = 2.0 * pi;
  const auto s = [](const fem::Point& q) { return std::sin(tp * q.x) * std::sin(tp * q.y); };
  const auto lap = [](const fem::Point& q) { return 2.0 * (q.y * q.y - q.y) + 2.0 * (q.x * q.x - 2.0 * q.x); };
  const fem::ScalarField b0 = [s](const fem::Point& q) { return 8.0 * pi * pi * s(q); };
  const fem::ScalarField b1 = [s, lap](const fem::Point& q) {
    return 8.0 * pi * pi * q.x * s(q) - 0.5 * lap(q) - tp * std::cos(tp * q.x) * std::sin(tp * q.y);
  };
  const fem::ScalarField b2 = [lap](const fem::Point& q) {
    return -0.5 * q.x * lap(q) - (q.x - 1.0) * (q.y * q.y - q.y);
  };
  const auto id = [](double m) { return m; };
  const auto sq = [](double m) { return m * m; };
  return {{LoadForm::Kind::Volume, b0, {}, {}},
          {LoadForm::Kind::Volume, b1, {}, {{"mu", id}}},
          {LoadForm::Kind::Volume, b2, {}, {{"mu", sq}}}};
}

Benchmark build_benchmark(const BenchmarkConfig& config) {
  if (config.benchmark == "test1") return build_test1(config);
  if (config.benchmark == "graetz") return build_graetz(config);
  if (config.benchmark == "thermal") return build_thermal(config);
  throw ConfigError("benchmark", "unknown benchmark '" + config.benchmark + "'");
}

std::vector<const SubdomainProblem*> Benchmark::ref_ptrs() const {
  std::vector<const SubdomainProblem*> out;
  for (const auto& r : refs) out.push_back(r.get());
  return out;
}

ParamPoint Benchmark::parse_point(const std::string& text) const {
  ParamPoint mu;
  for (const auto& cs : config.cases)
    if (cs.name == text) mu = cs.mu;
  if (mu.empty()) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      std::string key, val;
      if (eq == std::string::npos) {
        if (problem.parameters.size() != 1)
          throw std::invalid_argument("parameter value '" + item + "' needs a name (name=value)");
        key = problem.parameters.front()->name();
        val = item;
      } else {
        key = item.substr(0, eq);
        val = item.substr(eq + 1);
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(val, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != val.size()) throw std::invalid_argument("bad parameter value '" + val + "'");
      mu[key] = v;
    }
  }
  for (const auto& [k, v] : mu) {
    bool known = false;
    for (const auto& a : problem.parameters) known = known || a->name() == k;
    if (!known) throw std::invalid_argument("unknown parameter '" + k + "'");
  }
  check_parameters(problem, mu);
  return mu;
}

Benchmark laplace_strip(const StripOptions& o) {
  if (o.cells < 4 || o.cells % 2 != 0) throw std::invalid_argument("strip needs an even number of cells >= 4");
  if (o.overlap_cells < 1 || o.overlap_cells >= o.cells / 2) throw std::invalid_argument("strip overlap out of range");
  const double h = 1.0 / o.cells;
  const int mid = o.cells / 2;
  const double r1 = (mid + o.overlap_cells) * h;
  const double l2 = (mid - o.overlap_cells) * h;
  Benchmark b;
  b.config.benchmark = "strip";
  b.config.scale = "desk";
  b.config.parameters = {{"mu", 1.0, 2.0, 0.5}};
  b.config.lambda_lo = o.lambda_lo;
  b.config.lambda_hi = o.lambda_hi;
  b.config.lambda_spacing = o.lambda_spacing;
  b.config.pgd.eps_enrich = 1e-10;
  b.config.pgd.als_tol = 1e-12;
  b.config.pgd.als_max_iters = 100;
  b.config.pgd.compress = false;
  b.config.gmres.tol = 1e-10;
  b.config.gmres.restart = 20;
  b.config.gmres.max_iters = 200;
  const auto mu = axis_from(b.config, "mu");
  auto make = [&](const std::string& name, double x0, double x1, int nx, double xi) {
    auto def = std::make_shared<SubdomainDefinition>();
    def->name = name;
    def->mesh = fem::StructuredMesh(uniform_breaks(x0, x1, nx), {0.0, h}, 1);
    def->interfaces = {{"interface", [xi](const fem::Point& q) { return near(q.x, xi); }}};
    def->dirichlet = [](const fem::Point& q) { return near(q.x, 0.0) || near(q.x, 1.0); };
    fem::FormTerm k;
    k.kind = fem::FormKind::Diffusion;
    k.constant_coefficient = true;
    def->operators = {{"diffusion", k, {{"mu", [](double m) { return m; }}}}};
    def->dirichlet_data = {{[](const fem::Point& q) { return q.x; }, {}}};
    def->mu_axes = {mu};
    def->lambda_lo = o.lambda_lo;
    def->lambda_hi = o.lambda_hi;
    def->lambda_spacing = o.lambda_spacing;
    def->max_active = o.max_active;
    return def;
  };
  auto d1 = make("left", 0.0, r1, mid + o.overlap_cells, r1);
  auto d2 = make("right", l2, 1.0, o.cells - (mid - o.overlap_cells), l2);
  b.problem.references = {d1, d2};
  b.problem.placements = {{"left", 0, GeometricMap::identity(), {}, {}},
                          {"right", 1, GeometricMap::identity(), {}, {}}};
  b.problem.parameters = {mu};
  b.refs = {std::make_shared<const SubdomainProblem>(assemble_problem(d1)),
            std::make_shared<const SubdomainProblem>(assemble_problem(d2))};
  b.exact = [](const ParamPoint&, const fem::Point& q) { return q.x; };
  finish(b, {o.max_active, o.max_active});
  return b;
}

}  // namespace pgdschwarz
