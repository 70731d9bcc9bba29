#include "pgdschwarz/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace pgdschwarz {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

}  // namespace

const json& get_object(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(join(path, key), "missing");
  const auto& v = j.at(key);
  if (!v.is_object()) throw ConfigError(join(path, key), "must be an object");
  return v;
}

const json& get_array(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(join(path, key), "missing");
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(join(path, key), "must be an array");
  return v;
}

double get_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(join(path, key), "missing");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(path, key), "must be finite");
  return x;
}

double get_positive(const json& j, const std::string& key, const std::string& path) {
  const double x = get_number(j, key, path);
  if (!(x > 0.0)) throw ConfigError(join(path, key), "must be positive");
  return x;
}

int get_int(const json& j, const std::string& key, const std::string& path, int min_value) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(join(path, key), "missing");
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "must be an integer");
  const int x = v.get<int>();
  if (x < min_value) throw ConfigError(join(path, key), "must be at least " + std::to_string(min_value));
  return x;
}

std::string get_string(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(join(path, key), "missing");
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "must be a string");
  return v.get<std::string>();
}

std::vector<double> segment_breaks(const json& segments, const std::string& path) {
  if (!segments.is_array() || segments.empty()) throw ConfigError(path, "must be a non-empty array of segments");
  std::vector<double> out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto p = path + "[" + std::to_string(s) + "]";
    const auto& seg = segments[s];
    const double lo = get_number(seg, "lo", p);
    const double hi = get_number(seg, "hi", p);
    if (!(lo < hi)) throw ConfigError(p, "lo must be below hi");
    if (!out.empty() && std::abs(out.back() - lo) > 1e-12 * std::max(1.0, std::abs(lo)))
      throw ConfigError(p + ".lo", "segments must be contiguous");
    const int n = get_int(seg, "intervals", p, 1);
    const std::string dist = seg.contains("distribution") ? get_string(seg, "distribution", p) : "uniform";
    if (dist != "uniform" && dist != "cosine") throw ConfigError(p + ".distribution", "must be uniform or cosine");
    const std::size_t first = out.empty() ? 0 : 1;
    for (int k = static_cast<int>(first); k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      const double r = dist == "uniform" ? t : 0.5 * (1.0 - std::cos(std::numbers::pi * t));
      out.push_back(k == n ? hi : lo + (hi - lo) * r);
    }
  }
  return out;
}

BenchmarkConfig parse_config(const json& doc, const std::string& scale) {
  BenchmarkConfig c;
  c.source = doc;
  c.scale = scale;
  if (!doc.is_object()) throw ConfigError("<root>", "must be an object");
  c.benchmark = get_string(doc, "benchmark", "");
  if (c.benchmark != "test1" && c.benchmark != "graetz" && c.benchmark != "thermal")
    throw ConfigError("benchmark", "must be test1, graetz or thermal");
  if (scale != "paper" && scale != "desk") throw ConfigError("scale", "must be paper or desk");
  const auto& scales = get_object(doc, "scales", "");
  const auto& sc = get_object(scales, scale, "scales");
  const auto& spacing = get_object(sc, "spacing", "scales." + scale);
  const std::string sp = "scales." + scale + ".spacing";

  const auto& params = get_array(doc, "parameters", "");
  if (params.empty()) throw ConfigError("parameters", "at least one parameter axis required");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto p = "parameters[" + std::to_string(k) + "]";
    AxisSpec a;
    a.name = get_string(params[k], "name", p);
    a.lo = get_number(params[k], "lo", p);
    a.hi = get_number(params[k], "hi", p);
    if (!(a.lo < a.hi)) throw ConfigError(p, "lo must be below hi");
    a.spacing = get_positive(spacing, a.name, sp);
    if (a.spacing >= a.hi - a.lo) throw ConfigError(sp + "." + a.name, "must be below the axis length");
    for (const auto& b : c.parameters)
      if (b.name == a.name) throw ConfigError(p + ".name", "duplicate parameter '" + a.name + "'");
    c.parameters.push_back(a);
  }

  const auto& lam = get_object(doc, "lambda", "");
  c.lambda_lo = get_number(lam, "lo", "lambda");
  c.lambda_hi = get_number(lam, "hi", "lambda");
  if (!(c.lambda_lo < c.lambda_hi)) throw ConfigError("lambda", "lo must be below hi");
  c.lambda_spacing = get_positive(spacing, "lambda", sp);
  if (c.lambda_spacing >= c.lambda_hi - c.lambda_lo) throw ConfigError(sp + ".lambda", "must be below the axis length");

  const auto& pgd = get_object(doc, "pgd", "");
  c.pgd.eps_enrich = get_positive(pgd, "eps", "pgd");
  c.pgd.eps_compress = get_positive(pgd, "eps_compress", "pgd");
  c.pgd.max_modes = get_int(pgd, "max_modes", "pgd", 1);
  c.pgd.als_tol = get_positive(pgd, "als_tol", "pgd");
  c.pgd.als_max_iters = get_int(pgd, "als_max_iters", "pgd", 1);
  c.pgd.compress = pgd.value("compress", true);
  c.pgd.seed = pgd.value("seed", std::uint64_t{1});
  if (c.pgd.eps_enrich >= 1.0) throw ConfigError("pgd.eps", "must be below 1");
  if (c.pgd.eps_compress >= 1.0) throw ConfigError("pgd.eps_compress", "must be below 1");

  const auto& gm = get_object(doc, "gmres", "");
  c.gmres.tol = get_positive(gm, "tol", "gmres");
  c.gmres.restart = get_int(gm, "restart", "gmres", 1);
  c.gmres.max_iters = get_int(gm, "max_iters", "gmres", 1);

  c.problem = get_object(doc, "problem", "");

  if (doc.contains("cases")) {
    const auto& cases = get_array(doc, "cases", "");
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const auto p = "cases[" + std::to_string(k) + "]";
      CaseSpec cs;
      cs.name = get_string(cases[k], "name", p);
      const auto& mu = get_object(cases[k], "mu", p);
      for (auto it = mu.begin(); it != mu.end(); ++it) cs.mu[it.key()] = get_number(mu, it.key(), p + ".mu");
      c.cases.push_back(std::move(cs));
    }
  }
  return c;
}

BenchmarkConfig load_config(const std::filesystem::path& path, const std::string& scale) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return parse_config(doc, scale);
}

}  // namespace pgdschwarz
