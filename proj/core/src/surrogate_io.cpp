#include "pgdschwarz/surrogate_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <stdexcept>

namespace pgdschwarz {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "pgdschwarz-surrogate";
constexpr int kVersion = 1;

}  // namespace

json log_to_json(const SubproblemLog& log) {
  return {{"id", log.id},
          {"relative_amplitudes", log.relative_amplitudes},
          {"modes_before_compression", log.modes_before_compression},
          {"modes_after_compression", log.modes_after_compression},
          {"reached_max_modes", log.reached_max_modes},
          {"als_unconverged", log.als_unconverged},
          {"seconds", log.seconds}};
}

SubproblemLog log_from_json(const json& j) {
  SubproblemLog log;
  log.id = j.at("id").get<std::string>();
  log.relative_amplitudes = j.at("relative_amplitudes").get<std::vector<double>>();
  log.modes_before_compression = j.at("modes_before_compression").get<std::size_t>();
  log.modes_after_compression = j.at("modes_after_compression").get<std::size_t>();
  log.reached_max_modes = j.at("reached_max_modes").get<bool>();
  log.als_unconverged = j.at("als_unconverged").get<int>();
  log.seconds = j.at("seconds").get<double>();
  return log;
}

void save_model(const fs::path& dir, const SurrogateModel& m, const json& extra) {
  fs::create_directories(dir);
  std::vector<AxisPtr> axes = m.mu_axes;
  json lambda_axes = json::array();
  for (const auto& set_axes : m.active.axes) {
    json names = json::array();
    for (const auto& a : set_axes) {
      axes.push_back(a);
      names.push_back(a->name());
    }
    lambda_axes.push_back(std::move(names));
  }
  save_axes((dir / "axes.bin").string(), axes);
  save_separated((dir / "source.pgd").string(), m.source_part);
  json boundary = json::array();
  for (std::size_t j = 0; j < m.boundary_parts.size(); ++j) {
    const auto file = fmt::format("boundary_{:03d}.pgd", j);
    save_separated((dir / file).string(), m.boundary_parts[j]);
    boundary.push_back(file);
  }
  json mu = json::array();
  for (const auto& a : m.mu_axes) mu.push_back(a->name());
  json logs = json::array();
  for (const auto& l : m.logs) logs.push_back(log_to_json(l));
  json manifest = {{"format", kFormat},
                   {"version", kVersion},
                   {"name", m.name},
                   {"num_nodes", m.num_nodes},
                   {"interface_nodes", m.interface_nodes},
                   {"mu_axes", mu},
                   {"active_sets", m.active.sets},
                   {"lambda_axes", lambda_axes},
                   {"source", "source.pgd"},
                   {"boundary", boundary},
                   {"logs", logs},
                   {"extra", extra}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(1) << '\n';
}

SurrogateModel load_model(const fs::path& dir, json* extra) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing manifest in " + dir.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(dir.string() + "/manifest.json: " + e.what());
  }
  if (j.value("format", "") != kFormat) throw std::runtime_error(dir.string() + ": not a surrogate directory");
  if (j.value("version", 0) != kVersion) throw std::runtime_error(dir.string() + ": unsupported surrogate version");
  std::map<std::string, AxisPtr> by_name;
  for (auto& a : load_axes((dir / "axes.bin").string())) by_name[a->name()] = a;
  auto axis = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error(dir.string() + ": unknown axis '" + name + "'");
    return it->second;
  };
  SurrogateModel m;
  m.name = j.at("name").get<std::string>();
  m.num_nodes = j.at("num_nodes").get<std::size_t>();
  m.interface_nodes = j.at("interface_nodes").get<std::vector<std::size_t>>();
  for (const auto& n : j.at("mu_axes")) m.mu_axes.push_back(axis(n.get<std::string>()));
  m.active.sets = j.at("active_sets").get<std::vector<std::vector<std::size_t>>>();
  for (const auto& names : j.at("lambda_axes")) {
    std::vector<AxisPtr> set_axes;
    for (const auto& n : names) set_axes.push_back(axis(n.get<std::string>()));
    m.active.axes.push_back(std::move(set_axes));
  }
  const AxisResolver resolve = [&](const std::string& name, std::size_t, double, double) { return axis(name); };
  m.source_part = load_separated((dir / j.at("source").get<std::string>()).string(), resolve);
  for (const auto& f : j.at("boundary")) m.boundary_parts.push_back(load_separated((dir / f.get<std::string>()).string(), resolve));
  for (const auto& l : j.at("logs")) m.logs.push_back(log_from_json(l));
  if (m.boundary_parts.size() != m.active.sets.size())
    throw std::runtime_error(dir.string() + ": boundary part count does not match the active sets");
  if (extra) *extra = j.value("extra", json{});
  return m;
}

}  // namespace pgdschwarz
