#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pgdschwarz/benchmarks.hpp"
#include "pgdschwarz/schwarz_online.hpp"

namespace pgdschwarz {

struct CommandOptions {
  std::filesystem::path config;      // offline: benchmark config file
  std::filesystem::path surrogates;  // online, compare: offline output directory
  std::filesystem::path out;
  std::vector<std::string> mu;  // case names or name=value lists
  std::optional<std::uint64_t> seed;
  std::size_t count = 0;  // compare: number of random parameter points
  std::size_t workers = 1;
  std::string scale = "desk";
  std::vector<std::filesystem::path> runs;  // report inputs
};

int cmd_offline(const CommandOptions& options);
int cmd_online(const CommandOptions& options);
int cmd_compare(const CommandOptions& options);
int cmd_report(const CommandOptions& options);

using ModelSet = std::vector<std::shared_ptr<const SurrogateModel>>;

// Benchmark and surrogate models restored from an offline directory.
struct OfflineState {
  Benchmark bench;
  ModelSet models;
};
OfflineState load_offline(const std::filesystem::path& dir);

struct OnlineRun {
  ParamPoint mu;
  GlobalMesh mesh;
  InterfaceSolve solve;
  std::size_t dimension = 0;
  double seconds = 0.0;
  std::optional<double> rel_l2_exact;
};
OnlineRun run_online(const Benchmark& bench, const ModelSet& models, const ParamPoint& mu,
                     const GmresSettings& settings);

// Deterministic uniform samples in the global parameter box.
std::vector<ParamPoint> random_points(const MultiDomainProblem& problem, std::uint64_t seed, std::size_t count);

}  // namespace pgdschwarz
