#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <exception>

#include "pgdschwarz/commands.hpp"
#include "pgdschwarz/config.hpp"

int main(int argc, char** argv) {
  using namespace pgdschwarz;
  CLI::App app{"Offline/online PGD surrogates coupled by overlapping Schwarz iterations"};
  app.require_subcommand(1);
  CommandOptions o;
  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  const auto scale_opt = [&](CLI::App* c) {
    c->add_option("--scale", o.scale, "Discretisation scale")->check(CLI::IsMember({"paper", "desk"}));
  };
  const auto seed_opt = [&](CLI::App* c) { c->add_option("--seed", seed, "Random seed"); };

  auto* off = app.add_subcommand("offline", "Build the PGD surrogates of every reference subdomain");
  off->add_option("--config", o.config, "Benchmark configuration (JSON)")->required()->check(CLI::ExistingFile);
  off->add_option("--out", o.out, "Output directory")->required();
  off->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  scale_opt(off);
  seed_opt(off);

  auto* on = app.add_subcommand("online", "Solve one parameter point with the surrogates");
  on->add_option("--surrogates", o.surrogates, "Offline output directory")->required()->check(CLI::ExistingDirectory);
  on->add_option("--mu", o.mu, "Case name, name=value list, or scalar")->required()->expected(1);
  on->add_option("--out", o.out, "Output directory")->required();

  auto* cmp = app.add_subcommand("compare", "Compare surrogate, DD-FEM and monolithic FEM solutions");
  cmp->add_option("--surrogates", o.surrogates, "Offline output directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--mu", o.mu, "Case names, name=value lists, or scalars");
  cmp->add_option("--count", o.count, "Additional random parameter points");
  cmp->add_option("--out", o.out, "Output directory")->required();
  seed_opt(cmp);

  auto* rep = app.add_subcommand("report", "Merge online run directories");
  rep->add_option("runs", o.runs, "Online output directories")->check(CLI::ExistingDirectory);
  rep->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; every argument error uses the usage exit status.
    return app.exit(e) == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  for (auto* c : {off, cmp})
    if (c->parsed() && c->count("--seed") > 0) o.seed = seed;

  try {
    if (off->parsed()) return cmd_offline(o);
    if (on->parsed()) return cmd_online(o);
    if (cmp->parsed()) return cmd_compare(o);
    return cmd_report(o);
  } catch (const ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
