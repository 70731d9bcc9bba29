#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pgdschwarz/benchmarks.hpp"
#include "pgdschwarz/commands.hpp"
#include "pgdschwarz/config.hpp"
#include "pgdschwarz/csv.hpp"
#include "pgdschwarz/surrogate_io.hpp"

using namespace pgdschwarz;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kConfigDir = PGDSCHWARZ_CONFIG_DIR;

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("pgdschwarz_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Coarse manufactured-solution config that builds in well under a second.
json small_test1() {
  auto doc = read_json(kConfigDir + "/test1.json");
  doc["scales"]["desk"]["spacing"] = {{"mu", 0.5}, {"lambda", 1.0}};
  doc["problem"]["h"] = 0.1;
  return doc;
}

std::string config_error_field(json doc, const std::string& scale = "desk") {
  try {
    build_benchmark(parse_config(doc, scale));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST(BenchCli, ShippedConfigsParse) {
  for (const auto* name : {"test1.json", "test1_overlap3.json", "graetz.json", "thermal.json"})
    for (const auto* scale : {"desk", "paper"}) EXPECT_NO_THROW(load_config(kConfigDir + "/" + name, scale)) << name;
  const auto c = load_config(kConfigDir + "/graetz.json", "desk");
  EXPECT_EQ(c.gmres.restart, 8);
  EXPECT_EQ(c.parameters.size(), 2u);
}

TEST(BenchCli, ValidationNamesTheOffendingField) {
  const auto base = read_json(kConfigDir + "/test1.json");
  auto d = base;
  d["benchmark"] = "heat";
  EXPECT_EQ(config_error_field(d), "benchmark");
  d = base;
  d["scales"]["desk"]["spacing"]["mu"] = -0.1;
  EXPECT_EQ(config_error_field(d), "scales.desk.spacing.mu");
  d = base;
  d["scales"]["desk"]["spacing"].erase("lambda");
  EXPECT_EQ(config_error_field(d), "scales.desk.spacing.lambda");
  d = base;
  d["pgd"]["eps"] = 0.0;
  EXPECT_EQ(config_error_field(d), "pgd.eps");
  d = base;
  d["gmres"]["restart"] = 0;
  EXPECT_EQ(config_error_field(d), "gmres.restart");
  d = base;
  d["cases"][0]["mu"]["mu"] = 80.0;
  EXPECT_EQ(config_error_field(d), "cases.mu3");
  d = base;
  d["problem"]["h"] = 0.03;
  EXPECT_EQ(config_error_field(d), "problem.height");
  EXPECT_EQ(config_error_field(base, "huge"), "scale");

  const auto th = read_json(kConfigDir + "/thermal.json");
  d = th;
  d["problem"]["placements"][2]["quarter_turns"] = 5;
  EXPECT_EQ(config_error_field(d), "problem.placements[2].quarter_turns");
  d = th;
  d["problem"]["placements"][0]["reference"] = "ref9";
  EXPECT_EQ(config_error_field(d), "problem.placements[0].reference");
  d = th;
  d["cases"][1]["mu"]["mu5"] = 0.01;
  EXPECT_EQ(config_error_field(d), "cases.case2");

  const auto gr = read_json(kConfigDir + "/graetz.json");
  d = gr;
  d["problem"]["h_bar"] = 0.04;
  EXPECT_EQ(config_error_field(d), "problem.fixed_x");
}

TEST(BenchCli, ParsePointForms) {
  const auto b = build_benchmark(parse_config(small_test1(), "desk"));
  EXPECT_DOUBLE_EQ(b.parse_point("mu30").at("mu"), 30.0);
  EXPECT_DOUBLE_EQ(b.parse_point("12.5").at("mu"), 12.5);
  EXPECT_DOUBLE_EQ(b.parse_point("mu=7").at("mu"), 7.0);
  EXPECT_THROW(b.parse_point("mu=70"), std::out_of_range);
  EXPECT_ANY_THROW(b.parse_point("nonsense"));
}

TEST(BenchCli, RandomPointsAreSeededAndInBounds) {
  const auto b = build_benchmark(load_config(kConfigDir + "/graetz.json", "desk"));
  const auto a = random_points(b.problem, 42, 5);
  const auto c = random_points(b.problem, 42, 5);
  const auto d = random_points(b.problem, 43, 5);
  EXPECT_EQ(a, c);
  EXPECT_NE(a, d);
  for (const auto& p : a) EXPECT_NO_THROW(check_parameters(b.problem, p));
}

TEST(BenchCli, CsvQuotingRoundTrip) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const auto dir = scratch("csv");
  {
    CsvWriter w(dir / "t.csv", {"name", "value"});
    w.row({"x,y", csv_number(0.1)});
    w.row({"line\nbreak", csv_number(-2.5e-17)});
    EXPECT_THROW(w.row({"only-one"}), std::invalid_argument);
  }
  const auto t = read_csv(dir / "t.csv");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1][0], "x,y");
  EXPECT_EQ(std::stod(t[1][1]), 0.1);
  EXPECT_EQ(t[2][0], "line\nbreak");
  EXPECT_EQ(std::stod(t[2][1]), -2.5e-17);
}

TEST(BenchCli, SurrogateContainerRoundTrip) {
  const auto b = laplace_strip({});
  const auto m = build_surrogate(*b.refs[0], b.actives[0], b.config.pgd);
  const auto dir = scratch("model");
  save_model(dir / "left", m, {{"tag", 7}});
  json extra;
  const auto r = load_model(dir / "left", &extra);
  EXPECT_EQ(extra.at("tag").get<int>(), 7);
  EXPECT_EQ(r.interface_nodes, m.interface_nodes);
  Vec l(2);
  l << 0.3, -0.7;
  EXPECT_EQ(evaluate_model(r, {{"mu", 1.3}}, l), evaluate_model(m, {{"mu", 1.3}}, l));
  std::ofstream(dir / "left" / "source.pgd", std::ios::trunc) << "corrupt";
  EXPECT_ANY_THROW(load_model(dir / "left"));
}

TEST(BenchCli, OfflineOnlineRoundTripIsDeterministic) {
  const auto dir = scratch("roundtrip");
  std::ofstream(dir / "cfg.json") << small_test1().dump(2);
  CommandOptions o;
  o.config = dir / "cfg.json";
  o.out = dir / "off";
  o.workers = 1;
  ASSERT_EQ(cmd_offline(o), 0);
  for (const auto* f : {"config.json", "offline.json", "timings.json", "amplitudes.csv"})
    EXPECT_TRUE(fs::exists(dir / "off" / f)) << f;
  EXPECT_EQ(fs::directory_iterator(dir / "off" / "models") == fs::directory_iterator(), false);
  CommandOptions on;
  on.surrogates = dir / "off";
  on.mu = {"mu3"};
  on.out = dir / "run1";
  ASSERT_EQ(cmd_online(on), 0);
  on.out = dir / "run2";
  ASSERT_EQ(cmd_online(on), 0);
  EXPECT_EQ(slurp(dir / "run1" / "summary.json"), slurp(dir / "run2" / "summary.json"));
  EXPECT_EQ(slurp(dir / "run1" / "residuals.csv"), slurp(dir / "run2" / "residuals.csv"));
  const auto s = read_json(dir / "run1" / "summary.json");
  EXPECT_EQ(s.at("status"), "ok");
  EXPECT_EQ(s.at("interface_dimension").get<int>(), 18);
  // Offline rebuild with the same seed gives identical online output.
  o.out = dir / "off2";
  ASSERT_EQ(cmd_offline(o), 0);
  on.surrogates = dir / "off2";
  on.out = dir / "run3";
  ASSERT_EQ(cmd_online(on), 0);
  EXPECT_EQ(slurp(dir / "run1" / "summary.json"), slurp(dir / "run3" / "summary.json"));

  on.mu = {"mu=80"};
  on.out = dir / "bad";
  EXPECT_THROW(cmd_online(on), std::out_of_range);

  CommandOptions cmp;
  cmp.surrogates = dir / "off";
  cmp.count = 2;
  cmp.seed = 9;
  cmp.out = dir / "cmp1";
  ASSERT_EQ(cmd_compare(cmp), 0);
  const auto t = read_csv(dir / "cmp1" / "compare.csv");
  ASSERT_EQ(t.size(), 3u);
  cmp.out = dir / "cmp2";
  ASSERT_EQ(cmd_compare(cmp), 0);
  EXPECT_EQ(read_csv(dir / "cmp2" / "compare.csv")[1][0], t[1][0]);

  CommandOptions rep;
  rep.runs = {dir / "run1", dir / "run2"};
  rep.out = dir / "report";
  ASSERT_EQ(cmd_report(rep), 0);
  const auto runs = read_csv(dir / "report" / "runs.csv");
  EXPECT_EQ(runs.size(), 3u);
  const auto res = read_csv(dir / "report" / "residuals.csv");
  const auto own = read_csv(dir / "run1" / "residuals.csv");
  EXPECT_EQ(res.size(), 2 * (own.size() - 1) + 1);
  EXPECT_EQ(res[1][1], "0");
  EXPECT_TRUE(fs::exists(dir / "report" / "run1.vtk"));
}

TEST(BenchCli, EmptyReportSucceeds) {
  const auto dir = scratch("empty_report");
  CommandOptions rep;
  rep.out = dir / "report";
  EXPECT_EQ(cmd_report(rep), 0);
  EXPECT_EQ(read_csv(dir / "report" / "runs.csv").size(), 1u);
}
