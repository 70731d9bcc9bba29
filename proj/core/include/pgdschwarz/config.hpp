#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgdschwarz/gmres.hpp"
#include "pgdschwarz/param_grid.hpp"
#include "pgdschwarz/pgd_solver.hpp"

namespace pgdschwarz {

// Validation failure naming the offending field, e.g. "pgd.eps: must be positive".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct AxisSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  double spacing = 0.1;
};

struct CaseSpec {
  std::string name;
  ParamPoint mu;
};

struct BenchmarkConfig {
  std::string benchmark;  // test1 | graetz | thermal
  std::string scale;      // paper | desk
  std::vector<AxisSpec> parameters;  // reference-level parameter axes, spacing resolved for the scale
  double lambda_lo = -1.0;
  double lambda_hi = 1.0;
  double lambda_spacing = 0.1;
  PgdSettings pgd;
  GmresSettings gmres;
  std::vector<CaseSpec> cases;
  nlohmann::json problem;  // benchmark-specific block, validated by the builder
  nlohmann::json source;   // the whole document
};

BenchmarkConfig parse_config(const nlohmann::json& doc, const std::string& scale);
BenchmarkConfig load_config(const std::filesystem::path& path, const std::string& scale);

// Typed field access with field-specific errors.
double get_number(const nlohmann::json& j, const std::string& key, const std::string& path);
double get_positive(const nlohmann::json& j, const std::string& key, const std::string& path);
int get_int(const nlohmann::json& j, const std::string& key, const std::string& path, int min_value);
std::string get_string(const nlohmann::json& j, const std::string& key, const std::string& path);
const nlohmann::json& get_object(const nlohmann::json& j, const std::string& key, const std::string& path);
const nlohmann::json& get_array(const nlohmann::json& j, const std::string& key, const std::string& path);

// Grid lines from segments [{lo, hi, intervals, distribution: uniform|cosine}].
std::vector<double> segment_breaks(const nlohmann::json& segments, const std::string& path);

}  // namespace pgdschwarz
