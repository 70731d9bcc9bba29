#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pgdschwarz {

// One-dimensional parameter interval with its collocation nodes.
class ParamAxis {
 public:
  ParamAxis() = default;
  ParamAxis(std::string name, std::vector<double> nodes);

  const std::string& name() const { return name_; }
  double lo() const { return nodes_.front(); }
  double hi() const { return nodes_.back(); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }
  double node(std::size_t k) const { return nodes_[k]; }
  bool uniform() const { return uniform_; }
  bool contains(double x) const { return x >= lo() && x <= hi(); }

  // Index k of the bracket [nodes[k], nodes[k+1]] holding x and the weight of nodes[k+1].
  struct Bracket {
    std::size_t left;
    double right_weight;
  };
  Bracket bracket(double x) const;

 private:
  std::string name_;
  std::vector<double> nodes_;
  bool uniform_ = false;
  double step_ = 0.0;
};

using AxisPtr = std::shared_ptr<const ParamAxis>;

ParamAxis make_uniform_axis(const std::string& name, double lo, double hi, double spacing);
AxisPtr make_axis_ptr(ParamAxis axis);

// Piecewise-linear interpolation of nodal values; throws std::out_of_range outside the axis.
double interp_mode(const ParamAxis& axis, std::span<const double> values, double x);

// Named parameter values, e.g. {"mu": 3.0} or {"lambda_4": -0.2}.
using ParamPoint = std::map<std::string, double>;

double lookup(const ParamPoint& p, const std::string& name);

}  // namespace pgdschwarz
