#include "pgdschwarz/param_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pgdschwarz {

ParamAxis::ParamAxis(std::string name, std::vector<double> nodes)
    : name_(std::move(name)), nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw std::invalid_argument("axis '" + name_ + "' needs at least two nodes");
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (!std::isfinite(nodes_[k])) throw std::invalid_argument("axis '" + name_ + "' has a non-finite node");
    if (k > 0 && !(nodes_[k] > nodes_[k - 1]))
      throw std::invalid_argument("axis '" + name_ + "' nodes must be strictly increasing");
  }
  // Treat as uniform when every interior node sits on the lattice lo + k*step; the
  // last interval may be shorter (forced endpoint).
  const std::size_t n = nodes_.size();
  step_ = nodes_[1] - nodes_[0];
  uniform_ = true;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double expect = nodes_[0] + static_cast<double>(k) * step_;
    if (std::abs(nodes_[k] - expect) > 1e-9 * step_) {
      uniform_ = false;
      break;
    }
  }
  if (uniform_ && nodes_[n - 1] - nodes_[n - 2] > step_ * (1.0 + 1e-9)) uniform_ = false;
}

ParamAxis::Bracket ParamAxis::bracket(double x) const {
  if (!(x >= lo() && x <= hi()))
    throw std::out_of_range("value " + std::to_string(x) + " outside axis '" + name_ + "' [" +
                            std::to_string(lo()) + ", " + std::to_string(hi()) + "]");
  const std::size_t n = nodes_.size();
  std::size_t k;
  if (uniform_) {
    const double t = (x - nodes_[0]) / step_;
    k = static_cast<std::size_t>(std::max(0.0, std::floor(t)));
    if (k > n - 2) k = n - 2;
    // Guard against rounding at lattice points and the short last interval.
    if (x < nodes_[k] && k > 0) --k;
    if (x > nodes_[k + 1] && k + 2 < n) ++k;
  } else {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    std::size_t pos = static_cast<std::size_t>(it - nodes_.begin());
    k = pos == 0 ? 0 : pos - 1;
    if (k > n - 2) k = n - 2;
  }
  const double a = nodes_[k];
  const double b = nodes_[k + 1];
  double w = (x - a) / (b - a);
  if (x == a) w = 0.0;
  if (x == b) w = 1.0;
  return {k, w};
}

ParamAxis make_uniform_axis(const std::string& name, double lo, double hi, double spacing) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(spacing))
    throw std::invalid_argument("axis '" + name + "': non-finite bounds or spacing");
  if (!(lo < hi)) throw std::invalid_argument("axis '" + name + "': lo must be below hi");
  if (!(spacing > 0.0)) throw std::invalid_argument("axis '" + name + "': spacing must be positive");
  if (spacing >= hi - lo) throw std::invalid_argument("axis '" + name + "': spacing must be below hi - lo");
  const double ratio = (hi - lo) / spacing;
  // Tolerate representation error so that e.g. 49/1e-3 counts 49000 intervals.
  auto intervals = static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12) + 1e-9));
  double step = spacing;
  if (std::abs(ratio - static_cast<double>(intervals)) > 1e-9 * ratio) {
    // Non-commensurate spacing: one extra interval, equally spaced, so no gap exceeds the request.
    ++intervals;
    step = (hi - lo) / static_cast<double>(intervals);
  }
  std::vector<double> nodes(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) nodes[k] = lo + static_cast<double>(k) * step;
  nodes[intervals] = hi;
  return ParamAxis(name, std::move(nodes));
}

AxisPtr make_axis_ptr(ParamAxis axis) { return std::make_shared<const ParamAxis>(std::move(axis)); }

double interp_mode(const ParamAxis& axis, std::span<const double> values, double x) {
  if (values.size() != axis.size())
    throw std::invalid_argument("mode length does not match axis '" + axis.name() + "'");
  const auto br = axis.bracket(x);
  const double a = values[br.left];
  const double b = values[br.left + 1];
  if (br.right_weight == 0.0) return a;
  if (br.right_weight == 1.0) return b;
  return a + br.right_weight * (b - a);
}

double lookup(const ParamPoint& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::invalid_argument("parameter point lacks a value for '" + name + "'");
  return it->second;
}

}  // namespace pgdschwarz
