#include "pgdschwarz/schwarz_online.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pgdschwarz {

SurrogateEvaluator::SurrogateEvaluator(std::shared_ptr<const SurrogateModel> model, ParamPoint mu)
    : model_(std::move(model)), mu_(std::move(mu)) {
  const std::size_t n = model_->interface_nodes.size();
  lo_.assign(n, -std::numeric_limits<double>::infinity());
  hi_.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < model_->active.sets.size(); ++j)
    for (std::size_t a = 0; a < model_->active.sets[j].size(); ++a) {
      const auto q = model_->active.sets[j][a];
      lo_.at(q) = model_->active.axes[j][a]->lo();
      hi_.at(q) = model_->active.axes[j][a]->hi();
    }
  for (const auto& ax : model_->mu_axes) {
    const double v = lookup(mu_, ax->name());
    if (!ax->contains(v))
      throw std::out_of_range(model_->name + ": parameter '" + ax->name() + "' = " + std::to_string(v) +
                              " outside its axis");
  }
}

Vec SurrogateEvaluator::clamp(const Vec& lambda) const {
  Vec out = lambda;
  std::size_t events = 0;
  for (Eigen::Index q = 0; q < out.size(); ++q) {
    const auto k = static_cast<std::size_t>(q);
    if (out(q) < lo_[k] || out(q) > hi_[k]) {
      out(q) = std::clamp(out(q), lo_[k], hi_[k]);
      ++events;
    }
  }
  if (events > 0) {
    clamps_ += events;
    spdlog::debug("{}: {} interface values clamped to the Lambda bounds", model_->name, events);
  }
  return out;
}

Vec SurrogateEvaluator::evaluate(const Vec& lambda, bool with_source) const {
  return evaluate_model(*model_, mu_, clamp(lambda), with_source);
}

Vec SurrogateEvaluator::evaluate_rows(const Vec& lambda, const std::vector<std::size_t>& rows,
                                      bool with_source) const {
  return evaluate_model_rows(*model_, mu_, clamp(lambda), rows, with_source);
}

InterfaceSystem::InterfaceSystem(const MultiDomainProblem& problem, const GlobalMesh& mesh,
                                 const std::vector<const fem::DofPartition*>& partitions,
                                 std::vector<std::shared_ptr<const LocalEvaluator>> evaluators)
    : mesh_(&mesh), evaluators_(std::move(evaluators)) {
  const std::size_t np = problem.placements.size();
  if (evaluators_.size() != np) throw std::invalid_argument("one local evaluator per placement required");
  if (partitions.size() != problem.references.size())
    throw std::invalid_argument("one partition per reference subdomain required");
  if (mesh.placed_nodes.size() != np) throw std::invalid_argument("global mesh does not match the placements");
  double diam = 1.0;
  for (const auto& r : problem.references) diam = std::max(diam, r->mesh.diameter());
  const double tol = 1e-10 * diam;

  std::vector<std::vector<bool>> free_mask(np);
  for (std::size_t p = 0; p < np; ++p) {
    const auto& part = *partitions[problem.placements[p].reference];
    free_mask[p].resize(part.role.size());
    for (std::size_t i = 0; i < part.role.size(); ++i) free_mask[p][i] = part.role[i] == fem::DofPartition::Interior;
    if (evaluators_[p]->num_interface_dofs() != part.num_interface_dofs())
      throw std::invalid_argument("placement '" + problem.placements[p].name + "': evaluator interface size mismatch");
  }

  fixed_.resize(np);
  for (std::size_t p = 0; p < np; ++p) {
    const auto& pl = problem.placements[p];
    const auto& part = *partitions[pl.reference];
    fixed_[p] = Vec::Zero(static_cast<Eigen::Index>(part.num_interface_dofs()));
    for (const auto& [name, value] : pl.fixed_interfaces) {
      const auto& names = part.interface_names;
      if (std::find(names.begin(), names.end(), name) == names.end())
        throw std::invalid_argument("placement '" + pl.name + "' fixes unknown interface '" + name + "'");
    }
    std::size_t pos = 0;
    for (std::size_t k = 0; k < part.interface_names.size(); ++k) {
      const auto& dofs = part.interfaces[k];
      const auto& name = part.interface_names[k];
      auto fixed = pl.fixed_interfaces.find(name);
      if (fixed != pl.fixed_interfaces.end()) {
        fixed_[p].segment(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(dofs.size())).setConstant(fixed->second);
      } else if (!dofs.empty()) {
        InterfaceBlock b;
        b.receiver = p;
        b.interface = name;
        b.offset = dimension_;
        b.size = dofs.size();
        for (std::size_t a = 0; a < dofs.size(); ++a) b.receiver_positions.push_back(pos + a);
        std::vector<fem::Point> targets;
        for (auto n : dofs) targets.push_back(mesh.placed_nodes[p][n]);
        bool found = false;
        for (std::size_t d = 0; d < np && !found; ++d) {
          if (d == p) continue;
          try {
            b.donor_rows = fem::restriction(mesh.placed_nodes[d], free_mask[d], targets, tol);
            b.donor = d;
            found = true;
          } catch (const std::runtime_error&) {
          }
        }
        if (!found)
          throw std::runtime_error("interface '" + name + "' of placement '" + pl.name +
                                   "' lies in the interior of no other subdomain");
        dimension_ += b.size;
        blocks_.push_back(std::move(b));
      }
      pos += dofs.size();
    }
  }
  donor_rows_.resize(np);
  donor_map_.resize(np);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& b = blocks_[k];
    donor_map_[b.donor].push_back({k, donor_rows_[b.donor].size()});
    donor_rows_[b.donor].insert(donor_rows_[b.donor].end(), b.donor_rows.begin(), b.donor_rows.end());
  }
}

Vec InterfaceSystem::local_lambda(std::size_t p, const Vec& lambda, bool with_fixed) const {
  if (static_cast<std::size_t>(lambda.size()) != dimension_)
    throw std::invalid_argument("interface vector has the wrong length");
  Vec out = with_fixed ? fixed_[p] : Vec::Zero(fixed_[p].size());
  for (const auto& b : blocks_) {
    if (b.receiver != p) continue;
    for (std::size_t a = 0; a < b.size; ++a)
      out(static_cast<Eigen::Index>(b.receiver_positions[a])) = lambda(static_cast<Eigen::Index>(b.offset + a));
  }
  return out;
}

Vec InterfaceSystem::apply(const Vec& lambda) const {
  Vec out = lambda;
  for (std::size_t d = 0; d < evaluators_.size(); ++d) {
    if (donor_map_[d].empty()) continue;
    const Vec vals = evaluators_[d]->evaluate_rows(local_lambda(d, lambda, false), donor_rows_[d], false);
    for (const auto& [k, start] : donor_map_[d]) {
      const auto& b = blocks_[k];
      out.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size)) -=
          vals.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(b.size));
    }
  }
  return out;
}

Vec InterfaceSystem::rhs() const {
  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(dimension_));
  Vec out = zero;
  for (std::size_t d = 0; d < evaluators_.size(); ++d) {
    if (donor_map_[d].empty()) continue;
    const Vec vals = evaluators_[d]->evaluate_rows(local_lambda(d, zero, true), donor_rows_[d], true);
    for (const auto& [k, start] : donor_map_[d]) {
      const auto& b = blocks_[k];
      out.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size)) =
          vals.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(b.size));
    }
  }
  return out;
}

Vec InterfaceSystem::block_update(std::size_t k, const Vec& lambda) const {
  const auto& b = blocks_.at(k);
  return evaluators_[b.donor]->evaluate_rows(local_lambda(b.donor, lambda, true), b.donor_rows, true);
}

std::vector<Vec> InterfaceSystem::local_solutions(const Vec& lambda) const {
  std::vector<Vec> out;
  for (std::size_t p = 0; p < evaluators_.size(); ++p)
    out.push_back(evaluators_[p]->evaluate(local_lambda(p, lambda, true), true));
  return out;
}

Vec InterfaceSystem::glue(const Vec& lambda, double* mismatch) const {
  const auto locals = local_solutions(lambda);
  const std::size_t n = mesh_->nodes.size();
  Vec field = Vec::Zero(static_cast<Eigen::Index>(n));
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  std::vector<bool> set(n, false);
  for (std::size_t p = 0; p < locals.size(); ++p) {
    const auto& l2g = mesh_->local_to_global[p];
    for (std::size_t i = 0; i < l2g.size(); ++i) {
      const auto g = l2g[i];
      const double v = locals[p](static_cast<Eigen::Index>(i));
      if (!set[g]) {
        field(static_cast<Eigen::Index>(g)) = v;
        set[g] = true;
      }
      lo[g] = std::min(lo[g], v);
      hi[g] = std::max(hi[g], v);
    }
  }
  if (mismatch) {
    double m = 0.0;
    for (std::size_t g = 0; g < n; ++g) m = std::max(m, hi[g] - lo[g]);
    *mismatch = m;
  }
  return field;
}

std::size_t InterfaceSystem::clamp_events() const {
  std::size_t n = 0;
  for (const auto& e : evaluators_) n += e->clamp_events();
  return n;
}

void InterfaceSystem::reset_clamp_events() const {
  for (const auto& e : evaluators_) e->reset_clamp_events();
}

SchwarzResult schwarz_iterate(const InterfaceSystem& sys, const Vec& lambda0, double tol, int max_k) {
  if (static_cast<std::size_t>(lambda0.size()) != sys.dimension())
    throw std::invalid_argument("initial interface vector has the wrong length");
  SchwarzResult res;
  res.lambda = lambda0;
  do {
    double change = 0.0;
    for (std::size_t k = 0; k < sys.blocks().size(); ++k) {
      const auto& b = sys.blocks()[k];
      const Vec next = sys.block_update(k, res.lambda);
      auto seg = res.lambda.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size));
      if (b.size > 0) change = std::max(change, (next - seg).cwiseAbs().maxCoeff());
      seg = next;
    }
    ++res.sweeps;
    res.discrepancy.push_back(change);
    if (change < tol) res.converged = true;
  } while (!res.converged && res.sweeps < max_k);
  return res;
}

InterfaceSolve solve_interface(const InterfaceSystem& sys, const GmresSettings& settings) {
  InterfaceSolve out;
  sys.reset_clamp_events();
  const Vec b = sys.rhs();
  out.gmres = gmres([&](const Vec& x) { return sys.apply(x); }, b, settings);
  out.lambda = out.gmres.x;
  out.clamp_events = sys.clamp_events();
  sys.reset_clamp_events();
  out.field = sys.glue(out.lambda, &out.mismatch);
  out.clamp_events_at_solution = sys.clamp_events();
  if (out.clamp_events > 0)
    spdlog::warn("{} interface values left the Lambda bounds during the Krylov iteration", out.clamp_events);
  return out;
}

}  // namespace pgdschwarz
