#include "pgdschwarz/separated_tensor.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pgdschwarz {

SeparatedDims::SeparatedDims(std::size_t spatial_size, std::vector<AxisPtr> axes)
    : spatial_size_(spatial_size), axes_(std::move(axes)) {
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    if (!axes_[k]) throw std::invalid_argument("null parametric axis");
    for (std::size_t j = 0; j < k; ++j)
      if (axes_[j]->name() == axes_[k]->name()) throw std::invalid_argument("duplicate axis '" + axes_[k]->name() + "'");
  }
}

std::optional<std::size_t> SeparatedDims::axis_index(const std::string& name) const {
  for (std::size_t k = 0; k < axes_.size(); ++k)
    if (axes_[k]->name() == name) return k;
  return std::nullopt;
}

std::vector<std::string> SeparatedDims::axis_names() const {
  std::vector<std::string> out;
  for (const auto& a : axes_) out.push_back(a->name());
  return out;
}

bool SeparatedDims::same_dims(const SeparatedDims& other) const {
  if (spatial_size_ != other.spatial_size_ || axes_.size() != other.axes_.size()) return false;
  for (std::size_t k = 0; k < axes_.size(); ++k)
    if (axes_[k]->name() != other.axes_[k]->name() || axes_[k]->size() != other.axes_[k]->size()) return false;
  return true;
}

void SeparatedDims::check_modes(const std::vector<Vec>& modes) const {
  if (modes.size() != axes_.size()) throw std::invalid_argument("term has the wrong number of parametric sections");
  for (std::size_t k = 0; k < modes.size(); ++k)
    if (static_cast<std::size_t>(modes[k].size()) != axes_[k]->size())
      throw std::invalid_argument("section length does not match axis '" + axes_[k]->name() + "'");
}

void SeparatedVector::push_back(SeparatedTerm t) {
  if (static_cast<std::size_t>(t.spatial.size()) != spatial_size_)
    throw std::invalid_argument("spatial section length mismatch");
  check_modes(t.modes);
  terms_.push_back(std::move(t));
}

void SeparatedOperator::push_back(OperatorTerm t) {
  if (static_cast<std::size_t>(t.spatial.rows()) != spatial_size_ ||
      static_cast<std::size_t>(t.spatial.cols()) != spatial_size_)
    throw std::invalid_argument("operator spatial section must be square of the spatial size");
  check_modes(t.modes);
  terms_.push_back(std::move(t));
}

std::vector<double> term_weights(const SeparatedVector& v, const ParamPoint& p) {
  const std::size_t d = v.num_axes();
  std::vector<ParamAxis::Bracket> br(d);
  for (std::size_t k = 0; k < d; ++k) br[k] = v.axis(k).bracket(lookup(p, v.axis(k).name()));
  std::vector<double> w(v.num_terms(), 1.0);
  for (std::size_t m = 0; m < v.num_terms(); ++m) {
    double prod = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      const Vec& mode = v.term(m).modes[k];
      const auto i = static_cast<Eigen::Index>(br[k].left);
      const double a = mode(i);
      const double t = br[k].right_weight;
      prod *= t == 0.0 ? a : (t == 1.0 ? mode(i + 1) : a + t * (mode(i + 1) - a));
    }
    w[m] = prod;
  }
  return w;
}

Vec evaluate(const SeparatedVector& v, const ParamPoint& p) {
  const auto w = term_weights(v, p);
  Vec out = Vec::Zero(static_cast<Eigen::Index>(v.spatial_size()));
  for (std::size_t m = 0; m < v.num_terms(); ++m)
    if (w[m] != 0.0) out.noalias() += w[m] * v.term(m).spatial;
  return out;
}

Vec evaluate_rows(const SeparatedVector& v, const ParamPoint& p, const std::vector<std::size_t>& rows) {
  const auto w = term_weights(v, p);
  Vec out = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t m = 0; m < v.num_terms(); ++m) {
    if (w[m] == 0.0) continue;
    const Vec& s = v.term(m).spatial;
    for (std::size_t r = 0; r < rows.size(); ++r)
      out(static_cast<Eigen::Index>(r)) += w[m] * s(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

Vec evaluate_at_nodes(const SeparatedVector& v, const std::vector<std::size_t>& node_index) {
  if (node_index.size() != v.num_axes()) throw std::invalid_argument("one node index per axis required");
  Vec out = Vec::Zero(static_cast<Eigen::Index>(v.spatial_size()));
  for (const auto& t : v.terms()) {
    double w = 1.0;
    for (std::size_t k = 0; k < node_index.size(); ++k) w *= t.modes[k](static_cast<Eigen::Index>(node_index[k]));
    if (w != 0.0) out.noalias() += w * t.spatial;
  }
  return out;
}

SeparatedVector apply(const SeparatedOperator& op, const SeparatedVector& v) {
  if (!op.same_dims(v)) throw std::invalid_argument("operator and vector dimensions differ");
  SeparatedVector out(v.spatial_size(), v.axes());
  out.reserve(op.num_terms() * v.num_terms());
  for (const auto& k : op.terms())
    for (const auto& t : v.terms()) {
      SeparatedTerm r;
      r.spatial = k.spatial * t.spatial;
      r.modes.resize(t.modes.size());
      for (std::size_t d = 0; d < t.modes.size(); ++d) r.modes[d] = k.modes[d].cwiseProduct(t.modes[d]);
      out.push_back(std::move(r));
    }
  return out;
}

SeparatedVector add(const SeparatedVector& a, const SeparatedVector& b) {
  if (!a.same_dims(b)) throw std::invalid_argument("cannot add separated vectors with different dimensions");
  SeparatedVector out = a;
  for (const auto& t : b.terms()) out.push_back(t);
  return out;
}

SeparatedVector scale(const SeparatedVector& a, double c) {
  SeparatedVector out(a.spatial_size(), a.axes());
  for (auto t : a.terms()) {
    t.spatial *= c;
    out.push_back(std::move(t));
  }
  return out;
}

SeparatedVector append_term(const SeparatedVector& a, SeparatedTerm t) {
  SeparatedVector out = a;
  out.push_back(std::move(t));
  return out;
}

SeparatedVector extend_dims(const SeparatedVector& v, const std::vector<AxisPtr>& axes) {
  std::vector<long> src(axes.size(), -1);
  std::size_t matched = 0;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (auto i = v.axis_index(axes[k]->name())) {
      if (v.axis(*i).size() != axes[k]->size())
        throw std::invalid_argument("axis '" + axes[k]->name() + "' changes its node count");
      src[k] = static_cast<long>(*i);
      ++matched;
    }
  }
  if (matched != v.num_axes()) throw std::invalid_argument("extension must keep every existing axis");
  SeparatedVector out(v.spatial_size(), axes);
  out.reserve(v.num_terms());
  for (const auto& t : v.terms()) {
    SeparatedTerm r;
    r.spatial = t.spatial;
    for (std::size_t k = 0; k < axes.size(); ++k)
      r.modes.push_back(src[k] >= 0 ? t.modes[static_cast<std::size_t>(src[k])]
                                    : Vec::Ones(static_cast<Eigen::Index>(axes[k]->size())));
    out.push_back(std::move(r));
  }
  return out;
}

double amplitude(const SeparatedTerm& t) {
  double a = t.spatial.norm();
  for (const auto& m : t.modes) a *= m.norm();
  return a;
}

double inner(const SeparatedTerm& a, const SeparatedTerm& b) {
  double s = a.spatial.dot(b.spatial);
  for (std::size_t k = 0; k < a.modes.size() && s != 0.0; ++k) s *= a.modes[k].dot(b.modes[k]);
  return s;
}

double inner(const SeparatedVector& a, const SeparatedVector& b) {
  if (!a.same_dims(b)) throw std::invalid_argument("inner product of mismatched separated vectors");
  double s = 0.0;
  for (const auto& x : a.terms())
    for (const auto& y : b.terms()) s += inner(x, y);
  return s;
}

double norm(const SeparatedVector& v) { return std::sqrt(std::max(0.0, inner(v, v))); }

void normalize(SeparatedTerm& t) {
  double mag = 1.0;
  for (auto& m : t.modes) {
    const double n = m.norm();
    if (n == 0.0 || !std::isfinite(n)) {
      t.spatial.setZero();
      for (auto& z : t.modes) {
        const auto len = z.size();
        z = Vec::Constant(len, 1.0 / std::sqrt(static_cast<double>(len)));
      }
      return;
    }
    Eigen::Index imax = 0;
    m.cwiseAbs().maxCoeff(&imax);
    const double sign = m(imax) < 0.0 ? -1.0 : 1.0;
    m *= sign / n;
    mag *= sign * n;
  }
  t.spatial *= mag;
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto p : parts) {
    std::uint64_t z = h ^ (p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    h = z ^ (z >> 31);
  }
  return h;
}

namespace {

// Best rank-one least-squares fit to the signed sum of `targets` by alternating updates.
SeparatedTerm fit_rank_one(const std::vector<const SeparatedTerm*>& targets, const std::vector<double>& signs,
                           const SeparatedDims& dims, const CompressSettings& s, std::uint64_t seed) {
  const std::size_t d = dims.num_axes();
  const std::size_t nt = targets.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  SeparatedTerm t;
  t.modes.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    t.modes[k].resize(static_cast<Eigen::Index>(dims.axis(k).size()));
    for (Eigen::Index i = 0; i < t.modes[k].size(); ++i) t.modes[k](i) = uni(rng);
  }
  // dots[k][s] = <mode_k, target_s mode_k>
  std::vector<std::vector<double>> dots(d, std::vector<double>(nt));
  std::vector<double> sq(d);
  auto refresh = [&](std::size_t k) {
    for (std::size_t j = 0; j < nt; ++j) dots[k][j] = t.modes[k].dot(targets[j]->modes[k]);
    sq[k] = t.modes[k].squaredNorm();
  };
  for (std::size_t k = 0; k < d; ++k) refresh(k);
  SeparatedTerm prev;
  for (int it = 0; it < s.als_max_iters; ++it) {
    double den = 1.0;
    for (std::size_t k = 0; k < d; ++k) den *= sq[k];
    t.spatial = Vec::Zero(static_cast<Eigen::Index>(dims.spatial_size()));
    for (std::size_t j = 0; j < nt; ++j) {
      double c = signs[j];
      for (std::size_t k = 0; k < d; ++k) c *= dots[k][j];
      if (c != 0.0) t.spatial.noalias() += c * targets[j]->spatial;
    }
    if (den == 0.0) break;
    t.spatial /= den;
    const double vv = t.spatial.squaredNorm();
    if (vv == 0.0) break;
    std::vector<double> vdot(nt);
    for (std::size_t j = 0; j < nt; ++j) vdot[j] = signs[j] * t.spatial.dot(targets[j]->spatial);
    for (std::size_t k = 0; k < d; ++k) {
      double dd = vv;
      for (std::size_t k2 = 0; k2 < d; ++k2)
        if (k2 != k) dd *= sq[k2];
      Vec num = Vec::Zero(t.modes[k].size());
      for (std::size_t j = 0; j < nt; ++j) {
        double c = vdot[j];
        for (std::size_t k2 = 0; k2 < d; ++k2)
          if (k2 != k) c *= dots[k2][j];
        if (c != 0.0) num.noalias() += c * targets[j]->modes[k];
      }
      if (dd == 0.0) break;
      t.modes[k] = num / dd;
      refresh(k);
    }
    normalize(t);
    for (std::size_t k = 0; k < d; ++k) refresh(k);
    if (it > 0) {
      const double nrm = std::sqrt(std::max(0.0, inner(t, t)));
      const double diff2 = inner(t, t) - 2.0 * inner(t, prev) + inner(prev, prev);
      if (nrm == 0.0 || std::sqrt(std::max(0.0, diff2)) <= s.als_tol * nrm) break;
    }
    prev = t;
  }
  normalize(t);
  return t;
}

}  // namespace

SeparatedVector compress(const SeparatedVector& v, double eps_star, CompressReport* report) {
  CompressSettings s;
  s.eps = eps_star;
  return compress(v, s, report);
}

SeparatedVector compress(const SeparatedVector& v, const CompressSettings& s, CompressReport* report) {
  if (!(s.eps > 0.0)) throw std::invalid_argument("compression tolerance must be positive");
  CompressReport rep;
  rep.terms_in = v.num_terms();
  const double vv = inner(v, v);
  SeparatedVector w(v.spatial_size(), v.axes());
  if (v.num_terms() <= 1 || vv == 0.0) {
    rep.terms_out = v.num_terms();
    rep.kept_input = true;
    if (report) *report = rep;
    return v;
  }
  std::vector<const SeparatedTerm*> targets;
  std::vector<double> signs;
  for (const auto& t : v.terms()) {
    targets.push_back(&t);
    signs.push_back(1.0);
  }
  // Terms of w are stored separately so target pointers into it stay valid.
  std::vector<SeparatedTerm> found;
  found.reserve(v.num_terms());
  double vw = 0.0, ww = 0.0, first_amp = 0.0;
  double mismatch = 1.0;
  bool done = false;
  while (found.size() + 1 < v.num_terms()) {
    std::vector<const SeparatedTerm*> tg = targets;
    std::vector<double> sg = signs;
    for (const auto& f : found) {
      tg.push_back(&f);
      sg.push_back(-1.0);
    }
    SeparatedTerm t = fit_rank_one(tg, sg, v, s, mix_seed({s.seed, found.size()}));
    const double amp = amplitude(t);
    if (amp == 0.0) break;
    if (found.empty()) first_amp = amp;
    double vt = 0.0, wt = 0.0;
    for (const auto& x : v.terms()) vt += inner(x, t);
    for (const auto& x : found) wt += inner(x, t);
    vw += vt;
    ww += 2.0 * wt + inner(t, t);
    found.push_back(std::move(t));
    mismatch = std::sqrt(std::max(0.0, vv - 2.0 * vw + ww) / vv);
    if (amp / first_amp < s.eps && mismatch <= s.eps) {
      done = true;
      break;
    }
  }
  if (!done && mismatch > s.eps) {
    rep.terms_out = v.num_terms();
    rep.kept_input = true;
    if (report) *report = rep;
    return v;
  }
  for (auto& f : found) w.push_back(std::move(f));
  rep.terms_out = w.num_terms();
  rep.relative_mismatch = mismatch;
  if (report) *report = rep;
  return w;
}

}  // namespace pgdschwarz
