#include "pgdschwarz/pgd_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <random>
#include <stdexcept>

namespace pgdschwarz {

void PgdSettings::validate() const {
  if (!(eps_enrich > 0.0) || !(eps_compress > 0.0) || !(als_tol > 0.0))
    throw std::invalid_argument("PGD tolerances must be positive");
  if (max_modes < 1) throw std::invalid_argument("max_modes must be positive");
  if (als_max_iters < 1) throw std::invalid_argument("als_max_iters must be at least 1");
}

SeparatedVector residual(const SeparatedOperator& k, const SeparatedVector& f, const SeparatedVector& u) {
  return add(f, scale(apply(k, u), -1.0));
}

namespace {

bool is_symmetric(const SpMat& a) {
  SpMat t = a.transpose();
  const double n = a.norm();
  return (a - t).norm() <= 1e-12 * (n > 0.0 ? n : 1.0);
}

}  // namespace

struct PgdSolver::Impl {
  const SeparatedOperator& k;
  const SeparatedVector& f;
  std::size_t d = 0, nl = 0, nr = 0, n = 0;

  // Union sparsity pattern and, per operator term, the slot of each stored entry in it.
  SpMat pattern;
  std::vector<std::vector<Eigen::Index>> slots;
  std::vector<std::vector<double>> values;
  bool symmetric = true;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;

  // Cached K_l V_m for the current approximation.
  std::vector<std::vector<Vec>> kv;
  std::vector<const SeparatedTerm*> prev;

  Impl(const SeparatedOperator& kk, const SeparatedVector& ff) : k(kk), f(ff) {
    if (!k.same_dims(f)) throw std::invalid_argument("operator and right-hand side dimensions differ");
    if (k.num_terms() == 0) throw std::invalid_argument("operator has no terms");
    d = k.num_axes();
    nl = k.num_terms();
    nr = f.num_terms();
    n = k.spatial_size();
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& t : k.terms()) {
      for (int c = 0; c < t.spatial.outerSize(); ++c)
        for (SpMat::InnerIterator it(t.spatial, c); it; ++it) trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), 1.0);
      symmetric = symmetric && is_symmetric(t.spatial);
    }
    pattern.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    pattern.setFromTriplets(trip.begin(), trip.end());
    pattern.makeCompressed();
    for (const auto& t : k.terms()) {
      std::vector<Eigen::Index> s;
      std::vector<double> v;
      s.reserve(static_cast<std::size_t>(t.spatial.nonZeros()));
      for (int c = 0; c < t.spatial.outerSize(); ++c) {
        const auto* begin = pattern.innerIndexPtr() + pattern.outerIndexPtr()[c];
        const auto* end = pattern.innerIndexPtr() + pattern.outerIndexPtr()[c + 1];
        for (SpMat::InnerIterator it(t.spatial, c); it; ++it) {
          const auto* pos = std::lower_bound(begin, end, static_cast<SpMat::StorageIndex>(it.row()));
          s.push_back(pos - pattern.innerIndexPtr());
          v.push_back(it.value());
        }
      }
      slots.push_back(std::move(s));
      values.push_back(std::move(v));
    }
  }

  void cache(const SeparatedTerm& t) {
    std::vector<Vec> row;
    row.reserve(nl);
    for (const auto& op : k.terms()) row.push_back(op.spatial * t.spatial);
    kv.push_back(std::move(row));
  }

  void factor(const std::vector<double>& c) {
    SpMat a = pattern;
    double* val = a.valuePtr();
    std::fill(val, val + a.nonZeros(), 0.0);
    for (std::size_t l = 0; l < nl; ++l) {
      if (c[l] == 0.0) continue;
      const double* src = values[l].data();
      const auto& s = slots[l];
      for (std::size_t e = 0; e < s.size(); ++e) val[s[e]] += c[l] * src[e];
    }
    if (symmetric) {
      if (!analyzed) ldlt.analyzePattern(a);
      ldlt.factorize(a);
      if (ldlt.info() != Eigen::Success) throw std::runtime_error("spatial system singular");
    } else {
      if (!analyzed) lu.analyzePattern(a);
      lu.factorize(a);
      if (lu.info() != Eigen::Success) throw std::runtime_error("spatial system singular");
    }
    analyzed = true;
  }

  Vec solve_spatial(const Vec& r) {
    Vec x = symmetric ? Vec(ldlt.solve(r)) : Vec(lu.solve(r));
    if (!x.allFinite()) throw std::runtime_error("spatial system singular");
    return x;
  }

  EnrichResult enrich(const PgdSettings& s, std::uint64_t seed) {
    const std::size_t nm = prev.size();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    SeparatedTerm t;
    t.modes.resize(d);
    for (std::size_t q = 0; q < d; ++q) {
      t.modes[q].resize(static_cast<Eigen::Index>(k.axis(q).size()));
      for (Eigen::Index i = 0; i < t.modes[q].size(); ++i) t.modes[q](i) = uni(rng);
    }
    t.spatial = Vec::Zero(static_cast<Eigen::Index>(n));

    // a[l][q] = <phi_q, xi_lq phi_q>, b[r][q] = <phi_q, g_rq>, c[m][l][q] = <phi_q, xi_lq phi_mq>
    std::vector<std::vector<double>> a(nl, std::vector<double>(d)), b(nr, std::vector<double>(d));
    std::vector<std::vector<std::vector<double>>> c(nm, std::vector<std::vector<double>>(nl, std::vector<double>(d)));
    auto refresh = [&](std::size_t q) {
      const Vec& phi = t.modes[q];
      for (std::size_t l = 0; l < nl; ++l) {
        const Vec xp = k.term(l).modes[q].cwiseProduct(phi);
        a[l][q] = xp.dot(phi);
        for (std::size_t m = 0; m < nm; ++m) c[m][l][q] = xp.dot(prev[m]->modes[q]);
      }
      for (std::size_t r = 0; r < nr; ++r) b[r][q] = phi.dot(f.term(r).modes[q]);
    };
    for (std::size_t q = 0; q < d; ++q) refresh(q);
    auto prod_except = [&](const std::vector<double>& v, std::size_t skip) {
      double p = 1.0;
      for (std::size_t q = 0; q < d; ++q)
        if (q != skip) p *= v[q];
      return p;
    };

    EnrichResult res;
    SeparatedTerm last;
    std::vector<double> coef(nl);
    for (int it = 1; it <= s.als_max_iters; ++it) {
      res.iterations = it;
      // Spatial update.
      Vec rhs = Vec::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t r = 0; r < nr; ++r) {
        const double w = prod_except(b[r], d);
        if (w != 0.0) rhs.noalias() += w * f.term(r).spatial;
      }
      for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t l = 0; l < nl; ++l) {
          const double w = prod_except(c[m][l], d);
          if (w != 0.0) rhs.noalias() -= w * kv[m][l];
        }
      if (rhs.squaredNorm() == 0.0) {
        t.spatial.setZero();
        normalize(t);
        res.term = t;
        res.converged = true;
        return res;
      }
      for (std::size_t l = 0; l < nl; ++l) coef[l] = prod_except(a[l], d);
      factor(coef);
      t.spatial = solve_spatial(rhs);

      // Parametric updates, one axis at a time.
      std::vector<Vec> kvt(nl);
      std::vector<double> sl(nl), tr(nr);
      for (std::size_t l = 0; l < nl; ++l) {
        kvt[l] = k.term(l).spatial * t.spatial;
        sl[l] = t.spatial.dot(kvt[l]);
      }
      for (std::size_t r = 0; r < nr; ++r) tr[r] = t.spatial.dot(f.term(r).spatial);
      std::vector<std::vector<double>> um(nm, std::vector<double>(nl));
      for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t l = 0; l < nl; ++l) um[m][l] = t.spatial.dot(kv[m][l]);
      for (std::size_t q = 0; q < d; ++q) {
        const auto len = static_cast<Eigen::Index>(k.axis(q).size());
        Vec den = Vec::Zero(len), num = Vec::Zero(len);
        for (std::size_t l = 0; l < nl; ++l) {
          const double w = sl[l] * prod_except(a[l], q);
          if (w != 0.0) den.noalias() += w * k.term(l).modes[q];
        }
        for (std::size_t r = 0; r < nr; ++r) {
          const double w = tr[r] * prod_except(b[r], q);
          if (w != 0.0) num.noalias() += w * f.term(r).modes[q];
        }
        for (std::size_t m = 0; m < nm; ++m)
          for (std::size_t l = 0; l < nl; ++l) {
            const double w = um[m][l] * prod_except(c[m][l], q);
            if (w != 0.0) num.noalias() -= w * k.term(l).modes[q].cwiseProduct(prev[m]->modes[q]);
          }
        for (Eigen::Index i = 0; i < len; ++i)
          if (den(i) == 0.0 || !std::isfinite(den(i)))
            throw std::runtime_error("singular collocation point: axis '" + k.axis(q).name() + "' node " +
                                     std::to_string(i));
        t.modes[q] = num.cwiseQuotient(den);
        refresh(q);
      }
      normalize(t);
      for (std::size_t q = 0; q < d; ++q) refresh(q);
      if (it > 1) {
        const double tt = inner(t, t);
        const double diff2 = tt - 2.0 * inner(t, last) + inner(last, last);
        if (tt == 0.0 || std::sqrt(std::max(0.0, diff2)) <= s.als_tol * std::sqrt(tt)) {
          res.converged = true;
          break;
        }
      }
      last = t;
    }
    res.term = std::move(t);
    return res;
  }
};

PgdSolver::PgdSolver(const SeparatedOperator& k, const SeparatedVector& f, PgdSettings settings)
    : impl_(std::make_unique<Impl>(k, f)), u_(k.spatial_size(), k.axes()), settings_(settings) {
  settings_.validate();
}

PgdSolver::~PgdSolver() = default;

void PgdSolver::set_current(const SeparatedVector& u) {
  if (!u.same_dims(impl_->k)) throw std::invalid_argument("initial approximation has mismatched dimensions");
  u_ = SeparatedVector(u.spatial_size(), u.axes());
  impl_->kv.clear();
  impl_->prev.clear();
  u_.reserve(u.num_terms() + settings_.max_modes);
  for (const auto& t : u.terms()) append(t);
}

void PgdSolver::append(const SeparatedTerm& t) {
  if (u_.num_terms() == u_.terms().capacity()) {
    // Reallocation would invalidate cached term pointers; rebuild them after growing.
    u_.reserve(2 * u_.num_terms() + 16);
    impl_->prev.clear();
    for (const auto& x : u_.terms()) impl_->prev.push_back(&x);
  }
  u_.push_back(t);
  impl_->prev.push_back(&u_.terms().back());
  impl_->cache(u_.terms().back());
}

EnrichResult PgdSolver::enrich(std::uint64_t seed) { return impl_->enrich(settings_, seed); }

PgdResult PgdSolver::solve() {
  PgdResult res;
  double first = 0.0;
  const std::size_t start = u_.num_terms();
  bool converged = false;
  for (std::size_t mode = 0; mode < settings_.max_modes; ++mode) {
    auto e = enrich(mix_seed({settings_.seed, start + mode}));
    if (!e.converged) ++res.als_unconverged;
    const double amp = amplitude(e.term);
    if (amp == 0.0) {
      converged = true;
      break;
    }
    if (first == 0.0) first = amp;
    append(e.term);
    res.relative_amplitudes.push_back(amp / first);
    if (amp / first < settings_.eps_enrich) {
      converged = true;
      break;
    }
  }
  res.reached_max_modes = !converged;
  res.modes_before_compression = u_.num_terms();
  if (settings_.compress && u_.num_terms() > 1) {
    CompressSettings cs;
    cs.eps = settings_.eps_compress;
    cs.seed = mix_seed({settings_.seed, 0xc0ffeeULL});
    res.solution = compress(u_, cs, &res.compression);
  } else {
    res.solution = u_;
    res.compression.terms_in = res.compression.terms_out = u_.num_terms();
    res.compression.kept_input = true;
  }
  return res;
}

EnrichResult enrich_once(const SeparatedOperator& k, const SeparatedVector& f, const SeparatedVector& u_prev,
                         const PgdSettings& settings, std::uint64_t seed) {
  PgdSolver s(k, f, settings);
  s.set_current(u_prev);
  return s.enrich(seed);
}

PgdResult solve(const SeparatedOperator& k, const SeparatedVector& f, const PgdSettings& settings) {
  PgdSolver s(k, f, settings);
  return s.solve();
}

}  // namespace pgdschwarz
