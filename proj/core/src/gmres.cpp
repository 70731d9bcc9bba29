#include "pgdschwarz/gmres.hpp"

#include <cmath>
#include <stdexcept>

namespace pgdschwarz {

std::string to_string(GmresStatus s) {
  switch (s) {
    case GmresStatus::Converged: return "converged";
    case GmresStatus::MaxIterations: return "max_iterations";
    case GmresStatus::Stagnated: return "stagnated";
  }
  return "unknown";
}

GmresResult gmres(const LinearMap& apply, const Eigen::VectorXd& b, const GmresSettings& settings,
                  const Eigen::VectorXd* x0) {
  using Eigen::VectorXd;
  if (!(settings.tol > 0.0)) throw std::invalid_argument("gmres tolerance must be positive");
  if (settings.restart < 1) throw std::invalid_argument("gmres restart must be at least 1");
  if (settings.max_iters < 0) throw std::invalid_argument("gmres max_iters must be non-negative");
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = x0 ? *x0 : VectorXd::Zero(n);
  if (res.x.size() != n) throw std::invalid_argument("gmres initial guess has the wrong size");
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x.setZero();
    res.history.push_back(0.0);
    res.status = GmresStatus::Converged;
    return res;
  }
  VectorXd r = b - apply(res.x);
  double rel = r.norm() / bnorm;
  res.history.push_back(rel);
  if (rel <= settings.tol) {
    res.status = GmresStatus::Converged;
    return res;
  }
  const int m = settings.restart;
  Eigen::MatrixXd v(n, m + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  VectorXd cs(m), sn(m), g(m + 1);
  while (res.iterations < settings.max_iters) {
    const double beta = r.norm();
    const double cycle_start = rel;
    v.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    h.setZero();
    int k = 0;
    int pushed = 0;
    bool done = false;
    for (; k < m && res.iterations < settings.max_iters; ++k) {
      VectorXd w = apply(v.col(k));
      for (int i = 0; i <= k; ++i) {
        h(i, k) = v.col(i).dot(w);
        w -= h(i, k) * v.col(i);
      }
      h(k + 1, k) = w.norm();
      for (int i = 0; i < k; ++i) {
        const double t = cs(i) * h(i, k) + sn(i) * h(i + 1, k);
        h(i + 1, k) = -sn(i) * h(i, k) + cs(i) * h(i + 1, k);
        h(i, k) = t;
      }
      const double den = std::hypot(h(k, k), h(k + 1, k));
      cs(k) = den == 0.0 ? 1.0 : h(k, k) / den;
      sn(k) = den == 0.0 ? 0.0 : h(k + 1, k) / den;
      h(k, k) = den;
      h(k + 1, k) = 0.0;
      g(k + 1) = -sn(k) * g(k);
      g(k) = cs(k) * g(k);
      ++res.iterations;
      const double est = std::abs(g(k + 1)) / bnorm;
      if (den == 0.0) {
        --res.iterations;
        break;
      }
      const double wn = w.norm();
      if (wn > 0.0) v.col(k + 1) = w / wn;
      if (est <= settings.tol || wn == 0.0) {
        ++k;
        done = true;
        break;
      }
      res.history.push_back(est);
      ++pushed;
    }
    if (k > 0) {
      VectorXd y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
      res.x += v.leftCols(k) * y;
    }
    r = b - apply(res.x);
    rel = r.norm() / bnorm;
    if (done || pushed == 0) res.history.push_back(rel);
    else res.history.back() = rel;
    if (rel <= settings.tol) {
      res.status = GmresStatus::Converged;
      return res;
    }
    if (!(rel < cycle_start)) {
      res.status = GmresStatus::Stagnated;
      return res;
    }
  }
  res.status = GmresStatus::MaxIterations;
  return res;
}

}  // namespace pgdschwarz
