#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace pgdschwarz {

enum class GmresStatus { Converged, MaxIterations, Stagnated };
std::string to_string(GmresStatus s);

struct GmresSettings {
  double tol = 1e-6;
  int restart = 30;
  int max_iters = 1000;
};

struct GmresResult {
  Eigen::VectorXd x;
  std::vector<double> history;  // relative residual, entry 0 at the initial guess
  int iterations = 0;
  GmresStatus status = GmresStatus::MaxIterations;
};

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Restarted GMRES with modified Gram-Schmidt and Givens rotations; matrix-free.
GmresResult gmres(const LinearMap& apply, const Eigen::VectorXd& b, const GmresSettings& settings,
                  const Eigen::VectorXd* x0 = nullptr);

}  // namespace pgdschwarz
