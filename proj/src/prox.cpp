#include "tsmtl/prox.hpp"

#include <cmath>
#include <stdexcept>

namespace tsmtl {

namespace {

void check_tau(double tau, const char* where) {
  if (tau < 0.0 || !std::isfinite(tau)) {
    throw std::invalid_argument(std::string(where) + ": threshold must be >= 0");
  }
}

}  // namespace

double soft_threshold(double x, double tau) {
  check_tau(tau, "soft_threshold");
  double mag = std::abs(x) - tau;
  if (mag <= 0.0) return 0.0;
  return x < 0.0 ? -mag : mag;
}

Eigen::MatrixXd l1_prox(const Eigen::MatrixXd& m, double tau) {
  check_tau(tau, "l1_prox");
  return m.unaryExpr([tau](double x) { return soft_threshold(x, tau); });
}

Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& v, double tau) {
  check_tau(tau, "group_soft_threshold");
  double norm = v.norm();
  if (norm <= tau) return Eigen::VectorXd::Zero(v.size());
  return (1.0 - tau / norm) * v;
}

Eigen::MatrixXd sgl_prox(const Eigen::MatrixXd& m, double tau1, double tau2) {
  check_tau(tau1, "sgl_prox");
  check_tau(tau2, "sgl_prox");
  // Entrywise shrinkage first, then each feature row as one group; the
  // composition is the exact prox of the combined penalty.
  Eigen::MatrixXd z = l1_prox(m, tau1);
  for (Eigen::Index j = 0; j < z.rows(); ++j) {
    z.row(j) = group_soft_threshold(z.row(j).transpose(), tau2).transpose();
  }
  return z;
}

}  // namespace tsmtl
