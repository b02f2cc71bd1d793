#include "tsmtl/temporal_kernel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace tsmtl {

namespace {

void check_columns(const Eigen::MatrixXd& m, const WeightMatrix& w, const char* name) {
  if (m.cols() != w.tasks()) {
    throw std::invalid_argument(std::string(name) + " has " + std::to_string(m.cols()) +
                                " columns, weight matrix covers " +
                                std::to_string(w.tasks()) + " tasks");
  }
}

}  // namespace

WeightMatrix::WeightMatrix(int tasks, double sigma, Eigen::MatrixXd weights)
    : tasks_(tasks), sigma_(sigma), w_(std::move(weights)) {
  if (tasks_ < 2) throw std::invalid_argument("weight matrix needs at least 2 tasks");
  if (sigma_ <= 0.0) throw std::invalid_argument("bandwidth must be positive");
  if (w_.rows() != tasks_ || w_.cols() != tasks_) {
    throw std::invalid_argument("weight matrix must be tasks x tasks");
  }
  i_minus_w_ = Eigen::MatrixXd::Identity(tasks_, tasks_) - w_;
}

WeightMatrix build_weights(int tasks, double sigma) {
  if (tasks < 2) throw std::invalid_argument("build_weights: need at least 2 tasks");
  if (sigma <= 0.0) throw std::invalid_argument("build_weights: sigma must be positive");

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(tasks, tasks);
  for (int t = 0; t < tasks; ++t) {
    double sum = 0.0;
    for (int l = 0; l < tasks; ++l) {
      if (l == t) continue;
      double d = static_cast<double>(l - t);
      double k = std::exp(-d * d / (sigma * sigma));
      if (k < 1e-300) k = 0.0;  // underflow guard
      w(l, t) = k;
      sum += k;
    }
    if (sum > 0.0) {
      w.col(t) /= sum;
    } else {
      // Bandwidth so small every kernel value underflowed: the limit puts
      // all weight on the nearest neighbours.
      if (t > 0 && t < tasks - 1) {
        w(t - 1, t) = 0.5;
        w(t + 1, t) = 0.5;
      } else {
        w(t == 0 ? 1 : tasks - 2, t) = 1.0;
      }
    }
  }
  return WeightMatrix(tasks, sigma, std::move(w));
}

Eigen::MatrixXd temporal_residual(const Eigen::MatrixXd& theta,
                                  const Eigen::MatrixXd& gamma, const WeightMatrix& w) {
  check_columns(theta, w, "theta");
  if (gamma.rows() != theta.rows() || gamma.cols() != theta.cols()) {
    throw std::invalid_argument("gamma shape differs from theta");
  }
  return theta * w.difference_op() - gamma;
}

Eigen::MatrixXd temporal_adjoint(const Eigen::MatrixXd& m, const WeightMatrix& w) {
  check_columns(m, w, "m");
  return m * w.difference_op().transpose();
}

Eigen::MatrixXd coupling_gradient(const Eigen::MatrixXd& theta,
                                  const Eigen::MatrixXd& gamma, const WeightMatrix& w,
                                  double rho) {
  if (rho <= 0.0) throw std::invalid_argument("coupling_gradient: rho must be positive");
  return rho * temporal_adjoint(temporal_residual(theta, gamma, w), w);
}

double lipschitz_rho1(const WeightMatrix& w, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("lipschitz_rho1: rho must be positive");
  const Eigen::MatrixXd& d = w.difference_op();
  Eigen::MatrixXd gram = d * d.transpose();
  double top = 0.0;
  if (w.tasks() <= 200) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    top = eig.eigenvalues().maxCoeff();
  } else {
    // Power iteration on the symmetric PSD gram matrix; deterministic start.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(w.tasks()).normalized();
    double prev = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Eigen::VectorXd gv = gram * v;
      top = v.dot(gv);
      double norm = gv.norm();
      if (norm == 0.0) { top = 0.0; break; }
      v = gv / norm;
      if (i > 0 && std::abs(top - prev) <= 1e-14 * std::max(1.0, top)) break;
      prev = top;
    }
  }
  // top is sigma_max(I - W)^2; the bound is twice the gradient's Lipschitz
  // constant rho * sigma_max^2.
  return 2.0 * rho * top;
}

}  // namespace tsmtl
