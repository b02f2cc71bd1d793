#pragma once

#include <Eigen/Dense>

namespace tsmtl {

// Gaussian kernel weights over a chain of tasks. Entry (l, t) is the weight
// of column l in the local approximation of column t:
//
//   w(l,t) = exp(-(l-t)^2 / sigma^2) / sum_{l' != t} exp(-(l'-t)^2 / sigma^2)
//
// The diagonal is zero and every column sums to one. Immutable after
// construction; safe to share across threads.
class WeightMatrix {
 public:
  WeightMatrix(int tasks, double sigma, Eigen::MatrixXd weights);

  int tasks() const { return tasks_; }
  double bandwidth() const { return sigma_; }
  const Eigen::MatrixXd& weights() const { return w_; }

  // I - W, the linear map behind the smoothness residual. Cached because
  // every solver update applies it.
  const Eigen::MatrixXd& difference_op() const { return i_minus_w_; }

 private:
  int tasks_;
  double sigma_;
  Eigen::MatrixXd w_;
  Eigen::MatrixXd i_minus_w_;
};

WeightMatrix build_weights(int tasks, double sigma);

// Theta * (I - W) - Gamma. Column t is theta_t - sum_{l != t} w(l,t) theta_l - gamma_t.
Eigen::MatrixXd temporal_residual(const Eigen::MatrixXd& theta,
                                  const Eigen::MatrixXd& gamma,
                                  const WeightMatrix& w);

// M * (I - W)^T, the adjoint of the linear part of temporal_residual:
// <Theta (I - W), M> == <Theta, temporal_adjoint(M)> for all Theta.
Eigen::MatrixXd temporal_adjoint(const Eigen::MatrixXd& m, const WeightMatrix& w);

// Gradient of h(Theta) = (rho/2) ||Theta (I - W) - Gamma||_F^2,
// i.e. rho * (Theta (I - W) - Gamma) (I - W)^T.
Eigen::MatrixXd coupling_gradient(const Eigen::MatrixXd& theta,
                                  const Eigen::MatrixXd& gamma,
                                  const WeightMatrix& w, double rho);

// 2 * rho * sigma_max(I - W)^2. The coupling gradient is Lipschitz with
// constant nu = rho * sigma_max(I - W)^2, so this is the 2*nu bound used as
// the default linearization weight.
double lipschitz_rho1(const WeightMatrix& w, double rho);

}  // namespace tsmtl
