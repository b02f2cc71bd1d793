#pragma once

#include <Eigen/Dense>

namespace tsmtl {

// sign(x) * max(|x| - tau, 0)
double soft_threshold(double x, double tau);

// Entrywise soft threshold: prox of tau * ||.||_1.
Eigen::MatrixXd l1_prox(const Eigen::MatrixXd& m, double tau);

// max(1 - tau / ||v||_2, 0) * v, with the convention 0 -> 0.
// Prox of tau * ||.||_2.
Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& v, double tau);

// Prox of tau1 * ||.||_1 + tau2 * sum_j ||row_j||_2: entrywise soft
// threshold at tau1, then group soft threshold of each row at tau2.
Eigen::MatrixXd sgl_prox(const Eigen::MatrixXd& m, double tau1, double tau2);

}  // namespace tsmtl
