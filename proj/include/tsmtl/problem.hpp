#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsmtl/temporal_kernel.hpp"

namespace tsmtl {

// One task: n_t observations of p features plus targets.
struct TaskData {
  Eigen::MatrixXd x;  // n_t x p
  Eigen::VectorXd y;  // n_t
};

// An ordered collection of tasks sharing a feature dimension. Validates
// shape agreement and finiteness on construction.
class ProblemData {
 public:
  explicit ProblemData(std::vector<TaskData> tasks);

  int num_tasks() const { return static_cast<int>(tasks_.size()); }
  int num_features() const { return num_features_; }
  const TaskData& task(int t) const { return tasks_.at(t); }
  const std::vector<TaskData>& tasks() const { return tasks_; }
  int total_observations() const;

 private:
  std::vector<TaskData> tasks_;
  int num_features_;
};

// How the multi-block theta update couples to the smoothness multiplier U:
// Paper uses the bare column u_t, Exact uses column t of U (I - W)^T, the
// true gradient of the Lagrangian's linear term. The iterates differ
// whenever U (I - W)^T != U, and so can the limits: Exact settles on
// stationary points of the objective, while Paper satisfies the same
// conditions with the bare multiplier standing in for its adjoint image.
// With the temporal penalty off (lambda3 = 0) the limits agree.
enum class DualCoupling { Paper, Exact };

enum class Variant { TwoBlock, MultiBlock };

std::string to_string(Variant v);
std::string to_string(DualCoupling c);
Variant variant_from_string(const std::string& s);
DualCoupling dual_coupling_from_string(const std::string& s);

struct Hyperparams {
  double lambda1 = 0.1;  // entrywise l1 on Theta
  double lambda2 = 0.1;  // row-wise group lasso on Theta
  double lambda3 = 0.1;  // l1 on the smoothness residual
  double sigma = 1.0;    // kernel bandwidth
  double rho = 1.0;      // augmented Lagrangian penalty
  // Linearization weight for the coupling term. Unset means auto:
  // 2 * rho * sigma_max(I - W)^2.
  std::optional<double> rho1;
  DualCoupling dual_coupling = DualCoupling::Paper;
  int max_iters = 1000;
  int eval_every = 1;

  // Throws std::invalid_argument on non-positive rho/sigma, negative
  // lambdas, rho1 <= 0, max_iters < 1, or eval_every < 1.
  void validate() const;

  // rho1 if set, otherwise lipschitz_rho1(w, rho).
  double resolved_rho1(const WeightMatrix& w) const;
};

// All primal and dual iterates of either solver. Matrices are p x T.
struct SolverState {
  Eigen::MatrixXd theta;  // regression coefficients
  Eigen::MatrixXd gamma;  // smoothness residual split
  Eigen::MatrixXd q;      // copy of theta carrying the regularizer
  Eigen::MatrixXd pi;     // copy of gamma carrying the l1 penalty
  Eigen::MatrixXd s;      // multiplier for Theta = Q
  Eigen::MatrixXd u;      // multiplier for B (I - W) = Gamma
  Eigen::MatrixXd v;      // multiplier for Gamma = Pi
  int iter = 0;

  static SolverState zeros(int num_features, int num_tasks);
  bool all_finite() const;
};

// (1/2) sum_t ||y_t - X_t theta_t||^2 + lambda1 ||Theta||_1
// + lambda2 sum_j ||row_j(Theta)||_2 + lambda3 ||Theta (I - W)||_1
double evaluate_objective(const Eigen::MatrixXd& theta, const ProblemData& data,
                          const Hyperparams& hyper, const WeightMatrix& w);

// Squared Frobenius norms of the constraint violations. The smoothness
// constraint is attached to Q by the two-block formulation and to Theta by
// the multi-block one, so r_smooth is measured on that block.
struct PrimalResiduals {
  double eq;      // ||Theta - Q||_F^2
  double smooth;  // ||B (I - W) - Gamma||_F^2
  double pi;      // ||Gamma - Pi||_F^2
  double total;   // eq + smooth + pi, the exact sum of the stored values
};

PrimalResiduals primal_residuals(const SolverState& state, const WeightMatrix& w,
                                 Variant variant);

// ||(Theta (I - W) - Gamma) - (Q (I - W) - Gamma)||_F, the gap between the
// two smoothness-constraint formulations; zero whenever Theta = Q.
double check_constraint_equivalence(const SolverState& state, const WeightMatrix& w);

// sqrt(mean((y - yhat)^2))
double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

enum class NmseDenominator { Std, Var };

// sum_t ||y_t - yhat_t||^2 / d(y_t), divided by the total observation
// count. d is the population standard deviation by default, the population
// variance with Var.
double nmse(const std::vector<Eigen::VectorXd>& y,
            const std::vector<Eigen::VectorXd>& yhat,
            NmseDenominator denom = NmseDenominator::Std);

// Per-task predictions X_t theta_t.
std::vector<Eigen::VectorXd> predict(const Eigen::MatrixXd& theta,
                                     const ProblemData& data);

}  // namespace tsmtl
