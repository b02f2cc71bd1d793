#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

#include "tsmtl/problem.hpp"
#include "tsmtl/temporal_kernel.hpp"

namespace tsmtl {

struct StaleCacheError : std::runtime_error {
  explicit StaleCacheError(const std::string& what) : std::runtime_error(what) {}
};

// Per-task Cholesky factors of X_t^T X_t + ridge * I together with the
// cached X_t^T y_t. The ridge is rho for the two-block solver and
// rho + rho1 for the multi-block one; both are fixed across iterations, so
// the factorization is done once per run.
class FactorizationCache {
 public:
  FactorizationCache(const ProblemData& data, double ridge);

  static double ridge_for(const Hyperparams& hyper, const WeightMatrix& w,
                          Variant variant);

  double ridge() const { return ridge_; }
  int num_tasks() const { return static_cast<int>(llts_.size()); }
  int num_features() const { return num_features_; }

  // Solves (X_t^T X_t + ridge I) x = rhs. Throws StaleCacheError if the
  // cache was built with a different ridge.
  Eigen::VectorXd solve(int t, const Eigen::VectorXd& rhs, double expected_ridge) const;

  const Eigen::VectorXd& xty(int t) const { return xty_.at(t); }

 private:
  double ridge_;
  int num_features_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts_;
  std::vector<Eigen::VectorXd> xty_;
};

// One trace row. Residual components are the squared Frobenius norms from
// primal_residuals, stored so that r_total == r_eq + r_smooth + r_pi holds
// exactly. val_nmse is present only when a validation set was supplied.
struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double r_eq = 0.0;
  double r_smooth = 0.0;
  double r_pi = 0.0;
  double r_total = 0.0;
  std::optional<double> val_nmse;
  double elapsed_seconds = 0.0;
};

// theta_t = (X_t^T X_t + rho I)^{-1} (X_t^T y_t - s_t + rho q_t)
Eigen::VectorXd solve_theta_two_block(int t, const SolverState& state,
                                      const Hyperparams& hyper,
                                      const FactorizationCache& cache);

// theta_t = (X_t^T X_t + (rho + rho1) I)^{-1}
//           (X_t^T y_t - s_t + rho q_t - u_tilde_t - h_t + rho1 theta_t^k)
// where h_t is column t of coupling_gradient at the previous (Theta, Gamma)
// and u_tilde_t is u_t under DualCoupling::Paper or column t of
// temporal_adjoint(U, W) under DualCoupling::Exact.
Eigen::VectorXd solve_theta_multi_block(int t, const SolverState& state,
                                        const Hyperparams& hyper,
                                        const FactorizationCache& cache,
                                        const Eigen::VectorXd& h_t,
                                        const Eigen::VectorXd& u_tilde_t, double rho1);

// Exact minimizer of the gamma subproblem given the smoothness image d_t of
// the coupled block: gamma = (d + pi)/2 + (u - v)/(2 rho).
Eigen::VectorXd update_gamma(const Eigen::VectorXd& d, const Eigen::VectorXd& pi,
                             const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             double rho);

// Two-block Q update: linearize the coupling term at Q^k and solve the
// remaining prox exactly,
//   Q = sgl_prox((rho Theta^{k+1} + rho1 Q^k + S - H - A) / (rho + rho1),
//                lambda1 / (rho + rho1), lambda2 / (rho + rho1))
// with H = coupling_gradient(Q^k, Gamma^{k+1}) and A = temporal_adjoint(U, W).
// Expects state.theta and state.gamma already advanced to k+1.
Eigen::MatrixXd update_q_two_block(const SolverState& state, const Hyperparams& hyper,
                                   const WeightMatrix& w, double rho1);

// Multi-block Q update: plain prox of the regularizer at Theta + S/rho.
Eigen::MatrixXd update_q_multi_block(const Eigen::MatrixXd& theta_new,
                                     const Eigen::MatrixXd& s, const Hyperparams& hyper);

// Pi = l1_prox(Gamma + V/rho, lambda3 / rho)
Eigen::MatrixXd update_pi(const Eigen::MatrixXd& gamma_new, const Eigen::MatrixXd& v,
                          const Hyperparams& hyper);

// S += rho (Theta - Q); U += rho (B (I - W) - Gamma); V += rho (Gamma - Pi),
// with B = Q for the two-block variant and B = Theta for the multi-block one.
void dual_step(SolverState& state, const WeightMatrix& w, const Hyperparams& hyper,
               Variant variant);

// One full sweep of the chosen variant, in the update order
//   two-block:   (Theta, Gamma) -> (Q, Pi) -> duals
//   multi-block: Theta -> Gamma -> (Q, Pi) -> duals
// Increments state.iter.
void iterate(SolverState& state, const ProblemData& data, const Hyperparams& hyper,
             const WeightMatrix& w, const FactorizationCache& cache, Variant variant);

struct RunOptions {
  // When false every elapsed_seconds is written as zero, which keeps runs
  // bit-identical across machines.
  bool measure_time = true;
  NmseDenominator nmse_denominator = NmseDenominator::Std;
  // Stop early once r_total falls below this.
  std::optional<double> residual_tol;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  SolverState state;
  bool diverged = false;
};

// Runs from the zero state for hyper.max_iters sweeps, recording a trace
// row every eval_every iterations (and always for the last completed one).
// A non-finite state or trace row flags divergence and stops the run; the
// offending row is discarded so traces stay finite.
RunResult run(const ProblemData& train, const Hyperparams& hyper, const WeightMatrix& w,
              Variant variant, const ProblemData* validation = nullptr,
              const RunOptions& options = {});

}  // namespace tsmtl
