#include "tsmtl/solver.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include "tsmtl/prox.hpp"

namespace tsmtl {

namespace {

void check_state_shape(const SolverState& state, const ProblemData& data,
                       const WeightMatrix& w) {
  if (state.theta.rows() != data.num_features() ||
      state.theta.cols() != data.num_tasks() || w.tasks() != data.num_tasks()) {
    throw std::invalid_argument("solver state shape does not match problem");
  }
}

std::vector<Eigen::VectorXd> targets(const ProblemData& data) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(data.num_tasks());
  for (const TaskData& task : data.tasks()) out.push_back(task.y);
  return out;
}

bool finite_record(const TraceRecord& rec) {
  return std::isfinite(rec.objective) && std::isfinite(rec.r_total) &&
         std::isfinite(rec.r_eq) && std::isfinite(rec.r_smooth) &&
         std::isfinite(rec.r_pi) &&
         (!rec.val_nmse.has_value() || std::isfinite(*rec.val_nmse));
}

}  // namespace

FactorizationCache::FactorizationCache(const ProblemData& data, double ridge)
    : ridge_(ridge), num_features_(data.num_features()) {
  if (!(ridge > 0)) {
    throw std::invalid_argument("FactorizationCache: ridge must be positive");
  }
  llts_.reserve(data.num_tasks());
  xty_.reserve(data.num_tasks());
  Eigen::MatrixXd eye =
      Eigen::MatrixXd::Identity(data.num_features(), data.num_features());
  for (const TaskData& task : data.tasks()) {
    llts_.emplace_back(task.x.transpose() * task.x + ridge * eye);
    if (llts_.back().info() != Eigen::Success) {
      throw std::runtime_error("FactorizationCache: factorization failed");
    }
    xty_.push_back(task.x.transpose() * task.y);
  }
}

double FactorizationCache::ridge_for(const Hyperparams& hyper, const WeightMatrix& w,
                                     Variant variant) {
  return variant == Variant::TwoBlock ? hyper.rho : hyper.rho + hyper.resolved_rho1(w);
}

Eigen::VectorXd FactorizationCache::solve(int t, const Eigen::VectorXd& rhs,
                                          double expected_ridge) const {
  if (expected_ridge != ridge_) {
    throw StaleCacheError("factorization cache built for ridge " +
                          std::to_string(ridge_) + " but the update needs " +
                          std::to_string(expected_ridge));
  }
  return llts_.at(t).solve(rhs);
}

Eigen::VectorXd solve_theta_two_block(int t, const SolverState& state,
                                      const Hyperparams& hyper,
                                      const FactorizationCache& cache) {
  // (X_t^T X_t + rho I) theta = X_t^T y_t - s_t + rho q_t
  Eigen::VectorXd rhs = cache.xty(t) - state.s.col(t) + hyper.rho * state.q.col(t);
  return cache.solve(t, rhs, hyper.rho);
}

Eigen::VectorXd solve_theta_multi_block(int t, const SolverState& state,
                                        const Hyperparams& hyper,
                                        const FactorizationCache& cache,
                                        const Eigen::VectorXd& h_t,
                                        const Eigen::VectorXd& u_tilde_t, double rho1) {
  // (X_t^T X_t + (rho + rho1) I) theta =
  //     X_t^T y_t - s_t + rho q_t - u_tilde_t - h_t + rho1 theta_t^k
  Eigen::VectorXd rhs = cache.xty(t) - state.s.col(t) + hyper.rho * state.q.col(t) -
                        u_tilde_t - h_t + rho1 * state.theta.col(t);
  return cache.solve(t, rhs, hyper.rho + rho1);
}

Eigen::VectorXd update_gamma(const Eigen::VectorXd& d, const Eigen::VectorXd& pi,
                             const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             double rho) {
  if (!(rho > 0)) throw std::invalid_argument("update_gamma: rho must be positive");
  // Stationarity of -u'g + (rho/2)||d - g||^2 + v'g + (rho/2)||g - pi||^2.
  return 0.5 * (d + pi) + (u - v) / (2.0 * rho);
}

Eigen::MatrixXd update_q_two_block(const SolverState& state, const Hyperparams& hyper,
                                   const WeightMatrix& w, double rho1) {
  if (!(rho1 > 0)) throw std::invalid_argument("update_q_two_block: rho1 must be positive");
  double rho = hyper.rho;
  Eigen::MatrixXd h = coupling_gradient(state.q, state.gamma, w, rho);
  Eigen::MatrixXd a = temporal_adjoint(state.u, w);
  Eigen::MatrixXd arg =
      (rho * state.theta + rho1 * state.q + state.s - h - a) / (rho + rho1);
  return sgl_prox(arg, hyper.lambda1 / (rho + rho1), hyper.lambda2 / (rho + rho1));
}

Eigen::MatrixXd update_q_multi_block(const Eigen::MatrixXd& theta_new,
                                     const Eigen::MatrixXd& s, const Hyperparams& hyper) {
  if (!(hyper.rho > 0)) {
    throw std::invalid_argument("update_q_multi_block: rho must be positive");
  }
  return sgl_prox(theta_new + s / hyper.rho, hyper.lambda1 / hyper.rho,
                  hyper.lambda2 / hyper.rho);
}

Eigen::MatrixXd update_pi(const Eigen::MatrixXd& gamma_new, const Eigen::MatrixXd& v,
                          const Hyperparams& hyper) {
  if (!(hyper.rho > 0)) throw std::invalid_argument("update_pi: rho must be positive");
  return l1_prox(gamma_new + v / hyper.rho, hyper.lambda3 / hyper.rho);
}

void dual_step(SolverState& state, const WeightMatrix& w, const Hyperparams& hyper,
               Variant variant) {
  const Eigen::MatrixXd& b = variant == Variant::TwoBlock ? state.q : state.theta;
  state.s += hyper.rho * (state.theta - state.q);
  state.u += hyper.rho * (b * w.difference_op() - state.gamma);
  state.v += hyper.rho * (state.gamma - state.pi);
}

void iterate(SolverState& state, const ProblemData& data, const Hyperparams& hyper,
             const WeightMatrix& w, const FactorizationCache& cache, Variant variant) {
  check_state_shape(state, data, w);
  const int num_tasks = data.num_tasks();
  const double rho1 = hyper.resolved_rho1(w);

  if (variant == Variant::TwoBlock) {
    // Z1 = (Theta, Gamma), both from the k-state; Gamma's pull point is Q^k.
    Eigen::MatrixXd theta_new(state.theta.rows(), num_tasks);
    for (int t = 0; t < num_tasks; ++t) {
      theta_new.col(t) = solve_theta_two_block(t, state, hyper, cache);
    }
    Eigen::MatrixXd d = state.q * w.difference_op();
    Eigen::MatrixXd gamma_new(state.gamma.rows(), num_tasks);
    for (int t = 0; t < num_tasks; ++t) {
      gamma_new.col(t) = update_gamma(d.col(t), state.pi.col(t), state.u.col(t),
                                      state.v.col(t), hyper.rho);
    }
    state.theta = std::move(theta_new);
    state.gamma = std::move(gamma_new);

    // Z2 = (Q, Pi); the Q update still reads Q^k as its linearization point.
    Eigen::MatrixXd q_new = update_q_two_block(state, hyper, w, rho1);
    Eigen::MatrixXd pi_new = update_pi(state.gamma, state.v, hyper);
    state.q = std::move(q_new);
    state.pi = std::move(pi_new);
  } else {
    // Theta first, coupling linearized at (Theta^k, Gamma^k).
    Eigen::MatrixXd h = coupling_gradient(state.theta, state.gamma, w, hyper.rho);
    Eigen::MatrixXd u_tilde = hyper.dual_coupling == DualCoupling::Paper
                                  ? state.u
                                  : temporal_adjoint(state.u, w);
    Eigen::MatrixXd theta_new(state.theta.rows(), num_tasks);
    for (int t = 0; t < num_tasks; ++t) {
      theta_new.col(t) = solve_theta_multi_block(t, state, hyper, cache, h.col(t),
                                                 u_tilde.col(t), rho1);
    }
    state.theta = std::move(theta_new);

    // Gamma sees the fresh Theta.
    Eigen::MatrixXd d = state.theta * w.difference_op();
    Eigen::MatrixXd gamma_new(state.gamma.rows(), num_tasks);
    for (int t = 0; t < num_tasks; ++t) {
      gamma_new.col(t) = update_gamma(d.col(t), state.pi.col(t), state.u.col(t),
                                      state.v.col(t), hyper.rho);
    }
    state.gamma = std::move(gamma_new);

    state.q = update_q_multi_block(state.theta, state.s, hyper);
    state.pi = update_pi(state.gamma, state.v, hyper);
  }

  dual_step(state, w, hyper, variant);
  ++state.iter;
}

RunResult run(const ProblemData& train, const Hyperparams& hyper, const WeightMatrix& w,
              Variant variant, const ProblemData* validation, const RunOptions& options) {
  hyper.validate();
  if (w.tasks() != train.num_tasks()) {
    throw std::invalid_argument("run: weight matrix task count differs from data");
  }
  if (validation != nullptr && (validation->num_tasks() != train.num_tasks() ||
                                validation->num_features() != train.num_features())) {
    throw std::invalid_argument("run: validation shape differs from training data");
  }

  // Freeze auto rho1 so every iteration sees the same constant.
  Hyperparams frozen = hyper;
  frozen.rho1 = hyper.resolved_rho1(w);

  FactorizationCache cache(train, FactorizationCache::ridge_for(frozen, w, variant));
  RunResult result;
  result.state = SolverState::zeros(train.num_features(), train.num_tasks());

  std::vector<Eigen::VectorXd> val_targets;
  if (validation != nullptr) val_targets = targets(*validation);

  auto started = std::chrono::steady_clock::now();
  for (int k = 1; k <= frozen.max_iters; ++k) {
    iterate(result.state, train, frozen, w, cache, variant);
    if (!result.state.all_finite()) {
      result.diverged = true;
      break;
    }
    PrimalResiduals residuals = primal_residuals(result.state, w, variant);
    bool stop = options.residual_tol.has_value() &&
                std::isfinite(residuals.total) &&
                residuals.total <= *options.residual_tol;
    if (k % frozen.eval_every == 0 || k == frozen.max_iters || stop) {
      TraceRecord rec;
      rec.iter = result.state.iter;
      rec.objective = evaluate_objective(result.state.theta, train, frozen, w);
      rec.r_eq = residuals.eq;
      rec.r_smooth = residuals.smooth;
      rec.r_pi = residuals.pi;
      rec.r_total = residuals.total;
      if (validation != nullptr) {
        rec.val_nmse = nmse(val_targets, predict(result.state.theta, *validation),
                            options.nmse_denominator);
      }
      if (options.measure_time) {
        rec.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
      }
      if (!finite_record(rec)) {
        result.diverged = true;
        break;
      }
      result.trace.push_back(rec);
    }
    if (stop) break;
  }
  return result;
}

}  // namespace tsmtl
