#include "tsmtl/problem.hpp"

#include <cmath>
#include <utility>

namespace tsmtl {

ProblemData::ProblemData(std::vector<TaskData> tasks) : tasks_(std::move(tasks)) {
  if (tasks_.empty()) throw std::invalid_argument("ProblemData: no tasks");
  num_features_ = static_cast<int>(tasks_.front().x.cols());
  if (num_features_ < 1) throw std::invalid_argument("ProblemData: no features");
  for (std::size_t t = 0; t < tasks_.size(); ++t) {
    const TaskData& task = tasks_[t];
    if (task.x.cols() != num_features_) {
      throw std::invalid_argument("ProblemData: task " + std::to_string(t) +
                                  " feature count differs");
    }
    if (task.x.rows() < 1) {
      throw std::invalid_argument("ProblemData: task " + std::to_string(t) + " is empty");
    }
    if (task.y.size() != task.x.rows()) {
      throw std::invalid_argument("ProblemData: task " + std::to_string(t) +
                                  " target length differs from row count");
    }
    if (!task.x.allFinite() || !task.y.allFinite()) {
      throw std::invalid_argument("ProblemData: task " + std::to_string(t) +
                                  " contains non-finite values");
    }
  }
}

int ProblemData::total_observations() const {
  int n = 0;
  for (const TaskData& task : tasks_) n += static_cast<int>(task.x.rows());
  return n;
}

std::string to_string(Variant v) {
  return v == Variant::TwoBlock ? "two_block" : "multi_block";
}

std::string to_string(DualCoupling c) {
  return c == DualCoupling::Paper ? "paper" : "exact";
}

Variant variant_from_string(const std::string& s) {
  if (s == "two_block") return Variant::TwoBlock;
  if (s == "multi_block") return Variant::MultiBlock;
  throw std::invalid_argument("unknown variant: " + s);
}

DualCoupling dual_coupling_from_string(const std::string& s) {
  if (s == "paper") return DualCoupling::Paper;
  if (s == "exact") return DualCoupling::Exact;
  throw std::invalid_argument("unknown dual coupling mode: " + s);
}

void Hyperparams::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) {
    throw std::invalid_argument("regularization weights must be >= 0");
  }
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be > 0");
  if (!(rho > 0)) throw std::invalid_argument("rho must be > 0");
  if (rho1.has_value() && !(*rho1 > 0)) throw std::invalid_argument("rho1 must be > 0");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
}

double Hyperparams::resolved_rho1(const WeightMatrix& w) const {
  return rho1.has_value() ? *rho1 : lipschitz_rho1(w, rho);
}

SolverState SolverState::zeros(int num_features, int num_tasks) {
  SolverState state;
  state.theta = Eigen::MatrixXd::Zero(num_features, num_tasks);
  state.gamma = state.theta;
  state.q = state.theta;
  state.pi = state.theta;
  state.s = state.theta;
  state.u = state.theta;
  state.v = state.theta;
  return state;
}

bool SolverState::all_finite() const {
  return theta.allFinite() && gamma.allFinite() && q.allFinite() && pi.allFinite() &&
         s.allFinite() && u.allFinite() && v.allFinite();
}

double evaluate_objective(const Eigen::MatrixXd& theta, const ProblemData& data,
                          const Hyperparams& hyper, const WeightMatrix& w) {
  if (theta.rows() != data.num_features() || theta.cols() != data.num_tasks() ||
      w.tasks() != data.num_tasks()) {
    throw std::invalid_argument("evaluate_objective: dimension mismatch");
  }
  double loss = 0.0;
  for (int t = 0; t < data.num_tasks(); ++t) {
    const TaskData& task = data.task(t);
    loss += 0.5 * (task.y - task.x * theta.col(t)).squaredNorm();
  }
  double row_norms = 0.0;
  for (Eigen::Index j = 0; j < theta.rows(); ++j) row_norms += theta.row(j).norm();
  Eigen::MatrixXd smooth = theta * w.difference_op();
  return loss + hyper.lambda1 * theta.lpNorm<1>() + hyper.lambda2 * row_norms +
         hyper.lambda3 * smooth.lpNorm<1>();
}

PrimalResiduals primal_residuals(const SolverState& state, const WeightMatrix& w,
                                 Variant variant) {
  const Eigen::MatrixXd& b = variant == Variant::TwoBlock ? state.q : state.theta;
  PrimalResiduals r;
  r.eq = (state.theta - state.q).squaredNorm();
  r.smooth = (b * w.difference_op() - state.gamma).squaredNorm();
  r.pi = (state.gamma - state.pi).squaredNorm();
  r.total = r.eq + r.smooth + r.pi;
  return r;
}

double check_constraint_equivalence(const SolverState& state, const WeightMatrix& w) {
  return ((state.theta - state.q) * w.difference_op()).norm();
}

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("rmse: length mismatch");
  if (y.size() == 0) throw std::invalid_argument("rmse: empty input");
  return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

double nmse(const std::vector<Eigen::VectorXd>& y,
            const std::vector<Eigen::VectorXd>& yhat, NmseDenominator denom) {
  if (y.size() != yhat.size() || y.empty()) {
    throw std::invalid_argument("nmse: task list mismatch");
  }
  double sum = 0.0;
  long total = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t].size() != yhat[t].size() || y[t].size() == 0) {
      throw std::invalid_argument("nmse: task " + std::to_string(t) + " length mismatch");
    }
    double n = static_cast<double>(y[t].size());
    double var = (y[t].array() - y[t].mean()).square().sum() / n;
    double d = denom == NmseDenominator::Std ? std::sqrt(var) : var;
    if (!(d > 0)) {
      throw std::invalid_argument("nmse: task " + std::to_string(t) +
                                  " has constant targets");
    }
    sum += (y[t] - yhat[t]).squaredNorm() / d;
    total += y[t].size();
  }
  return sum / static_cast<double>(total);
}

std::vector<Eigen::VectorXd> predict(const Eigen::MatrixXd& theta,
                                     const ProblemData& data) {
  if (theta.rows() != data.num_features() || theta.cols() != data.num_tasks()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(data.num_tasks());
  for (int t = 0; t < data.num_tasks(); ++t) {
    out.push_back(data.task(t).x * theta.col(t));
  }
  return out;
}

}  // namespace tsmtl
