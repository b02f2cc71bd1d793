#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is written as directly as possible from first principles
// (alternating projections, full-pivot solves, explicit loops) so that a bug
// in the library is unlikely to be mirrored by the oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsmtl/problem.hpp"
#include "tsmtl/temporal_kernel.hpp"

namespace oracle {

// prox of tau1*||.||_1 + tau2*||.||_2 on one row via Moreau decomposition:
// prox(v) = v - proj_K(v) with K = tau1*B_inf + tau2*B_2 (Minkowski sum).
// The projection is computed by alternating exact projections over the two
// summands. For the candidate z = v - a - b the duality gap
//   gap = tau1*||z||_1 + tau2*||z||_2 - z.(a+b)
// is nonnegative and certifies ||z - prox(v)|| <= sqrt(2*gap) because the
// prox objective is 1-strongly convex.
inline Eigen::VectorXd prox_l1_l2_row(const Eigen::VectorXd& v, double tau1,
                                      double tau2, double* gap_out = nullptr) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(v.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(v.size());
  double gap = 0.0;
  const double tol = 1e-13 * std::max(1.0, v.squaredNorm());
  for (int pass = 0; pass < 200000; ++pass) {
    Eigen::VectorXd r = v - b;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      a(i) = std::clamp(r(i), -tau1, tau1);
    }
    r = v - a;
    double norm = r.norm();
    b = (norm > tau2 && norm > 0.0) ? Eigen::VectorXd(tau2 / norm * r) : r;
    Eigen::VectorXd z = v - a - b;
    gap = tau1 * z.lpNorm<1>() + tau2 * z.norm() - z.dot(a + b);
    if (gap <= tol) break;
  }
  if (gap_out != nullptr) *gap_out = std::max(gap, 0.0);
  return v - a - b;
}

// Row-wise matrix version; worst_gap reports the largest per-row certificate.
inline Eigen::MatrixXd prox_sparse_group(const Eigen::MatrixXd& m, double tau1,
                                         double tau2, double* worst_gap = nullptr) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    double gap = 0.0;
    out.row(j) = prox_l1_l2_row(m.row(j).transpose(), tau1, tau2, &gap).transpose();
    worst = std::max(worst, gap);
  }
  if (worst_gap != nullptr) *worst_gap = worst;
  return out;
}

// Largest violation of the subgradient optimality condition
//   arg - z  in  tau1*d||z||_1 + tau2*d||z||_2   (row-wise),
// which characterises z = prox(arg). Zero rows are checked through dual
// feasibility: dist(arg_row, tau1*B_inf) <= tau2.
inline double sgl_subgradient_violation(const Eigen::MatrixXd& arg,
                                        const Eigen::MatrixXd& z, double tau1,
                                        double tau2) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < arg.rows(); ++j) {
    Eigen::VectorXd g = (arg.row(j) - z.row(j)).transpose();
    double row_norm = z.row(j).norm();
    if (row_norm > 0.0) {
      Eigen::VectorXd r = g - tau2 / row_norm * z.row(j).transpose();
      for (Eigen::Index t = 0; t < r.size(); ++t) {
        if (z(j, t) != 0.0) {
          worst = std::max(worst, std::abs(r(t) - tau1 * (z(j, t) > 0 ? 1.0 : -1.0)));
        } else {
          worst = std::max(worst, std::abs(r(t)) - tau1);
        }
      }
    } else {
      double excess_sq = 0.0;
      for (Eigen::Index t = 0; t < g.size(); ++t) {
        double e = std::max(std::abs(g(t)) - tau1, 0.0);
        excess_sq += e * e;
      }
      worst = std::max(worst, std::sqrt(excess_sq) - tau2);
    }
  }
  return worst;
}

// Central finite differences of h(Theta) = (rho/2)*||Theta*(I-W) - Gamma||_F^2,
// with the residual evaluated by explicit loops over the stored weights.
inline double coupling_value(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& gamma,
                             const Eigen::MatrixXd& weights, double rho) {
  const Eigen::Index tasks = weights.cols();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    for (Eigen::Index t = 0; t < tasks; ++t) {
      double acc = -gamma(i, t);
      for (Eigen::Index l = 0; l < tasks; ++l) {
        double e = (l == t ? 1.0 : 0.0) - weights(l, t);
        acc += theta(i, l) * e;
      }
      sum += acc * acc;
    }
  }
  return 0.5 * rho * sum;
}

inline Eigen::MatrixXd fd_coupling_gradient(const Eigen::MatrixXd& theta,
                                            const Eigen::MatrixXd& gamma,
                                            const Eigen::MatrixXd& weights, double rho,
                                            double eps = 1e-6) {
  Eigen::MatrixXd grad(theta.rows(), theta.cols());
  Eigen::MatrixXd probe = theta;
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    for (Eigen::Index t = 0; t < theta.cols(); ++t) {
      probe(i, t) = theta(i, t) + eps;
      double up = coupling_value(probe, gamma, weights, rho);
      probe(i, t) = theta(i, t) - eps;
      double down = coupling_value(probe, gamma, weights, rho);
      probe(i, t) = theta(i, t);
      grad(i, t) = (up - down) / (2.0 * eps);
    }
  }
  return grad;
}

// Top eigenvalue of a symmetric PSD matrix by power iteration. Uses several
// deterministic pseudo-random starts and keeps the best Rayleigh quotient:
// the quotient of a PSD matrix never exceeds the answer, while a structured
// start can sit inside an invariant subspace and stall below it.
inline double top_eigenvalue_sym(const Eigen::MatrixXd& m) {
  double best = 0.0;
  std::uint64_t lcg = 0x2545F4914F6CDD1DULL;
  for (int start = 0; start < 3; ++start) {
    Eigen::VectorXd v(m.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      lcg = lcg * 6364136223846793005ULL + 1442695040888963407ULL;
      v(i) = static_cast<double>(lcg >> 11) / 9007199254740992.0 - 0.5;
    }
    v.normalize();
    double value = 0.0;
    for (int pass = 0; pass < 20000; ++pass) {
      Eigen::VectorXd mv = m * v;
      double norm = mv.norm();
      if (norm == 0.0) break;
      double next = v.dot(mv);
      if (pass > 0 && std::abs(next - value) <= 1e-15 * std::max(1.0, std::abs(next))) {
        value = next;
        break;
      }
      value = next;
      v = mv / norm;
    }
    best = std::max(best, value);
  }
  return best;
}

inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return x.fullPivHouseholderQr().solve(y);
}

struct LoopResiduals {
  double eq = 0.0;
  double smooth = 0.0;
  double pi = 0.0;
};

// Squared Frobenius norms of the three constraint gaps, written with loops.
// use_q_for_smooth selects the block whose image is compared against Gamma.
inline LoopResiduals loop_residuals(const tsmtl::SolverState& state,
                                    const Eigen::MatrixXd& weights,
                                    bool use_q_for_smooth) {
  LoopResiduals r;
  const Eigen::MatrixXd& b = use_q_for_smooth ? state.q : state.theta;
  const Eigen::Index tasks = weights.cols();
  for (Eigen::Index i = 0; i < state.theta.rows(); ++i) {
    for (Eigen::Index t = 0; t < tasks; ++t) {
      double d_eq = state.theta(i, t) - state.q(i, t);
      r.eq += d_eq * d_eq;
      double acc = -state.gamma(i, t);
      for (Eigen::Index l = 0; l < tasks; ++l) {
        acc += b(i, l) * ((l == t ? 1.0 : 0.0) - weights(l, t));
      }
      r.smooth += acc * acc;
      double d_pi = state.gamma(i, t) - state.pi(i, t);
      r.pi += d_pi * d_pi;
    }
  }
  return r;
}

namespace detail {

inline Eigen::MatrixXd soft(const Eigen::MatrixXd& m, double tau) {
  Eigen::MatrixXd z(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double mag = std::abs(m(i, j)) - tau;
      z(i, j) = mag <= 0.0 ? 0.0 : (m(i, j) < 0.0 ? -mag : mag);
    }
  }
  return z;
}

inline Eigen::MatrixXd sparse_group(const Eigen::MatrixXd& m, double tau1, double tau2) {
  Eigen::MatrixXd z = soft(m, tau1);
  for (Eigen::Index j = 0; j < z.rows(); ++j) {
    double norm = z.row(j).norm();
    z.row(j) = norm <= tau2 ? Eigen::RowVectorXd::Zero(z.cols())
                            : Eigen::RowVectorXd((1.0 - tau2 / norm) * z.row(j));
  }
  return z;
}

inline Eigen::MatrixXd ridge_solve_columns(const tsmtl::ProblemData& data, double ridge,
                                           const Eigen::MatrixXd& rhs) {
  Eigen::MatrixXd out(rhs.rows(), rhs.cols());
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(rhs.rows(), rhs.rows());
  for (int t = 0; t < data.num_tasks(); ++t) {
    const tsmtl::TaskData& task = data.task(t);
    Eigen::MatrixXd normal = task.x.transpose() * task.x + ridge * eye;
    out.col(t) = normal.fullPivLu().solve(rhs.col(t));
  }
  return out;
}

}  // namespace detail

// One iterate of the two-block scheme transcribed in a straight line. Gamma is
// deliberately computed before Theta: both belong to the first block and read
// only k-state, so the order must not matter.
inline tsmtl::SolverState two_block_reference(const tsmtl::SolverState& state,
                                              const tsmtl::ProblemData& data,
                                              const Eigen::MatrixXd& weights, double rho,
                                              double rho1, double l1, double l2,
                                              double l3) {
  const Eigen::Index tasks = weights.cols();
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(tasks, tasks) - weights;
  tsmtl::SolverState next = state;

  Eigen::MatrixXd d = state.q * e;
  next.gamma = 0.5 * (d + state.pi) + (state.u - state.v) / (2.0 * rho);

  Eigen::MatrixXd rhs(state.theta.rows(), tasks);
  for (int t = 0; t < static_cast<int>(tasks); ++t) {
    rhs.col(t) = data.task(t).x.transpose() * data.task(t).y - state.s.col(t) +
                 rho * state.q.col(t);
  }
  next.theta = detail::ridge_solve_columns(data, rho, rhs);

  Eigen::MatrixXd h = rho * (state.q * e - next.gamma) * e.transpose();
  Eigen::MatrixXd adj = state.u * e.transpose();
  Eigen::MatrixXd arg =
      (rho * next.theta + rho1 * state.q + state.s - h - adj) / (rho + rho1);
  next.q = detail::sparse_group(arg, l1 / (rho + rho1), l2 / (rho + rho1));
  next.pi = detail::soft(next.gamma + state.v / rho, l3 / rho);

  next.s = state.s + rho * (next.theta - next.q);
  next.u = state.u + rho * (next.q * e - next.gamma);
  next.v = state.v + rho * (next.gamma - next.pi);
  next.iter = state.iter + 1;
  return next;
}

// One iterate of the multi-block scheme transcribed in a straight line.
inline tsmtl::SolverState multi_block_reference(const tsmtl::SolverState& state,
                                                const tsmtl::ProblemData& data,
                                                const Eigen::MatrixXd& weights,
                                                double rho, double rho1, double l1,
                                                double l2, double l3, bool paper_dual) {
  const Eigen::Index tasks = weights.cols();
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(tasks, tasks) - weights;
  tsmtl::SolverState next = state;

  Eigen::MatrixXd h = rho * (state.theta * e - state.gamma) * e.transpose();
  Eigen::MatrixXd u_tilde = paper_dual ? state.u : Eigen::MatrixXd(state.u * e.transpose());
  Eigen::MatrixXd rhs(state.theta.rows(), tasks);
  for (int t = 0; t < static_cast<int>(tasks); ++t) {
    rhs.col(t) = data.task(t).x.transpose() * data.task(t).y - state.s.col(t) +
                 rho * state.q.col(t) - u_tilde.col(t) - h.col(t) +
                 rho1 * state.theta.col(t);
  }
  next.theta = detail::ridge_solve_columns(data, rho + rho1, rhs);

  Eigen::MatrixXd d = next.theta * e;
  next.gamma = 0.5 * (d + state.pi) + (state.u - state.v) / (2.0 * rho);
  next.q = detail::sparse_group(next.theta + state.s / rho, l1 / rho, l2 / rho);
  next.pi = detail::soft(next.gamma + state.v / rho, l3 / rho);

  next.s = state.s + rho * (next.theta - next.q);
  next.u = state.u + rho * (next.theta * e - next.gamma);
  next.v = state.v + rho * (next.gamma - next.pi);
  next.iter = state.iter + 1;
  return next;
}

// Test-data helpers.

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                                     Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * gauss(rng);
  }
  return m;
}

inline tsmtl::ProblemData random_problem(std::mt19937_64& rng, int p, int tasks, int n,
                                         double x_scale = 1.0) {
  std::vector<tsmtl::TaskData> out;
  out.reserve(tasks);
  for (int t = 0; t < tasks; ++t) {
    tsmtl::TaskData task;
    task.x = random_matrix(rng, n, p, x_scale);
    task.y = random_matrix(rng, n, 1);
    out.push_back(std::move(task));
  }
  return tsmtl::ProblemData(std::move(out));
}

// Near-zero designs make the temporal coupling dominate the loss, so a solver
// run with a deliberately undersized linearization weight (rho1 well below the
// documented bound) genuinely blows up to non-finite values. Used to exercise
// the divergence-flag paths end to end.
inline tsmtl::ProblemData coupling_dominated_problem(std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::vector<tsmtl::TaskData> tasks;
  for (int t = 0; t < 8; ++t) {
    tsmtl::TaskData task;
    task.x = random_matrix(rng, 3, 2, 1e-6);
    task.y = random_matrix(rng, 3, 1);
    tasks.push_back(std::move(task));
  }
  return tsmtl::ProblemData(std::move(tasks));
}

inline tsmtl::SolverState random_state(std::mt19937_64& rng, int p, int tasks,
                                       double scale = 1.0) {
  tsmtl::SolverState state;
  state.theta = random_matrix(rng, p, tasks, scale);
  state.gamma = random_matrix(rng, p, tasks, scale);
  state.q = random_matrix(rng, p, tasks, scale);
  state.pi = random_matrix(rng, p, tasks, scale);
  state.s = random_matrix(rng, p, tasks, scale);
  state.u = random_matrix(rng, p, tasks, scale);
  state.v = random_matrix(rng, p, tasks, scale);
  state.iter = 0;
  return state;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Minimal XML well-formedness check: balanced, properly nested tags, quoted
// attribute values, and only the escape entities the plot writer emits. This
// is intentionally stricter than a full parser, matching what the SVGs use.
inline bool xml_well_formed(const std::string& text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  std::vector<std::string> stack;
  bool saw_element = false;
  auto is_name_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
           c == ':' || c == '.';
  };
  auto entity_ok = [&](std::size_t at) {
    for (const char* e : {"&amp;", "&lt;", "&gt;", "&quot;", "&apos;"}) {
      if (text.compare(at, std::string(e).size(), e) == 0) return true;
    }
    return false;
  };

  if (text.compare(0, 2, "<?") == 0) {
    std::size_t end = text.find("?>");
    if (end == std::string::npos) return false;
    i = end + 2;
  }
  while (i < n) {
    char c = text[i];
    if (c == '<') {
      ++i;
      if (i < n && text[i] == '/') {
        ++i;
        std::string name;
        while (i < n && is_name_char(text[i])) name += text[i++];
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n || text[i] != '>' || name.empty()) return false;
        ++i;
        if (stack.empty() || stack.back() != name) return false;
        stack.pop_back();
        continue;
      }
      std::string name;
      while (i < n && is_name_char(text[i])) name += text[i++];
      if (name.empty()) return false;
      saw_element = true;
      bool self_closing = false;
      while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) return false;
        if (text[i] == '/') {
          ++i;
          if (i >= n || text[i] != '>') return false;
          ++i;
          self_closing = true;
          break;
        }
        if (text[i] == '>') {
          ++i;
          break;
        }
        std::string attr;
        while (i < n && is_name_char(text[i])) attr += text[i++];
        if (attr.empty() || i >= n || text[i] != '=') return false;
        ++i;
        if (i >= n || text[i] != '"') return false;
        ++i;
        while (i < n && text[i] != '"') {
          if (text[i] == '<') return false;
          if (text[i] == '&' && !entity_ok(i)) return false;
          ++i;
        }
        if (i >= n) return false;
        ++i;
      }
      if (!self_closing) stack.push_back(name);
      continue;
    }
    if (c == '&' && !entity_ok(i)) return false;
    if (c == '>') return false;
    ++i;
  }
  return stack.empty() && saw_element;
}

inline std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t at = text.find(needle); at != std::string::npos;
       at = text.find(needle, at + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace oracle
