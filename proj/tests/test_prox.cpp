#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tsmtl/prox.hpp"

using namespace tsmtl;

TEST_CASE("scalar soft threshold matches its closed form") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);
  CHECK(soft_threshold(-7.25, 0.0) == -7.25);
  CHECK_THROWS_AS(soft_threshold(1.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(soft_threshold(1.0, std::nan("")), std::invalid_argument);
}

TEST_CASE("entrywise prox applies the scalar rule everywhere") {
  Eigen::MatrixXd m(2, 2);
  m << 3.0, -0.5, 0.0, -4.0;
  Eigen::MatrixXd z = l1_prox(m, 1.0);
  CHECK(z(0, 0) == 2.0);
  CHECK(z(0, 1) == 0.0);
  CHECK(z(1, 0) == 0.0);
  CHECK(z(1, 1) == -3.0);
  CHECK_THROWS_AS(l1_prox(m, -1.0), std::invalid_argument);
}

TEST_CASE("row group shrinkage preserves direction") {
  Eigen::VectorXd v(2);
  v << 3.0, 4.0;
  Eigen::VectorXd z = group_soft_threshold(v, 1.0);
  // ||v|| = 5, so the row shrinks by factor 1 - 1/5.
  CHECK(z(0) == doctest::Approx(2.4).epsilon(1e-14));
  CHECK(z(1) == doctest::Approx(3.2).epsilon(1e-14));
  CHECK(group_soft_threshold(v, 5.0).isZero(0.0));
  CHECK(group_soft_threshold(v, 6.0).isZero(0.0));
  CHECK(group_soft_threshold(Eigen::VectorXd::Zero(3), 2.0).isZero(0.0));
  CHECK_THROWS_AS(group_soft_threshold(v, -1.0), std::invalid_argument);
}

TEST_CASE("sparse-group prox matches the documented row example") {
  Eigen::MatrixXd m(1, 2);
  m << 3.0, 4.0;
  Eigen::MatrixXd z = sgl_prox(m, 1.0, 1.0);
  // Soft threshold gives (2, 3); the group step scales by 1 - 1/sqrt(13).
  CHECK(z(0, 0) == doctest::Approx(1.4452998037747707).epsilon(1e-12));
  CHECK(z(0, 1) == doctest::Approx(2.1679497056621562).epsilon(1e-12));
}

TEST_CASE("sparse-group prox degenerates to its factors") {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd m = oracle::random_matrix(rng, 5, 4, 2.0);
  CHECK((sgl_prox(m, 0.7, 0.0) - l1_prox(m, 0.7)).lpNorm<Eigen::Infinity>() == 0.0);
  Eigen::MatrixXd grouped = m;
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    grouped.row(j) = group_soft_threshold(m.row(j).transpose(), 0.7).transpose();
  }
  CHECK((sgl_prox(m, 0.0, 0.7) - grouped).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((sgl_prox(m, 0.0, 0.0) - m).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("sparse-group prox matches the projection oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> tau(0.0, 2.0);
  std::uniform_real_distribution<double> entry(-3.0, 3.0);
  for (int rep = 0; rep < 25; ++rep) {
    int p = 1 + static_cast<int>(rng() % 4);
    int tasks = 1 + static_cast<int>(rng() % 3);
    double tau1 = rep == 0 ? 0.0 : tau(rng);
    double tau2 = rep == 1 ? 0.0 : tau(rng);
    Eigen::MatrixXd m(p, tasks);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < tasks; ++j) m(i, j) = entry(rng);
    }
    double gap = 0.0;
    Eigen::MatrixXd expect = oracle::prox_sparse_group(m, tau1, tau2, &gap);
    Eigen::MatrixXd got = sgl_prox(m, tau1, tau2);
    CAPTURE(rep);
    CAPTURE(gap);
    CHECK((got - expect).lpNorm<Eigen::Infinity>() <= 1e-5);
  }
}

TEST_CASE("prox outputs satisfy their subgradient conditions") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd m = oracle::random_matrix(rng, 4, 3, 2.0);
    double tau1 = 0.1 + 0.4 * static_cast<double>(rep % 5);
    double tau2 = 0.1 + 0.3 * static_cast<double>(rep % 7);

    Eigen::MatrixXd z = sgl_prox(m, tau1, tau2);
    CHECK(oracle::sgl_subgradient_violation(m, z, tau1, tau2) <= 1e-10);

    // l1 and group alone are the tau2 = 0 and tau1 = 0 special cases.
    CHECK(oracle::sgl_subgradient_violation(m, l1_prox(m, tau1), tau1, 0.0) <= 1e-10);
    Eigen::MatrixXd grouped(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
      grouped.row(j) = group_soft_threshold(m.row(j).transpose(), tau2).transpose();
    }
    CHECK(oracle::sgl_subgradient_violation(m, grouped, 0.0, tau2) <= 1e-10);
  }
}

TEST_CASE("all three operators are non-expansive") {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd a = oracle::random_matrix(rng, 3, 4, 3.0);
    Eigen::MatrixXd b = oracle::random_matrix(rng, 3, 4, 3.0);
    double dist = (a - b).norm();
    double slack = dist * 1e-12 + 1e-12;
    CHECK((l1_prox(a, 0.8) - l1_prox(b, 0.8)).norm() <= dist + slack);
    CHECK((sgl_prox(a, 0.6, 0.9) - sgl_prox(b, 0.6, 0.9)).norm() <= dist + slack);
    CHECK((group_soft_threshold(a.col(0), 1.1) - group_soft_threshold(b.col(0), 1.1))
              .norm() <= (a.col(0) - b.col(0)).norm() + slack);
  }
}

TEST_CASE("larger thresholds never resurrect a zeroed row") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> extra(0.0, 1.5);
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd m = oracle::random_matrix(rng, 6, 5, 1.5);
    double tau1 = extra(rng);
    double tau2 = extra(rng);
    Eigen::MatrixXd small = sgl_prox(m, tau1, tau2);
    Eigen::MatrixXd large = sgl_prox(m, tau1 + extra(rng), tau2 + extra(rng));
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
      if (small.row(j).isZero(0.0)) {
        CHECK(large.row(j).isZero(0.0));
      }
    }
  }
}
