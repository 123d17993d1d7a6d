#include "eqt/error.hpp"
#include "eqt/linear_program.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace eqt;

namespace {

// Best objective over basic feasible solutions, by enumerating bases.
std::optional<double> brute_force(const Eigen::VectorXd &c, const Eigen::MatrixXd &A,
                                  const Eigen::VectorXd &b) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  std::optional<double> best;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + m, true);
  do {
    std::vector<int> cols;
    for (int j = 0; j < n; ++j) {
      if (pick[j]) {
        cols.push_back(j);
      }
    }
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) {
      B.col(i) = A.col(cols[i]);
    }
    if (std::abs(B.determinant()) < 1e-12) {
      continue;
    }
    const Eigen::VectorXd xb = B.lu().solve(b);
    if (xb.minCoeff() < -1e-12) {
      continue;
    }
    double obj = 0.0;
    for (int i = 0; i < m; ++i) {
      obj += c[cols[i]] * xb[i];
    }
    if (!best || obj > *best) {
      best = obj;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

} // namespace

TEST(LinearProgram, MatchesBasisEnumeration) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2;
    const int n = 5;
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        A(i, j) = u(rng);
      }
    }
    A.row(0).setOnes(); // bounded: sum x = 1
    Eigen::VectorXd b(m);
    b << 1.0, 0.2 * u(rng);
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) {
      c[j] = u(rng);
    }
    const auto got = maximize(c, A, b);
    const auto want = brute_force(c, A, b);
    ASSERT_EQ(got.has_value(), want.has_value());
    if (got) {
      EXPECT_NEAR(got->objective, *want, 1e-9);
      EXPECT_NEAR((A * got->x - b).norm(), 0.0, 1e-9);
      EXPECT_GE(got->x.minCoeff(), -1e-12);
    }
  }
}

TEST(LinearProgram, InfeasibleReturnsNothing) {
  Eigen::MatrixXd A(1, 2);
  A << 1.0, 1.0;
  Eigen::VectorXd b(1);
  b << -1.0;
  EXPECT_FALSE(maximize(Eigen::VectorXd::Ones(2), A, b).has_value());
}

TEST(LinearProgram, UnboundedThrows) {
  Eigen::MatrixXd A(1, 2);
  A << 1.0, -1.0;
  Eigen::VectorXd b(1);
  b << 0.0;
  EXPECT_THROW(maximize(Eigen::VectorXd::Ones(2), A, b), Error);
}
