#include "eqt/lattice.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace eqt;

namespace {

long long det_int(const IntMatrix &M) {
  return static_cast<long long>(std::llround(M.cast<double>().determinant()));
}

// Brute-force count of x in (Z/N)^n / N with A x in Z^m.
long long torsion_by_enumeration(const IntMatrix &A, int N) {
  const int n = static_cast<int>(A.cols());
  long long count = 0;
  std::vector<int> x(n, 0);
  while (true) {
    bool ok = true;
    for (int r = 0; r < A.rows() && ok; ++r) {
      long long s = 0;
      for (int c = 0; c < n; ++c) {
        s += A(r, c) * x[c];
      }
      ok = s % N == 0;
    }
    count += ok ? 1 : 0;
    int c = 0;
    while (c < n && ++x[c] == N) {
      x[c++] = 0;
    }
    if (c == n) {
      break;
    }
  }
  return count;
}

} // namespace

TEST(Lattice, SmithFormFactorsRandomMatrices) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> e(-4, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 4);
    const int n = 1 + static_cast<int>(rng() % 4);
    IntMatrix A(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        A(i, j) = e(rng);
      }
    }
    const SmithForm s = smith_normal_form(A);
    EXPECT_EQ(s.U * A * s.V, s.D);
    EXPECT_EQ(std::abs(det_int(s.U)), 1);
    EXPECT_EQ(std::abs(det_int(s.V)), 1);
    for (int i = 0; i + 1 < s.rank; ++i) {
      EXPECT_EQ(s.D(i + 1, i + 1) % s.D(i, i), 0);
    }
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) {
          EXPECT_EQ(s.D(i, j), 0);
        }
      }
    }
  }
}

TEST(Lattice, RankMatchesFloatingPointRank) {
  IntMatrix A(3, 3);
  A << 1, 2, 3, 2, 4, 6, 1, 0, 1;
  EXPECT_EQ(integer_rank(A), 2);
  EXPECT_EQ(integer_rank(IntMatrix::Zero(2, 2)), 0);
}

TEST(Lattice, TorsionOrderMatchesEnumeration) {
  IntMatrix A(2, 2);
  A << 2, 0, 0, 3;
  EXPECT_EQ(kernel_torsion_order(A), torsion_by_enumeration(A, 6));
  IntMatrix B(2, 1);
  B << -2, -2;
  EXPECT_EQ(kernel_torsion_order(B), 2);
  EXPECT_EQ(torsion_by_enumeration(B, 2), 2);
  IntMatrix C(2, 2);
  C << 1, 2, 3, 4;
  EXPECT_EQ(kernel_torsion_order(C), torsion_by_enumeration(C, 2));
  IntMatrix D(1, 2);
  D << 1, 1;
  EXPECT_EQ(kernel_torsion_order(D), 0);
}

TEST(Lattice, PhaseSolutionsSatisfyTheSystem) {
  IntMatrix A(3, 2);
  A << 1, 1, 1, -1, 1, -1;
  Eigen::VectorXd ph(3);
  ph << 0.3, 1.1, 1.1;
  const PhaseSolutions s = solve_phase_system(A, ph);
  ASSERT_TRUE(s.consistent);
  EXPECT_EQ(s.free_dims, 0);
  EXPECT_EQ(s.solutions.size(), 2u);
  for (const auto &x : s.solutions) {
    const Eigen::VectorXd r = A.cast<double>() * x - ph;
    for (int i = 0; i < r.size(); ++i) {
      EXPECT_LT(angle_distance(r[i]), 1e-9);
    }
  }
  // The two solutions differ by the order-2 kernel element.
  EXPECT_GT(angle_distance(s.solutions[0][0] - s.solutions[1][0]), 1.0);
}

TEST(Lattice, InconsistentPhasesAreDetected) {
  IntMatrix A(2, 1);
  A << 1, 1;
  Eigen::VectorXd ph(2);
  ph << 0.0, 1.0;
  EXPECT_FALSE(solve_phase_system(A, ph).consistent);
}

TEST(Lattice, UnderdeterminedSystemsReportFreeDimensions) {
  IntMatrix A(1, 2);
  A << 1, 1;
  Eigen::VectorXd ph(1);
  ph << 0.5;
  const PhaseSolutions s = solve_phase_system(A, ph);
  ASSERT_TRUE(s.consistent);
  EXPECT_EQ(s.free_dims, 1);
}

TEST(Lattice, AngleHelpers) {
  EXPECT_NEAR(wrap_angle(-0.5), 2 * 3.14159265358979323846 - 0.5, 1e-15);
  EXPECT_NEAR(angle_distance(2 * 3.14159265358979323846 - 1e-3), 1e-3, 1e-12);
}
