#include "eqt/error.hpp"
#include "eqt/symmetry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace eqt;

namespace {

// Complete homogeneous polynomial h_k(x_0, ..., x_d) by the column recursion.
cplx complete_homogeneous(int k, const std::vector<cplx> &x) {
  std::vector<cplx> h(k + 1, cplx(0.0, 0.0));
  h[0] = 1.0;
  for (const cplx &xj : x) {
    for (int m = 1; m <= k; ++m) {
      h[m] += xj * h[m - 1];
    }
  }
  return h[k];
}

PointX random_point(std::mt19937_64 &rng, int n) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (int j = 0; j < n; ++j) {
    v[j] = cplx(g(rng), g(rng));
  }
  return PointX::normalized(v);
}

} // namespace

TEST(Symmetry, IsotypeDimensionsMatchCharacterAverage) {
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}, {0, 2, -1}});
  for (int k : {3, 6, 9}) {
    const auto dims = isotype_dimensions(k, action);
    const int N = 4 * k + 3;
    for (const auto &[label, dim] : dims) {
      cplx avg{0.0, 0.0};
      for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
          const double t0 = 2 * kPi * a / N;
          const double t1 = 2 * kPi * b / N;
          std::vector<cplx> x;
          for (int j = 0; j < 3; ++j) {
            x.push_back(std::polar(1.0, action.W(0, j) * t0 + action.W(1, j) * t1));
          }
          avg += std::polar(1.0, label[0] * t0 + label[1] * t1) *
                 complete_homogeneous(k, x);
        }
      }
      avg /= static_cast<double>(N) * N;
      EXPECT_NEAR(avg.real(), static_cast<double>(dim), 1e-9);
      EXPECT_NEAR(avg.imag(), 0.0, 1e-9);
    }
  }
}

TEST(Symmetry, P2ExampleIsotypeZeroDimension) {
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  for (int k = 0; k <= 30; ++k) {
    const auto dims = isotype_dimensions(k, action);
    const auto it = dims.find({0});
    const long long dim = it == dims.end() ? 0 : it->second;
    EXPECT_EQ(dim, k % 2 == 0 ? k / 2 + 1 : 0);
  }
}

TEST(Symmetry, IsotypeKernelsSumToSzego) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{2, -1, 0}});
  std::mt19937_64 rng(4);
  const PointX x = random_point(rng, 3);
  const PointX y = random_point(rng, 3);
  const int k = 8;
  const SectionBasis full = make_section_basis(k, model);
  cplx sum{0.0, 0.0};
  for (const auto &[lab, n] : isotype_dimensions(k, action)) {
    sum += equivariant_kernel(x, y, isotype_basis(k, lab, action, full));
  }
  const cplx ref = szego_kernel(x, y, k, model);
  EXPECT_NEAR(std::abs(sum - ref), 0.0, 1e-11 * std::abs(ref));
}

TEST(Symmetry, EquivariantKernelTransformsByCharacter) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  std::mt19937_64 rng(6);
  const PointX x = random_point(rng, 3);
  const PointX y = random_point(rng, 3);
  const int k = 6;
  const IsotypeLabel lab{-2};
  const IsotypeBasis iso = isotype_basis(k, lab, action, make_section_basis(k, model));
  Eigen::VectorXd t(1);
  t << 0.77;
  const cplx lhs = equivariant_kernel(act(t, x, action), y, iso);
  const cplx rhs = std::conj(character(lab, t)) * equivariant_kernel(x, y, iso);
  EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12 * std::abs(rhs));
}

TEST(Symmetry, EquivariantKernelIsAProjector) {
  // int_X Pi(x, z) Pi(z, y) dz = Pi(x, y), by Monte Carlo.
  const ProjectiveModel model = ProjectiveModel::make(1);
  const auto action = LinearizedTorusAction::from_rows(1, {{1, -1}});
  std::mt19937_64 rng(12);
  const PointX x = random_point(rng, 2);
  const PointX y = random_point(rng, 2);
  const int k = 4;
  const IsotypeBasis iso = isotype_basis(k, {0}, action, make_section_basis(k, model));
  const int n = 200000;
  cplx acc{0.0, 0.0};
  double acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const PointX z = random_point(rng, 2);
    const cplx v = equivariant_kernel(x, z, iso) * equivariant_kernel(z, y, iso);
    acc += v;
    acc2 += std::norm(v);
  }
  const cplx mean = acc / static_cast<double>(n);
  const double se = std::sqrt((acc2 / n - std::norm(mean)) / n) * model.vol_X();
  EXPECT_LT(std::abs(mean * model.vol_X() - equivariant_kernel(x, y, iso)), 4 * se);
}

TEST(Symmetry, MomentMapAndGammaConventions) {
  const auto action = LinearizedTorusAction::from_rows(1, {{1, -1}});
  Eigen::VectorXcd v(2);
  v << std::sqrt(0.3), std::sqrt(0.7);
  const PointX x = PointX::from_unit(v);
  EXPECT_NEAR(moment_map(x, action)[0], -(0.3 - 0.7), 1e-15);

  DiagonalSymmetry sym = DiagonalSymmetry::identity(1);
  sym.phi = {0.4, 1.0};
  sym.theta_A = 0.25;
  const PointX back = gamma_X(gamma_X_inverse(x, sym), sym);
  EXPECT_NEAR((back.coords() - x.coords()).norm(), 0.0, 1e-15);
  EXPECT_NEAR(std::arg(gamma_phase({2, 1}, sym)),
              std::remainder(3 * 0.25 - 2 * 0.4 - 1.0, 2 * kPi), 1e-14);
}

TEST(Symmetry, ValidationRejectsBadShapes) {
  EXPECT_THROW(LinearizedTorusAction::from_rows(2, {{1, -1}}), Error);
  const auto a = LinearizedTorusAction::from_rows(1, {{1, -1}, {1, 1}});
  EXPECT_THROW(a.validate(ProjectiveModel::make(1)), Error);
  DiagonalSymmetry s = DiagonalSymmetry::identity(2);
  EXPECT_THROW(s.validate(ProjectiveModel::make(1)), Error);
  EXPECT_TRUE(s.is_identity());
}
