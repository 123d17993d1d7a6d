#include "eqt/reduction.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace eqt;

namespace {

LinearizedTorusAction p2_action() {
  return LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
}

DiagonalSymmetry p2_symmetry() {
  DiagonalSymmetry s = DiagonalSymmetry::identity(2);
  s.phi = {0.0, 0.7, 1.9};
  return s;
}

PointX point_from(const std::vector<double> &u, const std::vector<double> &ph) {
  Eigen::VectorXcd v(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    v[j] = std::polar(std::sqrt(u[j]), ph[j]);
  }
  return PointX::normalized(v);
}

// Fubini-Study length of the G-orbit of pi(x) for g = 1.
double orbit_length(const PointX &x, const LinearizedTorusAction &action,
                    long long stab) {
  const int steps = 20000;
  double len = 0.0;
  Eigen::VectorXd t(1);
  PointX prev = x;
  for (int i = 1; i <= steps; ++i) {
    t[0] = 2 * kPi * i / steps;
    const PointX cur = act(t, x, action);
    len += std::acos(std::min(1.0, std::abs(hermitian_product(prev, cur))));
    prev = cur;
  }
  return len / static_cast<double>(stab);
}

// Whether gamma_0 fixes pi(x) in M0, by a dense search over the orbit.
bool fixed_by_search(const PointX &x, const DiagonalSymmetry &sym,
                     const LinearizedTorusAction &action) {
  const PointX gx = gamma_X(x, sym);
  double best = 0.0;
  Eigen::VectorXd t(1);
  for (int i = 0; i < 20000; ++i) {
    t[0] = 2 * kPi * i / 20000;
    best = std::max(best, std::abs(hermitian_product(gx, act(t, x, action))));
  }
  return best > 1.0 - 1e-6;
}

} // namespace

TEST(Reduction, FeasibleSupportsOfP2Example) {
  const auto s = feasible_supports(p2_action());
  const std::vector<Support> want = {{0, 1}, {0, 2}, {0, 1, 2}};
  ASSERT_EQ(s.size(), want.size());
  for (const auto &w : want) {
    EXPECT_NE(std::find(s.begin(), s.end(), w), s.end());
  }
  EXPECT_EQ(feasible_closure(p2_action(), {1, 2}), Support{});
  EXPECT_EQ(feasible_closure(p2_action(), {0, 1}), (Support{0, 1}));
}

TEST(Reduction, StabilizersOfP2Example) {
  EXPECT_EQ(stabilizer_order_M(p2_action(), {0, 1, 2}), 2);
  EXPECT_EQ(stabilizer_order_M(p2_action(), {0, 1}), 2);
  EXPECT_EQ(stabilizer_order_X(p2_action(), {0, 1, 2}), 1);
  const auto w2 = LinearizedTorusAction::from_rows(1, {{2, -2}});
  EXPECT_EQ(stabilizer_order_X(w2, {0, 1}), 2);
}

TEST(Reduction, EffectiveVolumeMatchesOrbitLength) {
  const auto action = p2_action();
  const PointX x = point_from({0.5, 0.3, 0.2}, {0.1, 0.7, -1.2});
  ASSERT_LT(moment_map(x, action).norm(), 1e-14);
  EXPECT_NEAR(effective_volume(x, action), orbit_length(x, action, 2), 1e-6);

  const auto other = LinearizedTorusAction::from_rows(2, {{2, -1, -3}});
  const PointX y = refine_to_zero_locus(point_from({0.6, 0.25, 0.15}, {0, 0, 0}), other);
  ASSERT_LT(moment_map(y, other).norm(), 1e-12);
  const long long stab = stabilizer_order_M(other, {0, 1, 2});
  EXPECT_NEAR(effective_volume(y, other), orbit_length(y, other, stab), 1e-6);
}

TEST(Reduction, EffectiveVolumeRankTwoMatchesFiniteDifferences) {
  const auto action = LinearizedTorusAction::from_rows(3, {{1, -1, 0, 0}, {0, 1, -1, 0}});
  const PointX x = refine_to_zero_locus(
      point_from({0.3, 0.3, 0.3, 0.1}, {0.2, 0.4, 0.6, 0.8}), action);
  const double h = 1e-6;
  std::vector<Eigen::VectorXcd> xi;
  for (int a = 0; a < 2; ++a) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(2);
    t[a] = h;
    Eigen::VectorXcd d = (act(t, x, action).coords() - act(-t, x, action).coords()) / (2 * h);
    d -= x.coords().dot(d) * x.coords();
    xi.push_back(d);
  }
  Eigen::Matrix2d G;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      G(a, b) = std::real(xi[b].dot(xi[a]));
    }
  }
  const double want = 4 * kPi * kPi * std::sqrt(G.determinant()) /
                      stabilizer_order_M(action, {0, 1, 2, 3});
  EXPECT_NEAR(effective_volume(x, action), want, 1e-6 * want);
}

TEST(Reduction, MomentJacobianMatchesSingularValues) {
  const auto action = LinearizedTorusAction::from_rows(3, {{1, -1, 0, 0}, {0, 1, -1, 0}});
  const PointX x = refine_to_zero_locus(
      point_from({0.3, 0.3, 0.3, 0.1}, {0.2, 0.4, 0.6, 0.8}), action);
  const Eigen::VectorXd sv = moment_singular_values_fd(x, action);
  EXPECT_NEAR(moment_jacobian(x, action), sv.prod(), 1e-6);
}

TEST(Reduction, ReducedVolumeOfP2ExampleAndErrorScaling) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const ReducedIntegral small = reduced_volume(p2_action(), model, 20000, 1);
  const ReducedIntegral large = reduced_volume(p2_action(), model, 80000, 2);
  EXPECT_NEAR(small.value, kPi / 2, 4 * small.stderr_);
  EXPECT_NEAR(large.value, kPi / 2, 4 * large.stderr_);
  // Four times the samples halves the error bar.
  EXPECT_NEAR(large.stderr_ / small.stderr_, 0.5, 0.1);
}

TEST(Reduction, ZeroDimensionalReductionIsExact) {
  const ProjectiveModel model = ProjectiveModel::make(1);
  const auto action = LinearizedTorusAction::from_rows(1, {{1, -1}});
  const ReducedIntegral v = reduced_volume(action, model, 100, 1);
  EXPECT_NEAR(v.value, 1.0, 1e-12);
  EXPECT_EQ(v.stderr_, 0.0);
}

TEST(Reduction, RefineLandsOnZeroLocus) {
  const auto action = LinearizedTorusAction::from_rows(2, {{2, -1, -3}});
  const PointX x = refine_to_zero_locus(point_from({0.5, 0.3, 0.2}, {0.3, 0.0, 1.0}), action);
  EXPECT_LT(moment_map(x, action).norm(), 1e-12);
  EXPECT_NEAR(std::arg(x[0]), 0.3, 1e-12);
}

TEST(Reduction, FixedComponentsAgreeWithOrbitSearch) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = p2_action();
  const auto sym = p2_symmetry();
  const auto comps = find_fixed_components(action, sym, model);
  ASSERT_EQ(comps.size(), 2u);
  for (const auto &c : comps) {
    EXPECT_EQ(c.d_l, 0);
    EXPECT_TRUE(fixed_by_search(c.representative, sym, action));
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  std::uniform_real_distribution<double> ph(0.0, 2 * kPi);
  for (int i = 0; i < 5; ++i) {
    const double a = u(rng);
    const PointX x = point_from({0.5, a, 0.5 - a}, {ph(rng), ph(rng), ph(rng)});
    EXPECT_FALSE(fixed_by_search(x, sym, action));
  }
}

TEST(Reduction, IdentitySymmetryFixesEverything) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto comps =
      find_fixed_components(p2_action(), DiagonalSymmetry::identity(2), model);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].support, (Support{0, 1, 2}));
  EXPECT_EQ(comps[0].d_l, 1);
  EXPECT_EQ(comps[0].lifts.size(), 2u);
}

TEST(Reduction, DeterminantFactorsForTrivialGroup) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::trivial(2);
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.3, 1.4, 2.8};
  sym.theta_A = 0.6;
  const auto comps = find_fixed_components(action, sym, model);
  ASSERT_EQ(comps.size(), 3u);
  for (auto c : comps) {
    c = component_invariants(c, sym, action, model, {});
    const int j = c.support[0];
    cplx want{1.0, 0.0};
    for (int l = 0; l < 3; ++l) {
      if (l != j) {
        want *= 1.0 - std::polar(1.0, -(sym.phi[l] - sym.phi[j]));
      }
    }
    EXPECT_NEAR(std::abs(c.c_l - want), 0.0, 1e-12);
    EXPECT_LT(c.c_l_fd_error, 1e-6);
    EXPECT_NEAR(std::abs(c.h_l - std::polar(1.0, sym.theta_A - sym.phi[j])), 0.0, 1e-12);
  }
}

TEST(Reduction, PositiveDimensionalComponentInvariants) {
  const ProjectiveModel model = ProjectiveModel::make(3);
  const auto action = LinearizedTorusAction::from_rows(3, {{1, 1, -1, -1}});
  DiagonalSymmetry sym = DiagonalSymmetry::identity(3);
  sym.phi = {0.0, 0.0, 0.0, 1.2};
  const auto comps = find_fixed_components(action, sym, model);
  bool found = false;
  for (auto c : comps) {
    c = component_invariants(c, sym, action, model, {{0}});
    if (c.d_l == 1) {
      found = true;
      EXPECT_LT(c.c_l_fd_error, 1e-6);
      EXPECT_LT(c.c_l_constancy_spread, 1e-6);
      EXPECT_LT(c.g_m_spread, 1e-8);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Reduction, DifferentialFixesTangentDirections) {
  const ProjectiveModel model = ProjectiveModel::make(3);
  const auto action = LinearizedTorusAction::trivial(3);
  DiagonalSymmetry sym = DiagonalSymmetry::identity(3);
  sym.phi = {0.0, 0.0, 0.9, 2.0};
  const auto comps = find_fixed_components(action, sym, model);
  for (const auto &c : comps) {
    if (c.d_l != 1) {
      continue;
    }
    const Eigen::MatrixXcd D =
        reduced_differential_fd(c.representative, c.g_m, sym, action);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(D);
    int near_one = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      near_one += std::abs(es.eigenvalues()[i] - 1.0) < 1e-6 ? 1 : 0;
    }
    EXPECT_EQ(near_one, 1);
  }
}

TEST(Reduction, FbarClosedFormOnCoordinateLine) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::trivial(2);
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.0, 0.0, 1.3};
  const auto comps = find_fixed_components(action, sym, model);
  for (const auto &c : comps) {
    const auto v = f_bar_integral(c, Observable::u_monomial({1, 0, 0}), action, model, 10, 1);
    if (c.support == Support{0, 1}) {
      EXPECT_NEAR(v.value, kPi / 2, 1e-12);
    } else {
      EXPECT_EQ(c.support, Support{2});
      EXPECT_NEAR(v.value, 0.0, 1e-15);
    }
  }
}

TEST(Reduction, FbarMonteCarloMatchesSymmetry) {
  // On the P^2 example with gamma = id, int_{M0} u_1 = vol(M0)/4 since
  // u_0 = 1/2 and u_1, u_2 are exchanged by symmetry.
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto comps =
      find_fixed_components(p2_action(), DiagonalSymmetry::identity(2), model);
  const auto v = f_bar_integral(comps[0], Observable::u_monomial({0, 1, 0}), p2_action(),
                                model, 40000, 5);
  EXPECT_NEAR(v.value, kPi / 8, 4 * v.stderr_);
}

TEST(Reduction, GAverageKillsNoninvariantTerms) {
  Observable f;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
  h(0, 1) = 1.0;
  h(1, 0) = 1.0;
  f.h_term = h;
  const PointX x = point_from({0.5, 0.3, 0.2}, {0.0, 0.0, 0.0});
  EXPECT_NEAR(g_average(f, x, p2_action()), 0.0, 1e-14);
  const Observable u = Observable::u_monomial({1, 1, 0});
  EXPECT_NEAR(g_average(u, x, p2_action()), 0.15, 1e-14);
}

TEST(Reduction, ViolationsCarryWitnesses) {
  const ProjectiveModel m2 = ProjectiveModel::make(2);
  const auto singular = LinearizedTorusAction::from_rows(2, {{1, -1, 0}});
  try {
    check_regular_and_free(singular, m2, 500, 1);
    FAIL() << "expected a hypothesis violation";
  } catch (const HypothesisViolation &e) {
    EXPECT_EQ(e.code(), ErrorCode::reduction_hypothesis_violated);
    ASSERT_TRUE(e.diagnostics.witness.has_value());
    EXPECT_EQ(support_of(*e.diagnostics.witness), Support{2});
  }
  const auto not_free = LinearizedTorusAction::from_rows(1, {{2, -2}});
  EXPECT_THROW(check_regular_and_free(not_free, ProjectiveModel::make(1), 500, 1),
               HypothesisViolation);
  const auto empty = LinearizedTorusAction::from_rows(1, {{1, 1}});
  const auto d = check_regular_and_free(empty, ProjectiveModel::make(1), 500, 1);
  EXPECT_TRUE(d.empty_locus);
}

TEST(Reduction, DiagnosticsOfP2Example) {
  const auto d = diagnose_reduction(p2_action(), ProjectiveModel::make(2), 5000, 2);
  EXPECT_TRUE(d.regular_value);
  EXPECT_TRUE(d.free_action);
  EXPECT_EQ(d.stabilizer_order_M, 2);
  EXPECT_LT(d.max_abs_phi, 1e-10);
  EXPECT_GT(d.min_singular_value, 0.1);
  EXPECT_NEAR(d.vol_M0, kPi / 2, 4 * d.vol_M0_stderr);
}

TEST(Reduction, DegenerateDeterminantFactorIsRejected) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  auto comps = find_fixed_components(p2_action(), p2_symmetry(), model);
  comps[0].lifts[0].c_l = 0.0;
  try {
    component_invariants(comps[0], p2_symmetry(), p2_action(), model, {{0}});
    FAIL() << "expected a degenerate symmetry error";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_symmetry);
  }
}

TEST(Reduction, ComponentsCsvHeader) {
  std::ostringstream os;
  write_components_csv({}, os);
  EXPECT_EQ(os.str().substr(0, 23), "index,support,d_l,c_l_r");
}
