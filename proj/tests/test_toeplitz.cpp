#include "eqt/error.hpp"
#include "eqt/toeplitz.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace eqt;

namespace {

PointX random_point(std::mt19937_64 &rng, int n) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (int j = 0; j < n; ++j) {
    v[j] = cplx(g(rng), g(rng));
  }
  return PointX::normalized(v);
}

Observable mixed_observable() {
  Observable f = Observable::u_monomial({1, 0, 1}, 0.7);
  f.u_terms[{0, 2, 0}] = -0.4;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
  h(0, 1) = cplx(0.3, -0.2);
  h(1, 0) = std::conj(h(0, 1));
  h(2, 2) = 0.5;
  f.h_term = h;
  return f;
}

} // namespace

TEST(Toeplitz, EntriesMatchSphereMonteCarlo) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const Observable f = mixed_observable();
  const std::vector<std::pair<MultiIndex, MultiIndex>> pairs = {
      {{2, 1, 0}, {2, 1, 0}}, {{2, 1, 0}, {3, 0, 0}}, {{1, 1, 1}, {0, 2, 1}}};
  std::mt19937_64 rng(21);
  const int n = 300000;
  for (const auto &[a, b] : pairs) {
    cplx acc{0.0, 0.0};
    double acc2 = 0.0;
    std::mt19937_64 local(rng());
    for (int i = 0; i < n; ++i) {
      const PointX x = random_point(local, 3);
      const cplx v = f(x) * monomial_value(a, x) * std::conj(monomial_value(b, x));
      acc += v;
      acc2 += std::norm(v);
    }
    const double scale =
        model.vol_X() / std::sqrt(monomial_norm(a, model) * monomial_norm(b, model));
    const cplx mean = acc / static_cast<double>(n);
    const double se = std::sqrt((acc2 / n - std::norm(mean)) / n) * scale;
    EXPECT_LT(std::abs(mean * scale - toeplitz_entry(f, a, b, model)), 4 * se + 1e-12);
  }
}

TEST(Toeplitz, ConstantObservableGivesIdentity) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::trivial(2);
  const IsotypeBasis iso = isotype_basis(5, {}, action, make_section_basis(5, model));
  const Eigen::MatrixXcd T = toeplitz_matrix(Observable::constant(2, 1.0), iso, model);
  EXPECT_NEAR((T - Eigen::MatrixXcd::Identity(T.rows(), T.cols())).norm(), 0.0, 1e-12);
}

TEST(Toeplitz, MatrixIsHermitianForRealObservables) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::trivial(2);
  const IsotypeBasis iso = isotype_basis(4, {}, action, make_section_basis(4, model));
  const Eigen::MatrixXcd T = toeplitz_matrix(mixed_observable(), iso, model);
  EXPECT_NEAR((T - T.adjoint()).norm(), 0.0, 1e-12);
}

TEST(Toeplitz, D1TraceClosedForm) {
  const ProjectiveModel model = ProjectiveModel::make(1);
  const auto action = LinearizedTorusAction::trivial(1);
  for (int k = 0; k <= 100; ++k) {
    const cplx t = trace_psi(k, {}, Observable::u_monomial({1, 0}),
                             DiagonalSymmetry::identity(1), action, model);
    EXPECT_NEAR(t.real(), (k + 1) / 2.0, 1e-10);
    EXPECT_NEAR(t.imag(), 0.0, 1e-14);
  }
}

TEST(Toeplitz, TraceIsBasisIndependent) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, 0, -1}});
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.1, 0.9, 2.0};
  sym.theta_A = 0.3;
  const Observable f = mixed_observable();
  const int k = 7;
  const IsotypeLabel lab{0};
  const long long dim =
      isotype_basis(k, lab, action, make_section_basis(k, model)).indices.size();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd Z(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      Z(i, j) = cplx(g(rng), g(rng));
    }
  }
  const Eigen::MatrixXcd U = Eigen::HouseholderQR<Eigen::MatrixXcd>(Z).householderQ();
  const cplx fast = trace_psi(k, lab, f, sym, action, model);
  const cplx dense = trace_psi_dense(k, lab, f, sym, action, model);
  const cplx remixed = trace_psi_dense(k, lab, f, sym, action, model, &U);
  EXPECT_NEAR(std::abs(fast - dense), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(fast - remixed), 0.0, 1e-10);
}

TEST(Toeplitz, TraceMatchesKernelQuadrature) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, 0}});
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.5, 1.7, 2.9};
  sym.theta_A = 1.1;
  const Observable f = mixed_observable();
  const int k = 5;
  const IsotypeLabel lab{1};
  const cplx exact = trace_psi(k, lab, f, sym, action, model);
  const auto q = trace_via_kernel_quadrature(k, lab, f, sym, action, model, 1 << 15, 4);
  EXPECT_LT(std::abs(q.value - exact), 4 * q.stderr_);
}

TEST(Toeplitz, ThetaShiftMultipliesTraceByPhase) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::trivial(2);
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.2, 1.0, 2.2};
  DiagonalSymmetry shifted = sym;
  shifted.theta_A += 0.37;
  const Observable f = mixed_observable();
  for (int k : {3, 8, 15}) {
    const cplx a = trace_psi(k, {}, f, sym, action, model);
    const cplx b = trace_psi(k, {}, f, shifted, action, model);
    EXPECT_NEAR(std::abs(b - std::polar(1.0, 0.37 * k) * a), 0.0, 1e-12);
  }
}

TEST(Toeplitz, SweepIsDeterministicAcrossThreadCounts) {
  const ProjectiveModel model = ProjectiveModel::make(2);
  const auto action = LinearizedTorusAction::from_rows(2, {{1, -1, -1}});
  DiagonalSymmetry sym = DiagonalSymmetry::identity(2);
  sym.phi = {0.0, 0.7, 1.9};
  std::vector<int> ks;
  for (int k = 2; k <= 60; k += 2) {
    ks.push_back(k);
  }
  const auto rule = [](int) { return IsotypeLabel{0}; };
  const TraceSeries one = trace_sweep(ks, rule, mixed_observable(), sym, action, model, 1);
  const TraceSeries four = trace_sweep(ks, rule, mixed_observable(), sym, action, model, 4);
  std::ostringstream a;
  std::ostringstream b;
  write_trace_csv(one, a);
  write_trace_csv(four, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "k,label,trace_re,trace_im,dim,method");
}

TEST(Toeplitz, SweepRejectsUnsortedLevels) {
  EXPECT_THROW(trace_sweep({3, 2}, [](int) { return IsotypeLabel{}; },
                           Observable::constant(1), DiagonalSymmetry::identity(1),
                           LinearizedTorusAction::trivial(1), ProjectiveModel::make(1)),
               Error);
}

TEST(Toeplitz, ObservableValidation) {
  Observable f = Observable::u_monomial({1, 0});
  EXPECT_THROW(f.validate(ProjectiveModel::make(2)), Error);
  Observable g;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
  h(0, 1) = 1.0;
  g.h_term = h;
  EXPECT_THROW(g.validate(ProjectiveModel::make(1)), Error);
}

TEST(Toeplitz, FormatDoubleRoundTrips) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(-0.0), "0");
}
