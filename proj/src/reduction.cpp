#include "eqt/reduction.hpp"

#include "eqt/error.hpp"
#include "eqt/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace eqt {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kZeroTol = 1e-6;
constexpr double kPhaseTol = 1e-9;

// Rows: sum u = 1, W u = 0, restricted to the columns in S.
Eigen::MatrixXd affine_constraints(const LinearizedTorusAction &action,
                                   const Support &S) {
  Eigen::MatrixXd A(action.g + 1, static_cast<Eigen::Index>(S.size()));
  for (std::size_t c = 0; c < S.size(); ++c) {
    A(0, c) = 1.0;
    for (int i = 0; i < action.g; ++i) {
      A(i + 1, c) = static_cast<double>(action.W(i, S[c]));
    }
  }
  return A;
}

Eigen::VectorXd unit_rhs(int g) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(g + 1);
  b[0] = 1.0;
  return b;
}

// Rows (1, w_j) for j in S.
IntMatrix phase_rows(const LinearizedTorusAction &action, const Support &S) {
  IntMatrix A(static_cast<Eigen::Index>(S.size()), action.g + 1);
  for (std::size_t r = 0; r < S.size(); ++r) {
    A(r, 0) = 1;
    for (int i = 0; i < action.g; ++i) {
      A(r, i + 1) = action.W(i, S[r]);
    }
  }
  return A;
}

Support all_coords(int n) {
  Support s(n);
  for (int j = 0; j < n; ++j) {
    s[j] = j;
  }
  return s;
}

// Max-min LP: u_j = s + v_j, maximize s. Returns (s, u).
std::optional<std::pair<double, Eigen::VectorXd>>
max_min_point(const LinearizedTorusAction &action, const Support &S) {
  if (S.empty()) {
    return std::nullopt;
  }
  const Eigen::MatrixXd A = affine_constraints(action, S);
  const int m = static_cast<int>(S.size());
  Eigen::MatrixXd Ab(A.rows(), m + 1);
  Ab.col(0) = A.rowwise().sum();
  Ab.rightCols(m) = A;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m + 1);
  c[0] = 1.0;
  const auto sol = maximize(c, Ab, unit_rhs(action.g));
  if (!sol) {
    return std::nullopt;
  }
  const double s = sol->x[0];
  Eigen::VectorXd u = sol->x.tail(m).array() + s;
  return std::make_pair(s, u);
}

Eigen::VectorXcd horizontal(const Eigen::VectorXcd &v, const Eigen::VectorXcd &x) {
  return v - x.dot(v) * x;
}

double real_inner(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b) {
  return std::real(b.dot(a));
}

// Orthonormal complex basis of the complement of span_C(cols).
Eigen::MatrixXcd complement_basis(const Eigen::MatrixXcd &cols) {
  const int n = static_cast<int>(cols.rows());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(cols);
  const int r = static_cast<int>(qr.rank());
  Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  return Q.rightCols(n - r);
}

Eigen::MatrixXcd weighted_columns(const PointX &x,
                                  const LinearizedTorusAction &action) {
  Eigen::MatrixXcd K(action.n, action.g + 1);
  K.col(0) = x.coords();
  for (int a = 0; a < action.g; ++a) {
    for (int j = 0; j < action.n; ++j) {
      K(j, a + 1) = static_cast<double>(action.W(a, j)) * x[j];
    }
  }
  return K;
}

PointX embed(const Support &E, const Eigen::VectorXd &u,
             const Eigen::VectorXd &phases, int n) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  for (std::size_t c = 0; c < E.size(); ++c) {
    v[E[c]] = std::polar(std::sqrt(std::max(u[c], 0.0)), phases[c]);
  }
  return PointX::normalized(v);
}

std::string format_support(const Support &S) {
  std::string s = "{";
  for (std::size_t i = 0; i < S.size(); ++i) {
    s += (i ? "," : "") + std::to_string(S[i]);
  }
  return s + "}";
}

bool is_subset(const Support &a, const Support &b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

struct PivotChart {
  std::vector<int> pivots; // positions within E
  std::vector<int> free;   // positions within E
  Eigen::MatrixXd B_inv;
  Eigen::MatrixXd A_free;
  double abs_det = 0.0;
};

PivotChart make_pivot_chart(const LinearizedTorusAction &action, const Support &E) {
  const Eigen::MatrixXd A = affine_constraints(action, E);
  const int nE = static_cast<int>(E.size());
  const int r = action.g + 1;
  if (nE < r) {
    fail(ErrorCode::reduction_hypothesis_violated,
         "support " + format_support(E) + " is too small for a regular zero locus");
  }
  PivotChart best;
  std::vector<bool> pick(nE, false);
  std::fill(pick.begin(), pick.begin() + r, true);
  do {
    std::vector<int> piv;
    for (int c = 0; c < nE; ++c) {
      if (pick[c]) {
        piv.push_back(c);
      }
    }
    Eigen::MatrixXd B(r, r);
    for (int c = 0; c < r; ++c) {
      B.col(c) = A.col(piv[c]);
    }
    const double det = std::abs(B.determinant());
    if (det > best.abs_det + 1e-12) {
      best.abs_det = det;
      best.pivots = piv;
      best.B_inv = B.inverse();
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  if (best.abs_det < 1e-12) {
    fail(ErrorCode::reduction_hypothesis_violated,
         "moment constraints are rank deficient on support " + format_support(E));
  }
  for (int c = 0; c < nE; ++c) {
    if (std::find(best.pivots.begin(), best.pivots.end(), c) == best.pivots.end()) {
      best.free.push_back(c);
    }
  }
  best.A_free.resize(r, static_cast<Eigen::Index>(best.free.size()));
  for (std::size_t c = 0; c < best.free.size(); ++c) {
    best.A_free.col(c) = A.col(best.free[c]);
  }
  return best;
}

} // namespace

// --- support-pattern geometry ---------------------------------------------

std::vector<Support> feasible_supports(const LinearizedTorusAction &action) {
  std::vector<Support> out;
  const int n = action.n;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    Support S;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) {
        S.push_back(j);
      }
    }
    const auto p = max_min_point(action, S);
    if (p && p->first > kFeasTol) {
      out.push_back(S);
    }
  }
  return out;
}

Support feasible_closure(const LinearizedTorusAction &action, const Support &E) {
  Support out;
  if (E.empty()) {
    return out;
  }
  const Eigen::MatrixXd A = affine_constraints(action, E);
  const Eigen::VectorXd b = unit_rhs(action.g);
  for (std::size_t c = 0; c < E.size(); ++c) {
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(E.size()));
    obj[c] = 1.0;
    const auto sol = maximize(obj, A, b);
    if (!sol) {
      return {};
    }
    if (sol->objective > kFeasTol) {
      out.push_back(E[c]);
    }
  }
  return out;
}

std::optional<PointX> interior_point(const LinearizedTorusAction &action,
                                     const Support &E) {
  const auto p = max_min_point(action, E);
  if (!p || p->first <= kFeasTol) {
    return std::nullopt;
  }
  const Eigen::VectorXd phases = Eigen::VectorXd::Zero(p->second.size());
  return refine_to_zero_locus(embed(E, p->second, phases, action.n), action);
}

long long stabilizer_order_M(const LinearizedTorusAction &action,
                             const Support &S) {
  if (action.g == 0) {
    return 1;
  }
  if (S.size() < 2) {
    return 0;
  }
  IntMatrix A(static_cast<Eigen::Index>(S.size()) - 1, action.g);
  for (std::size_t r = 1; r < S.size(); ++r) {
    for (int i = 0; i < action.g; ++i) {
      A(r - 1, i) = action.W(i, S[r]) - action.W(i, S[0]);
    }
  }
  return kernel_torsion_order(A);
}

long long stabilizer_order_X(const LinearizedTorusAction &action,
                             const Support &S) {
  if (action.g == 0) {
    return 1;
  }
  IntMatrix A(static_cast<Eigen::Index>(S.size()), action.g);
  for (std::size_t r = 0; r < S.size(); ++r) {
    for (int i = 0; i < action.g; ++i) {
      A(r, i) = action.W(i, S[r]);
    }
  }
  return kernel_torsion_order(A);
}

Support support_of(const PointX &x, double tol) {
  Support s;
  for (int j = 0; j < x.size(); ++j) {
    if (std::abs(x[j]) > tol) {
      s.push_back(j);
    }
  }
  return s;
}

PointX refine_to_zero_locus(const PointX &x, const LinearizedTorusAction &action,
                            double tol) {
  if (action.g == 0) {
    return x;
  }
  const Support S = support_of(x);
  const Eigen::MatrixXd A = affine_constraints(action, S);
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  Eigen::VectorXd u(static_cast<Eigen::Index>(S.size()));
  Eigen::VectorXd ph(static_cast<Eigen::Index>(S.size()));
  for (std::size_t c = 0; c < S.size(); ++c) {
    u[c] = std::norm(x[S[c]]);
    ph[c] = std::arg(x[S[c]]);
  }
  const Eigen::VectorXd b = unit_rhs(action.g);
  for (int it = 0; it < 20; ++it) {
    const Eigen::VectorXd res = A * u - b;
    if (res.tail(action.g).norm() <= tol && std::abs(res[0]) <= tol) {
      break;
    }
    const Eigen::VectorXd next = u - cod.solve(res);
    if (next.minCoeff() <= 0.0) {
      break;
    }
    u = next;
  }
  return embed(S, u, ph, action.n);
}

// --- orbit geometry -------------------------------------------------------

double effective_volume(const PointX &x, const LinearizedTorusAction &action) {
  if (action.g == 0) {
    return 1.0;
  }
  const double phi = moment_map(x, action).norm();
  require(phi <= kZeroTol, "effective volume needs a point on the zero locus");
  std::vector<Eigen::VectorXcd> xi;
  for (int a = 0; a < action.g; ++a) {
    Eigen::VectorXcd v(action.n);
    for (int j = 0; j < action.n; ++j) {
      v[j] = cplx(0.0, static_cast<double>(action.W(a, j))) * x[j];
    }
    xi.push_back(horizontal(v, x.coords()));
  }
  Eigen::MatrixXd G(action.g, action.g);
  for (int a = 0; a < action.g; ++a) {
    for (int b = 0; b < action.g; ++b) {
      G(a, b) = real_inner(xi[a], xi[b]);
    }
  }
  const double det = G.determinant();
  const long long stab = stabilizer_order_M(action, support_of(x));
  if (det <= 1e-14 || stab == 0) {
    fail(ErrorCode::reduction_hypothesis_violated,
         "degenerate orbit: the action is not locally free at this point");
  }
  return std::pow(2.0 * kPi, action.g) * std::sqrt(det) /
         static_cast<double>(stab);
}

double moment_jacobian(const PointX &x, const LinearizedTorusAction &action) {
  if (action.g == 0) {
    return 1.0;
  }
  std::vector<Eigen::VectorXcd> grad;
  for (int a = 0; a < action.g; ++a) {
    Eigen::VectorXcd v(action.n);
    for (int j = 0; j < action.n; ++j) {
      v[j] = -2.0 * static_cast<double>(action.W(a, j)) * x[j];
    }
    grad.push_back(horizontal(v, x.coords()));
  }
  Eigen::MatrixXd G(action.g, action.g);
  for (int a = 0; a < action.g; ++a) {
    for (int b = 0; b < action.g; ++b) {
      G(a, b) = real_inner(grad[a], grad[b]);
    }
  }
  return std::sqrt(std::max(G.determinant(), 0.0));
}

Eigen::VectorXd moment_singular_values_fd(const PointX &x,
                                          const LinearizedTorusAction &action,
                                          double step) {
  if (action.g == 0) {
    return Eigen::VectorXd();
  }
  const Eigen::MatrixXcd H = complement_basis(x.coords());
  const int nh = static_cast<int>(H.cols());
  Eigen::MatrixXd J(action.g, 2 * nh);
  for (int b = 0; b < nh; ++b) {
    for (int part = 0; part < 2; ++part) {
      const Eigen::VectorXcd dir = part == 0 ? Eigen::VectorXcd(H.col(b))
                                             : Eigen::VectorXcd(cplx(0, 1) * H.col(b));
      const PointX p = PointX::normalized(x.coords() + step * dir);
      const PointX m = PointX::normalized(x.coords() - step * dir);
      J.col(2 * b + part) =
          (moment_map(p, action) - moment_map(m, action)) / (2.0 * step);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues();
}

// --- sampling the zero locus ------------------------------------------------

ZeroLocusSample sample_zero_locus(const LinearizedTorusAction &action,
                                  const ProjectiveModel &model, const Support &E,
                                  int n_samples, std::uint64_t seed) {
  require(n_samples >= 1, "sample count must be positive");
  const PivotChart chart = make_pivot_chart(action, E);
  const int nE = static_cast<int>(E.size());
  const int d_E = nE - 1;
  const double base = std::pow(kPi, d_E) / chart.abs_det;
  const Eigen::VectorXd e0 = unit_rhs(action.g);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ZeroLocusSample out;
  const int m = static_cast<int>(chart.free.size());
  const int draws = m == 0 ? 1 : n_samples;
  out.draws = draws;
  Eigen::VectorXd uE(nE);
  Eigen::VectorXd phases(nE);
  Eigen::VectorXd uF(m);
  for (int i = 0; i < draws; ++i) {
    for (int c = 0; c < m; ++c) {
      uF[c] = unif(rng);
    }
    for (int c = 0; c < nE; ++c) {
      phases[c] = m == 0 ? 0.0 : 2.0 * kPi * unif(rng);
    }
    const Eigen::VectorXd uP = chart.B_inv * (e0 - chart.A_free * uF);
    if (uP.minCoeff() <= 0.0) {
      continue;
    }
    for (int c = 0; c < m; ++c) {
      uE[chart.free[c]] = uF[c];
    }
    for (int c = 0; c <= action.g; ++c) {
      uE[chart.pivots[c]] = uP[c];
    }
    if (uE.minCoeff() <= 0.0) {
      continue;
    }
    const PointX z = refine_to_zero_locus(embed(E, uE, phases, model.n_coords()),
                                          action);
    const double w = base * moment_jacobian(z, action) / effective_volume(z, action);
    out.points.push_back(z);
    out.weights.push_back(w / draws);
  }
  return out;
}

ReducedIntegral integrate_over_reduced(
    const LinearizedTorusAction &action, const ProjectiveModel &model,
    const Support &E, const std::function<double(const PointX &)> &h,
    int n_samples, std::uint64_t seed) {
  const ZeroLocusSample zs = sample_zero_locus(action, model, E, n_samples, seed);
  ReducedIntegral r;
  r.n_samples = zs.draws;
  if (zs.draws == 1) {
    // Zero-dimensional reduced space: average over the orbit on a grid.
    if (zs.points.empty()) {
      return r;
    }
    const int per = 16;
    long long total = 1;
    for (int i = 0; i < action.g; ++i) {
      total *= per;
    }
    double acc = 0.0;
    Eigen::VectorXd ang(action.g);
    for (long long idx = 0; idx < total; ++idx) {
      long long rem = idx;
      for (int i = 0; i < action.g; ++i) {
        ang[i] = 2.0 * kPi * static_cast<double>(rem % per) / per;
        rem /= per;
      }
      acc += h(act(ang, zs.points[0], action));
    }
    r.value = zs.weights[0] * acc / static_cast<double>(total);
    return r;
  }
  const double n = zs.draws;
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < zs.points.size(); ++i) {
    const double y = n * zs.weights[i] * h(zs.points[i]);
    s1 += y;
    s2 += y * y;
  }
  const double mean = s1 / n;
  const double var = std::max(s2 / n - mean * mean, 0.0) * n / (n - 1.0);
  r.value = mean;
  r.stderr_ = std::sqrt(var / n);
  return r;
}

ReductionDiagnostics diagnose_reduction(const LinearizedTorusAction &action,
                                        const ProjectiveModel &model,
                                        int n_samples, std::uint64_t seed) {
  action.validate(model);
  ReductionDiagnostics diag;
  diag.feasible_supports = feasible_supports(action);
  if (diag.feasible_supports.empty()) {
    diag.empty_locus = true;
    return diag;
  }
  diag.regular_value = true;
  diag.free_action = true;
  for (const auto &S : diag.feasible_supports) {
    const IntMatrix A = phase_rows(action, S);
    if (integer_rank(A) < action.g + 1) {
      if (diag.violation.empty()) {
        diag.violation = "0 is not a regular value: orbits on support " +
                         format_support(S) + " have positive-dimensional stabilizers";
        diag.witness = interior_point(action, S);
      }
      diag.regular_value = false;
      continue;
    }
    const long long sx = stabilizer_order_X(action, S);
    if (sx != 1) {
      if (diag.violation.empty()) {
        diag.violation = "the lifted action is not free on support " +
                         format_support(S) + " (stabilizer order " +
                         std::to_string(sx) + ")";
        diag.witness = interior_point(action, S);
      }
      diag.free_action = false;
    }
    diag.stabilizer_order_M =
        std::max(diag.stabilizer_order_M, stabilizer_order_M(action, S));
  }
  if (!diag.regular_value) {
    return diag;
  }

  const Support E = feasible_closure(action, all_coords(action.n));
  const ZeroLocusSample zs =
      sample_zero_locus(action, model, E, std::min(n_samples, 10000), seed);
  diag.min_singular_value = std::numeric_limits<double>::infinity();
  diag.v_eff_min = std::numeric_limits<double>::infinity();
  double v_sum = 0.0;
  for (const auto &p : zs.points) {
    diag.max_abs_phi = std::max(diag.max_abs_phi, moment_map(p, action).norm());
    if (action.g > 0) {
      diag.min_singular_value = std::min(
          diag.min_singular_value, moment_singular_values_fd(p, action).minCoeff());
    }
    const double v = effective_volume(p, action);
    diag.v_eff_min = std::min(diag.v_eff_min, v);
    diag.v_eff_max = std::max(diag.v_eff_max, v);
    v_sum += v;
  }
  if (!zs.points.empty()) {
    diag.v_eff_mean = v_sum / static_cast<double>(zs.points.size());
  }
  if (action.g == 0) {
    diag.min_singular_value = 0.0;
  } else if (diag.min_singular_value < 1e-6) {
    diag.regular_value = false;
    diag.violation = "dPhi is nearly singular on the sampled zero locus";
  }
  const ReducedIntegral vol = reduced_volume(action, model, n_samples, seed);
  diag.vol_M0 = vol.value;
  diag.vol_M0_stderr = vol.stderr_;
  return diag;
}

ReductionDiagnostics check_regular_and_free(const LinearizedTorusAction &action,
                                            const ProjectiveModel &model,
                                            int n_samples, std::uint64_t seed) {
  ReductionDiagnostics diag = diagnose_reduction(action, model, n_samples, seed);
  if (!diag.empty_locus && (!diag.regular_value || !diag.free_action)) {
    std::ostringstream os;
    os << diag.violation;
    if (diag.witness) {
      os << "; witness |z|^2 = (";
      const Eigen::VectorXd u = diag.witness->moduli_squared();
      for (int j = 0; j < u.size(); ++j) {
        os << (j ? ", " : "") << u[j];
      }
      os << ")";
    }
    throw HypothesisViolation(os.str(), diag);
  }
  return diag;
}

ReducedIntegral reduced_volume(const LinearizedTorusAction &action,
                               const ProjectiveModel &model, int n_samples,
                               std::uint64_t seed) {
  const Support E = feasible_closure(action, all_coords(action.n));
  if (E.empty()) {
    fail(ErrorCode::reduction_hypothesis_violated,
         "the zero locus of the moment map is empty");
  }
  return integrate_over_reduced(
      action, model, E, [](const PointX &) { return 1.0; }, n_samples, seed);
}

double g_average(const Observable &f, const PointX &x,
                 const LinearizedTorusAction &action, int per_circle) {
  long long total = 1;
  for (int i = 0; i < action.g; ++i) {
    total *= per_circle;
  }
  double acc = 0.0;
  Eigen::VectorXd ang(action.g);
  for (long long idx = 0; idx < total; ++idx) {
    long long rem = idx;
    for (int i = 0; i < action.g; ++i) {
      ang[i] = 2.0 * kPi * static_cast<double>(rem % per_circle) / per_circle;
      rem /= per_circle;
    }
    acc += f(act(ang, x, action));
  }
  return acc / static_cast<double>(total);
}

// --- fixed components -----------------------------------------------------

namespace {

ComponentLift make_lift(const Eigen::VectorXd &sol, const Support &E,
                        const LinearizedTorusAction &action,
                        const DiagonalSymmetry &sym) {
  ComponentLift lift;
  lift.c_angle = sol[0];
  lift.t_angles = sol.tail(action.g);
  for (int j = 0; j < action.n; ++j) {
    if (std::binary_search(E.begin(), E.end(), j)) {
      continue;
    }
    // d gamma_0 acts on e_j by e^{i phi_j} t^{-w_j} / c.
    const double lam = sym.phi[j] - action.weight(j).dot(lift.t_angles) - lift.c_angle;
    lift.normal_angles.push_back(wrap_angle(lam));
    lift.c_l *= cplx(1.0, 0.0) - std::polar(1.0, -lam);
  }
  lift.h = std::polar(1.0, sym.theta_A - lift.c_angle);
  return lift;
}

std::vector<int> coincidence_set(const Eigen::VectorXd &sol,
                                 const LinearizedTorusAction &action,
                                 const DiagonalSymmetry &sym) {
  std::vector<int> E;
  for (int j = 0; j < action.n; ++j) {
    const double r = sol[0] + action.weight(j).dot(sol.tail(action.g)) - sym.phi[j];
    if (angle_distance(r) < kPhaseTol) {
      E.push_back(j);
    }
  }
  return E;
}

} // namespace

std::vector<FixedComponentReport>
find_fixed_components(const LinearizedTorusAction &action,
                      const DiagonalSymmetry &sym, const ProjectiveModel &model) {
  action.validate(model);
  sym.validate(model);
  const int n = action.n;

  std::set<Support> candidates;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    Support S;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) {
        S.push_back(j);
      }
    }
    const IntMatrix A = phase_rows(action, S);
    if (integer_rank(A) < action.g + 1) {
      continue;
    }
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(S.size()));
    for (std::size_t r = 0; r < S.size(); ++r) {
      rhs[r] = sym.phi[S[r]];
    }
    const PhaseSolutions ps = solve_phase_system(A, rhs, kPhaseTol);
    if (!ps.consistent) {
      continue;
    }
    for (const auto &sol : ps.solutions) {
      const Support closure = feasible_closure(action, coincidence_set(sol, action, sym));
      if (!closure.empty()) {
        candidates.insert(closure);
      }
    }
  }

  std::vector<Support> maximal;
  for (const auto &c : candidates) {
    bool contained = false;
    for (const auto &o : candidates) {
      if (o != c && is_subset(c, o)) {
        contained = true;
        break;
      }
    }
    if (!contained) {
      maximal.push_back(c);
    }
  }

  std::vector<FixedComponentReport> reports;
  for (const auto &E : maximal) {
    const IntMatrix A = phase_rows(action, E);
    if (integer_rank(A) < action.g + 1) {
      fail(ErrorCode::reduction_hypothesis_violated,
           "fixed component on support " + format_support(E) +
               " has positive-dimensional stabilizers");
    }
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(E.size()));
    for (std::size_t r = 0; r < E.size(); ++r) {
      rhs[r] = sym.phi[E[r]];
    }
    const PhaseSolutions ps = solve_phase_system(A, rhs, kPhaseTol);
    FixedComponentReport rep;
    rep.support = E;
    rep.d_l = static_cast<int>(E.size()) - 1 - action.g;
    for (const auto &sol : ps.solutions) {
      rep.lifts.push_back(make_lift(sol, E, action, sym));
    }
    const ComponentLift &principal = rep.lifts.front();
    rep.g_m = principal.t_angles;
    rep.c_l = principal.c_l;
    rep.h_l = principal.h;
    const auto rp = interior_point(action, E);
    require(rp.has_value(), "fixed component without an interior point");
    rep.representative = *rp;
    reports.push_back(std::move(rep));
  }

  // Components whose closures meet are not cleanly separated.
  for (std::size_t a = 0; a < reports.size(); ++a) {
    for (std::size_t b = a + 1; b < reports.size(); ++b) {
      Support common;
      std::set_intersection(reports[a].support.begin(), reports[a].support.end(),
                            reports[b].support.begin(), reports[b].support.end(),
                            std::back_inserter(common));
      if (!common.empty() && !feasible_closure(action, common).empty()) {
        reports[a].suspect_nongeneric = true;
        reports[b].suspect_nongeneric = true;
      }
    }
  }
  return reports;
}

Eigen::MatrixXcd reduced_differential_fd(const PointX &x,
                                         const Eigen::VectorXd &t_angles,
                                         const DiagonalSymmetry &sym,
                                         const LinearizedTorusAction &action,
                                         double step) {
  const Eigen::MatrixXcd H = complement_basis(weighted_columns(x, action));
  const int nh = static_cast<int>(H.cols());
  const Eigen::VectorXcd &x0 = x.coords();

  // gamma followed by mu_{t^{-1}}, read in the affine chart centred at x.
  auto chart_image = [&](const Eigen::VectorXcd &v) -> Eigen::VectorXcd {
    Eigen::VectorXcd z = x0 + v;
    for (int j = 0; j < action.n; ++j) {
      z[j] *= std::polar(1.0, sym.phi[j] - action.weight(j).dot(t_angles));
    }
    const cplx along = x0.dot(z);
    const Eigen::VectorXcd w = (z - along * x0) / along;
    return H.adjoint() * w;
  };

  Eigen::MatrixXcd D(nh, nh);
  for (int b = 0; b < nh; ++b) {
    const Eigen::VectorXcd dir = H.col(b);
    D.col(b) = (chart_image(step * dir) - chart_image(-step * dir)) / (2.0 * step);
  }
  return D;
}

FixedComponentReport component_invariants(FixedComponentReport report,
                                          const DiagonalSymmetry &sym,
                                          const LinearizedTorusAction &action,
                                          const ProjectiveModel &model,
                                          const std::vector<IsotypeLabel> &labels,
                                          const Conventions &conv,
                                          std::uint64_t seed) {
  require(!report.lifts.empty(), "component has no lifts");
  for (auto &lift : report.lifts) {
    if (std::abs(lift.c_l) < 1e-8) {
      fail(ErrorCode::degenerate_symmetry,
           "gamma_r has eigenvalue 1 on the normal space of component " +
               format_support(report.support));
    }
  }

  // Residual circle phase: gamma_X^{-1}(x) = r_{e^{i beta}} mu_{g_m^{-1}}(x).
  const PointX &x = report.representative;
  const PointX lhs = gamma_X_inverse(x, sym);
  const PointX rhs = act(-report.g_m, x, action);
  const cplx ratio = hermitian_product(lhs, rhs);
  if (std::abs(std::abs(ratio) - 1.0) > 1e-8) {
    fail(ErrorCode::numeric_failure,
         "representative is not fixed by the descended symmetry");
  }
  report.beta = std::arg(ratio);
  const double sgn = conv.h_orientation >= 0 ? 1.0 : -1.0;
  for (auto &lift : report.lifts) {
    const PointX r = act(-lift.t_angles, x, action);
    lift.h = std::polar(1.0, sgn * std::arg(hermitian_product(lhs, r)));
  }
  report.h_l = report.lifts.front().h;
  report.c_l = report.lifts.front().c_l;

  for (const auto &lab : labels) {
    report.chi_values[lab] = character(lab, report.g_m);
  }

  // Determinant factor from the finite-difference differential.
  auto fd_c_l = [&](const PointX &p) {
    const Eigen::MatrixXcd D = reduced_differential_fd(p, report.g_m, sym, action);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(D);
    std::vector<cplx> ev(es.eigenvalues().data(),
                         es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
      return std::abs(a - 1.0) < std::abs(b - 1.0);
    });
    cplx c{1.0, 0.0};
    for (std::size_t i = static_cast<std::size_t>(report.d_l); i < ev.size(); ++i) {
      c *= cplx(1.0, 0.0) - 1.0 / ev[i];
    }
    return c;
  };
  report.c_l_finite_difference = fd_c_l(x);
  report.c_l_fd_error = std::abs(report.c_l_finite_difference - report.c_l);

  report.c_l_constancy_spread = 0.0;
  report.g_m_spread = 0.0;
  if (report.d_l > 0) {
    const ZeroLocusSample zs =
        sample_zero_locus(action, model, report.support, 64, seed);
    int used = 0;
    for (const auto &p : zs.points) {
      if (used == 3) {
        break;
      }
      report.c_l_constancy_spread =
          std::max(report.c_l_constancy_spread,
                   std::abs(fd_c_l(p) - report.c_l_finite_difference));
      // Phase equations solved at p must return the same torus element.
      const Support sp = support_of(p);
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(sp.size()));
      for (std::size_t r = 0; r < sp.size(); ++r) {
        rhs[r] = sym.phi[sp[r]];
      }
      const PhaseSolutions ps = solve_phase_system(phase_rows(action, sp), rhs);
      double best = std::numeric_limits<double>::infinity();
      for (const auto &sol : ps.solutions) {
        double dist = 0.0;
        for (int i = 0; i < action.g; ++i) {
          dist = std::max(dist, angle_distance(sol[i + 1] - report.g_m[i]));
        }
        best = std::min(best, dist);
      }
      if (action.g > 0) {
        report.g_m_spread = std::max(report.g_m_spread, best);
      }
      ++used;
    }
  }
  report.completed = true;
  return report;
}

ReducedIntegral f_bar_integral(const FixedComponentReport &report,
                               const Observable &f,
                               const LinearizedTorusAction &action,
                               const ProjectiveModel &model, int n_samples,
                               std::uint64_t seed) {
  ReducedIntegral r;
  if (report.d_l == 0) {
    r.value = g_average(f, report.representative, action);
    r.n_samples = 1;
    return r;
  }
  if (action.g == 0) {
    // F_l is the coordinate subspace P(C^E): closed-form moments.
    const int dE = static_cast<int>(report.support.size()) - 1;
    const double vol = std::exp(dE * std::log(kPi) - log_factorial(dE));
    double v = 0.0;
    for (const auto &[beta, c] : f.u_terms) {
      bool inside = true;
      double lr = log_factorial(dE) - log_factorial(dE + degree(beta));
      for (int j = 0; j < action.n; ++j) {
        if (beta[j] == 0) {
          continue;
        }
        if (!std::binary_search(report.support.begin(), report.support.end(), j)) {
          inside = false;
          break;
        }
        lr += log_factorial(beta[j]);
      }
      if (inside) {
        v += c * vol * std::exp(lr);
      }
    }
    if (f.h_term) {
      for (int j : report.support) {
        v += std::real((*f.h_term)(j, j)) * vol / (dE + 1);
      }
    }
    r.value = v;
    r.n_samples = 0;
    return r;
  }
  return integrate_over_reduced(
      action, model, report.support, [&](const PointX &p) { return f(p); },
      n_samples, seed);
}

void write_components_csv(const std::vector<FixedComponentReport> &reports,
                          std::ostream &os) {
  os << "index,support,d_l,c_l_re,c_l_im,h_re,h_im,n_lifts,g_m,chi,fbar,"
        "fbar_stderr,nongeneric\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto &r = reports[i];
    std::string sup;
    for (std::size_t j = 0; j < r.support.size(); ++j) {
      sup += (j ? ";" : "") + std::to_string(r.support[j]);
    }
    std::string gm;
    for (int j = 0; j < r.g_m.size(); ++j) {
      gm += (j ? ";" : "") + format_double(r.g_m[j]);
    }
    std::string chi;
    for (const auto &[lab, v] : r.chi_values) {
      if (!chi.empty()) {
        chi += ' ';
      }
      chi += "[" + format_label(lab) + "]=" + format_double(v.real()) + ":" +
             format_double(v.imag());
    }
    os << i << ',' << sup << ',' << r.d_l << ',' << format_double(r.c_l.real())
       << ',' << format_double(r.c_l.imag()) << ',' << format_double(r.h_l.real())
       << ',' << format_double(r.h_l.imag()) << ',' << r.lifts.size() << ','
       << gm << ',' << chi << ',' << format_double(r.f_bar_integral) << ','
       << format_double(r.f_bar_stderr) << ',' << (r.suspect_nongeneric ? 1 : 0)
       << '\n';
  }
}

} // namespace eqt
