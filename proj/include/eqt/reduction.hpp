#pragma once

// The zero level set of the moment map, the reduced space M0 = Phi^{-1}(0)/G
// and the fixed-point data of the symmetry descended to M0.
//
// Everything is organized by support patterns: for a torus acting
// diagonally, the orbit type and the fixed-point equations of a point only
// depend on which coordinates are nonzero, and Phi is linear in u_j = |z_j|^2.

#include "eqt/error.hpp"
#include "eqt/toeplitz.hpp"

#include <map>
#include <optional>
#include <vector>

namespace eqt {

using Support = std::vector<int>;

struct ZeroLocusSample {
  std::vector<PointX> points;
  /// Coarea-corrected weights; sum_i weights[i] * h(points[i]) estimates
  /// int_{Phi^{-1}(0)} h / V_eff, i.e. the integral of the G-average of h
  /// over M0.
  std::vector<double> weights;
  /// Number of draws, including rejected ones.
  int draws = 0;
};

struct ReducedIntegral {
  double value = 0.0;
  double stderr_ = 0.0;
  int n_samples = 0;
};

struct ReductionDiagnostics {
  bool empty_locus = false;
  bool regular_value = false;
  bool free_action = false;
  double min_singular_value = 0.0;
  /// Largest stabilizer of a zero-locus point acting on M (the lifted action
  /// on X is required to be free; finite stabilizers on M are allowed when
  /// they have the same order everywhere).
  long long stabilizer_order_M = 0;
  double vol_M0 = 0.0;
  double vol_M0_stderr = 0.0;
  double v_eff_min = 0.0;
  double v_eff_mean = 0.0;
  double v_eff_max = 0.0;
  double max_abs_phi = 0.0;
  std::vector<Support> feasible_supports;
  std::string violation;
  std::optional<PointX> witness;
};

/// Thrown by check_regular_and_free; carries the offending point.
class HypothesisViolation : public Error {
public:
  HypothesisViolation(const std::string &what, ReductionDiagnostics diag)
      : Error(ErrorCode::reduction_hypothesis_violated, what),
        diagnostics(std::move(diag)) {}
  ReductionDiagnostics diagnostics;
};

/// One lift (c, t) of a fixed point: Gamma m = c mu_t(m) on the support.
struct ComponentLift {
  double c_angle = 0.0;
  Eigen::VectorXd t_angles;
  /// Rotation angles of d gamma_0 on the normal directions.
  std::vector<double> normal_angles;
  cplx c_l{1.0, 0.0};
  cplx h{1.0, 0.0};
};

struct FixedComponentReport {
  Support support;
  int d_l = 0;
  cplx c_l{1.0, 0.0};
  cplx h_l{1.0, 0.0};
  Eigen::VectorXd g_m; ///< angles of t with gamma(m) = mu_t(m)
  std::map<IsotypeLabel, cplx> chi_values;
  /// All lifts; more than one when points of the component have a finite
  /// stabilizer on M.
  std::vector<ComponentLift> lifts;
  double f_bar_integral = 0.0;
  double f_bar_stderr = 0.0;
  PointX representative;
  bool suspect_nongeneric = false;

  // Filled by component_invariants.
  bool completed = false;
  cplx c_l_finite_difference{0.0, 0.0};
  double c_l_fd_error = 0.0;
  double c_l_constancy_spread = 0.0;
  double g_m_spread = 0.0;
  double beta = 0.0;
};

/// Orientation conventions pinned by calibration.
struct Conventions {
  int h_orientation = +1;
};

// --- support-pattern geometry -------------------------------------------

/// Supports S such that some point of Phi^{-1}(0) has exactly support S.
std::vector<Support> feasible_supports(const LinearizedTorusAction &action);

/// Union of the supports of zero-locus points whose support lies in E.
Support feasible_closure(const LinearizedTorusAction &action, const Support &E);

/// A zero-locus point with support exactly E (real, nonnegative coordinates),
/// or nullopt if none exists.
std::optional<PointX> interior_point(const LinearizedTorusAction &action,
                                     const Support &E);

/// Order of the stabilizer on M of a point with support S; 0 if infinite.
long long stabilizer_order_M(const LinearizedTorusAction &action,
                             const Support &S);
/// Order of the stabilizer on X; 0 if infinite.
long long stabilizer_order_X(const LinearizedTorusAction &action,
                             const Support &S);

Support support_of(const PointX &x, double tol = 1e-12);

/// Projected Newton iterations moving x onto Phi^{-1}(0) without changing
/// its support or phases.
PointX refine_to_zero_locus(const PointX &x, const LinearizedTorusAction &action,
                            double tol = 1e-12);

// --- operations -----------------------------------------------------------

/// (2 pi)^g sqrt(det Gram(xi_1, ..., xi_g)) / |Stab_M(x)|: the Riemannian
/// volume of the orbit G.pi(x).
double effective_volume(const PointX &x, const LinearizedTorusAction &action);

/// sqrt(det(dPhi dPhi^*)) at x.
double moment_jacobian(const PointX &x, const LinearizedTorusAction &action);

/// Singular values of dPhi on the horizontal space at x by central
/// differences.
Eigen::VectorXd moment_singular_values_fd(const PointX &x,
                                          const LinearizedTorusAction &action,
                                          double step = 1e-6);

/// Samples Phi^{-1}(0) inside the coordinate subspace C^E.
ZeroLocusSample sample_zero_locus(const LinearizedTorusAction &action,
                                  const ProjectiveModel &model, const Support &E,
                                  int n_samples, std::uint64_t seed);

/// int over the reduced space of C^E of the G-average of h.
ReducedIntegral integrate_over_reduced(
    const LinearizedTorusAction &action, const ProjectiveModel &model,
    const Support &E, const std::function<double(const PointX &)> &h,
    int n_samples, std::uint64_t seed);

ReductionDiagnostics diagnose_reduction(const LinearizedTorusAction &action,
                                        const ProjectiveModel &model,
                                        int n_samples, std::uint64_t seed);

/// diagnose_reduction, throwing HypothesisViolation when the zero locus is
/// nonempty and 0 is not a regular value or the lifted action is not free.
ReductionDiagnostics check_regular_and_free(const LinearizedTorusAction &action,
                                            const ProjectiveModel &model,
                                            int n_samples, std::uint64_t seed);

ReducedIntegral reduced_volume(const LinearizedTorusAction &action,
                               const ProjectiveModel &model, int n_samples,
                               std::uint64_t seed);

/// G-average of f at x by a product trapezoid rule on T^g.
double g_average(const Observable &f, const PointX &x,
                 const LinearizedTorusAction &action, int per_circle = 16);

/// Connected components of Fix(gamma_0), found from the phase equations
/// e^{i phi_j} = c t^{w_j} on support patterns.
std::vector<FixedComponentReport>
find_fixed_components(const LinearizedTorusAction &action,
                      const DiagonalSymmetry &sym, const ProjectiveModel &model);

/// Finite-difference matrix of d gamma_0 on the horizontal space at x, for
/// the lift t (angles) of the component.
Eigen::MatrixXcd reduced_differential_fd(const PointX &x,
                                         const Eigen::VectorXd &t_angles,
                                         const DiagonalSymmetry &sym,
                                         const LinearizedTorusAction &action,
                                         double step = 1e-5);

/// Completes c_l, h_l and chi values, cross-checking the determinant factor
/// against finite differences.
FixedComponentReport component_invariants(FixedComponentReport report,
                                          const DiagonalSymmetry &sym,
                                          const LinearizedTorusAction &action,
                                          const ProjectiveModel &model,
                                          const std::vector<IsotypeLabel> &labels,
                                          const Conventions &conv = {},
                                          std::uint64_t seed = 1);

/// int_{F_l} fbar vol_{F_l}.
ReducedIntegral f_bar_integral(const FixedComponentReport &report,
                               const Observable &f,
                               const LinearizedTorusAction &action,
                               const ProjectiveModel &model, int n_samples,
                               std::uint64_t seed);

/// Columns: index, support, d_l, c_l_re, c_l_im, h_re, h_im, n_lifts,
/// then chi_re/chi_im per label, fbar, fbar_stderr.
void write_components_csv(const std::vector<FixedComponentReport> &reports,
                          std::ostream &os);

} // namespace eqt
