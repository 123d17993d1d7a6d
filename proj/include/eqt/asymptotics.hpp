#pragma once

// Leading terms of the trace expansion, comparison against exact traces, and
// the kernel-level validators (off-locus decay, near-diagonal scaling).

#include "eqt/reduction.hpp"

#include <ostream>
#include <vector>

namespace eqt {

/// Leading term assembled from the fixed components of the descended
/// symmetry. For a torus every irreducible is a character, so dim V = 1.
struct TracePrediction {
  IsotypeLabel label;
  long long dim_V = 1;
  std::vector<FixedComponentReport> components;

  /// Contribution of component l at level k, averaged over its lifts.
  cplx summand(std::size_t l, int k) const;
  cplx operator()(int k) const;
};

cplx predict_leading(int k, const IsotypeLabel &label,
                     const std::vector<FixedComponentReport> &reports,
                     long long dim_V = 1);

/// Fixed components with all invariants and fbar integrals filled in.
TracePrediction prepare_prediction(const Observable &f, const DiagonalSymmetry &sym,
                                   const LinearizedTorusAction &action,
                                   const ProjectiveModel &model,
                                   const IsotypeLabel &label, int n_samples,
                                   std::uint64_t seed,
                                   const Conventions &conv = {});

/// int_M f vol_M in closed form.
double integral_over_M(const Observable &f, const ProjectiveModel &model);

/// (k / pi)^d int_M f vol_M.
double predict_toeplitz_leading(int k, const Observable &f,
                                const ProjectiveModel &model);

struct FitReport {
  int order = 0;
  std::vector<int> ks;
  std::vector<cplx> ratios;
  /// Coefficient of k^{-a/2}, a = 1..order.
  std::vector<cplx> coefficients;
  double residual_norm = 0.0;
  double condition_number = 0.0;
  /// OLS slope of log|ratio - 1| against log k, with a 95% interval.
  double slope = 0.0;
  double slope_stderr = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  int slope_points = 0;
};

/// Fits trace/prediction - 1 by half powers of 1/k. `predictions` is aligned
/// with series.records.
FitReport compare_and_fit(const TraceSeries &series,
                          const std::vector<cplx> &predictions, int order);

/// Columns: k, trace_re, trace_im, pred_re, pred_im, abs_ratio, phase_err.
void write_comparison_csv(const TraceSeries &series,
                          const std::vector<cplx> &predictions, std::ostream &os);
void write_fit_report(const FitReport &fit, std::ostream &os);

/// Maxima of `values` over dyadic windows [2^j, 2^{j+1}) of k, as (k_max,
/// value) pairs. Oscillating errors are judged on this envelope.
std::vector<std::pair<int, double>> dyadic_envelope(const std::vector<int> &ks,
                                                    const std::vector<double> &values);

/// OLS slope of log y against log x with a two-sided 95% Student-t interval.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n = 0;
};
SlopeFit loglog_slope(const std::vector<double> &x, const std::vector<double> &y);

struct DecayReport {
  std::vector<int> ks;
  std::vector<double> log_abs; ///< log|Pi_{label,k}(x, y)|; floored entries excluded
  int floored = 0;             ///< levels where the kernel fell below 1e-300
  double slope = 0.0;          ///< over the top half of the grid; -inf if all vanish
};

/// Log-log decay of |Pi_{label,k}(x, y)| for a pair outside the orbit
/// incidence set.
DecayReport decay_probe(const PointX &x, const PointX &y, const IsotypeLabel &label,
                        const std::vector<int> &ks,
                        const LinearizedTorusAction &action,
                        const ProjectiveModel &model);

/// Horizontal tangent vector split into transverse (J g_M), vertical (g_M)
/// and the remaining horizontal part.
struct SplitVector {
  Eigen::VectorXcd t, v, h;
};
SplitVector split_displacement(const PointX &x, const Eigen::VectorXcd &w,
                               const LinearizedTorusAction &action);

struct ScalingProbe {
  PointX x;
  Eigen::VectorXcd w;
  Eigen::VectorXcd v;
  std::vector<int> ks;
};

struct ScalingRow {
  int k = 0;
  cplx exact{0.0, 0.0};
  cplx predicted{0.0, 0.0};
  double abs_ratio = 0.0;
  double phase_err = 0.0;
};

struct ScalingTable {
  SplitVector w_split;
  SplitVector v_split;
  double max_mixed_inner = 0.0;
  std::vector<ScalingRow> rows;
};

/// Exact Pi_{label,k}(x + w/sqrt k, x + v/sqrt k) against
/// (k/pi)^{d-g/2} 2^{g/2} dim V / V_eff(x) e^{Q + psi2}.
ScalingTable scaling_probe(const ScalingProbe &probe, const IsotypeLabel &label,
                           const LinearizedTorusAction &action,
                           const ProjectiveModel &model);

/// Smallest k0 with H^0(k)_label = 0 for every k >= k0, from the weight
/// polytope. Requires an empty zero locus.
int vanishing_threshold(const IsotypeLabel &label,
                        const LinearizedTorusAction &action);

} // namespace eqt
