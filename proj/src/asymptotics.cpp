#include "eqt/asymptotics.hpp"

#include "eqt/error.hpp"
#include "eqt/linear_program.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace eqt {

cplx TracePrediction::summand(std::size_t l, int k) const {
  const FixedComponentReport &rep = components.at(l);
  require(!rep.lifts.empty(), "component has no lifts");
  cplx acc{0.0, 0.0};
  for (const auto &lift : rep.lifts) {
    if (std::abs(lift.c_l) < 1e-8) {
      fail(ErrorCode::degenerate_symmetry, "determinant factor vanishes");
    }
    const cplx hk = std::polar(1.0, k * std::arg(lift.h));
    acc += hk * character(label, lift.t_angles) / lift.c_l;
  }
  acc /= static_cast<double>(rep.lifts.size());
  const double scale = std::pow(k / kPi, rep.d_l);
  return static_cast<double>(dim_V) * scale * rep.f_bar_integral * acc;
}

cplx TracePrediction::operator()(int k) const {
  cplx s{0.0, 0.0};
  for (std::size_t l = 0; l < components.size(); ++l) {
    s += summand(l, k);
  }
  return s;
}

cplx predict_leading(int k, const IsotypeLabel &label,
                     const std::vector<FixedComponentReport> &reports,
                     long long dim_V) {
  TracePrediction p;
  p.label = label;
  p.dim_V = dim_V;
  p.components = reports;
  return p(k);
}

TracePrediction prepare_prediction(const Observable &f, const DiagonalSymmetry &sym,
                                   const LinearizedTorusAction &action,
                                   const ProjectiveModel &model,
                                   const IsotypeLabel &label, int n_samples,
                                   std::uint64_t seed, const Conventions &conv) {
  f.validate(model);
  require(static_cast<int>(label.size()) == action.g,
          "isotype label length must equal the torus rank");
  TracePrediction p;
  p.label = label;
  auto comps = find_fixed_components(action, sym, model);
  for (std::size_t l = 0; l < comps.size(); ++l) {
    FixedComponentReport rep = component_invariants(
        std::move(comps[l]), sym, action, model, {label}, conv, mix_seed(seed, 2 * l));
    const ReducedIntegral fb =
        f_bar_integral(rep, f, action, model, n_samples, mix_seed(seed, 2 * l + 1));
    rep.f_bar_integral = fb.value;
    rep.f_bar_stderr = fb.stderr_;
    p.components.push_back(std::move(rep));
  }
  return p;
}

double integral_over_M(const Observable &f, const ProjectiveModel &model) {
  const int d = model.d;
  double v = 0.0;
  for (const auto &[beta, c] : f.u_terms) {
    double lr = log_factorial(d) - log_factorial(d + degree(beta));
    for (int b : beta) {
      lr += log_factorial(b);
    }
    v += c * std::exp(lr);
  }
  if (f.h_term) {
    v += std::real(f.h_term->trace()) / (d + 1);
  }
  return v * model.vol_M();
}

double predict_toeplitz_leading(int k, const Observable &f,
                                const ProjectiveModel &model) {
  return std::pow(k / kPi, model.d) * integral_over_M(f, model);
}

SlopeFit loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  require(x.size() == y.size(), "slope fit needs paired samples");
  SlopeFit s;
  s.n = static_cast<int>(x.size());
  if (s.n < 3) {
    s.slope = s.ci_low = s.ci_high = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double mx = 0.0;
  double my = 0.0;
  for (int i = 0; i < s.n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= s.n;
  my /= s.n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (int i = 0; i < s.n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  require(sxx > 0.0, "slope fit needs distinct abscissae");
  s.slope = sxy / sxx;
  s.intercept = my - s.slope * mx;
  double rss = 0.0;
  for (int i = 0; i < s.n; ++i) {
    const double r = std::log(y[i]) - s.intercept - s.slope * std::log(x[i]);
    rss += r * r;
  }
  s.stderr_ = std::sqrt(rss / (s.n - 2) / sxx);
  const boost::math::students_t dist(s.n - 2);
  const double q = boost::math::quantile(dist, 0.975);
  s.ci_low = s.slope - q * s.stderr_;
  s.ci_high = s.slope + q * s.stderr_;
  return s;
}

FitReport compare_and_fit(const TraceSeries &series,
                          const std::vector<cplx> &predictions, int order) {
  require(predictions.size() == series.records.size(),
          "predictions must be aligned with the trace series");
  require(order >= 1, "fit order must be positive");
  FitReport fit;
  fit.order = order;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (std::abs(predictions[i]) > 1e-300) {
      fit.ks.push_back(series.records[i].k);
      fit.ratios.push_back(series.records[i].trace * std::conj(predictions[i]) /
                           std::norm(predictions[i]));
    }
  }
  const int n = static_cast<int>(fit.ks.size());
  if (n < order + 3) {
    fail(ErrorCode::precondition,
         "fit of order " + std::to_string(order) + " needs at least " +
             std::to_string(order + 3) + " levels with nonzero prediction, got " +
             std::to_string(n));
  }
  Eigen::MatrixXd X(n, order);
  Eigen::VectorXd yr(n);
  Eigen::VectorXd yi(n);
  for (int i = 0; i < n; ++i) {
    for (int a = 1; a <= order; ++a) {
      X(i, a - 1) = std::pow(static_cast<double>(fit.ks[i]), -0.5 * a);
    }
    yr[i] = fit.ratios[i].real() - 1.0;
    yi[i] = fit.ratios[i].imag();
  }
  // Column scaling keeps the condition number about the basis, not units.
  const Eigen::VectorXd scale = X.colwise().norm().transpose();
  const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto &sv = svd.singularValues();
  fit.condition_number = sv[0] / sv[sv.size() - 1];
  if (!(sv[sv.size() - 1] > 1e-12 * sv[0])) {
    std::ostringstream os;
    os << "fit design matrix is rank deficient: singular values " << sv[0]
       << " .. " << sv[sv.size() - 1] << ", condition number "
       << fit.condition_number;
    fail(ErrorCode::rank_deficient, os.str());
  }
  const Eigen::VectorXd cr = svd.solve(yr).cwiseQuotient(scale);
  const Eigen::VectorXd ci = svd.solve(yi).cwiseQuotient(scale);
  for (int a = 0; a < order; ++a) {
    fit.coefficients.emplace_back(cr[a], ci[a]);
  }
  fit.residual_norm =
      std::sqrt((X * cr - yr).squaredNorm() + (X * ci - yi).squaredNorm());

  std::vector<double> lk;
  std::vector<double> le;
  for (int i = 0; i < n; ++i) {
    const double e = std::abs(fit.ratios[i] - 1.0);
    if (e > 0.0) {
      lk.push_back(fit.ks[i]);
      le.push_back(e);
    }
  }
  const SlopeFit s = loglog_slope(lk, le);
  fit.slope = s.slope;
  fit.slope_stderr = s.stderr_;
  fit.slope_ci_low = s.ci_low;
  fit.slope_ci_high = s.ci_high;
  fit.slope_points = s.n;
  return fit;
}

void write_comparison_csv(const TraceSeries &series,
                          const std::vector<cplx> &predictions, std::ostream &os) {
  require(predictions.size() == series.records.size(),
          "predictions must be aligned with the trace series");
  os << "k,trace_re,trace_im,pred_re,pred_im,abs_ratio,phase_err\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const cplx t = series.records[i].trace;
    const cplx p = predictions[i];
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double phase = std::numeric_limits<double>::quiet_NaN();
    if (std::abs(p) > 1e-300) {
      const cplx r = t * std::conj(p) / std::norm(p);
      ratio = std::abs(r);
      phase = std::arg(r);
    }
    os << series.records[i].k << ',' << format_double(t.real()) << ','
       << format_double(t.imag()) << ',' << format_double(p.real()) << ','
       << format_double(p.imag()) << ',' << format_double(ratio) << ','
       << format_double(phase) << '\n';
  }
}

void write_fit_report(const FitReport &fit, std::ostream &os) {
  os << "order " << fit.order << '\n';
  os << "levels " << fit.ks.size() << '\n';
  for (std::size_t a = 0; a < fit.coefficients.size(); ++a) {
    os << "c_" << a + 1 << ' ' << format_double(fit.coefficients[a].real()) << ' '
       << format_double(fit.coefficients[a].imag()) << '\n';
  }
  os << "residual_norm " << format_double(fit.residual_norm) << '\n';
  os << "condition_number " << format_double(fit.condition_number) << '\n';
  os << "loglog_slope " << format_double(fit.slope) << '\n';
  os << "slope_stderr " << format_double(fit.slope_stderr) << '\n';
  os << "slope_ci95 " << format_double(fit.slope_ci_low) << ' '
     << format_double(fit.slope_ci_high) << '\n';
  os << "slope_points " << fit.slope_points << '\n';
}

std::vector<std::pair<int, double>> dyadic_envelope(const std::vector<int> &ks,
                                                    const std::vector<double> &values) {
  require(ks.size() == values.size(), "envelope needs paired samples");
  std::vector<std::pair<int, double>> env;
  int window = -1;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    require(ks[i] >= 1, "envelope levels must be positive");
    const int w = static_cast<int>(std::floor(std::log2(static_cast<double>(ks[i]))));
    if (w != window) {
      env.emplace_back(ks[i], values[i]);
      window = w;
    } else if (values[i] >= env.back().second) {
      env.back() = {ks[i], values[i]};
    }
  }
  return env;
}

DecayReport decay_probe(const PointX &x, const PointX &y, const IsotypeLabel &label,
                        const std::vector<int> &ks,
                        const LinearizedTorusAction &action,
                        const ProjectiveModel &model) {
  const double phi = std::max(moment_map(x, action).norm(),
                              moment_map(y, action).norm());
  if (phi <= 0.05) {
    // Both on or near the locus: y must stay away from the orbit of x.
    const int per = 64;
    long long total = 1;
    for (int i = 0; i < action.g; ++i) {
      total *= per;
    }
    double best = 0.0;
    Eigen::VectorXd ang(action.g);
    for (long long idx = 0; idx < total; ++idx) {
      long long rem = idx;
      for (int i = 0; i < action.g; ++i) {
        ang[i] = 2.0 * kPi * static_cast<double>(rem % per) / per;
        rem /= per;
      }
      best = std::max(best, std::abs(hermitian_product(y, act(ang, x, action))));
    }
    if (best > 1.0 - 1e-3) {
      fail(ErrorCode::precondition,
           "decay probe needs a pair outside the orbit incidence set");
    }
  }
  DecayReport rep;
  std::vector<double> lk;
  std::vector<double> lv;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const int k = ks[i];
    require(k >= 1, "decay probe levels must be positive");
    const SectionBasis full = make_section_basis(k, model);
    const IsotypeBasis iso = isotype_basis(k, label, action, full);
    const LogComplex v = log_equivariant_kernel(x, y, iso);
    if (v.is_zero() || v.log_abs < std::log(1e-300)) {
      ++rep.floored;
      continue;
    }
    rep.ks.push_back(k);
    rep.log_abs.push_back(v.log_abs);
    if (i >= ks.size() / 2) {
      lk.push_back(std::log(static_cast<double>(k)));
      lv.push_back(v.log_abs);
    }
  }
  if (lk.empty()) {
    rep.slope = -std::numeric_limits<double>::infinity();
    return rep;
  }
  if (lk.size() < 2) {
    fail(ErrorCode::precondition, "decay probe needs two nonvanishing levels");
  }
  // Slope of log|Pi| against log k; the kernel may be far below double range.
  const double n = static_cast<double>(lk.size());
  const double mx = std::accumulate(lk.begin(), lk.end(), 0.0) / n;
  const double my = std::accumulate(lv.begin(), lv.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lk.size(); ++i) {
    sxx += (lk[i] - mx) * (lk[i] - mx);
    sxy += (lk[i] - mx) * (lv[i] - my);
  }
  rep.slope = sxy / sxx;
  return rep;
}

namespace {

Eigen::VectorXd to_real(const Eigen::VectorXcd &v) {
  Eigen::VectorXd r(2 * v.size());
  r.head(v.size()) = v.real();
  r.tail(v.size()) = v.imag();
  return r;
}

Eigen::VectorXcd to_complex(const Eigen::VectorXd &r) {
  const Eigen::Index n = r.size() / 2;
  Eigen::VectorXcd v(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    v[j] = cplx(r[j], r[n + j]);
  }
  return v;
}

Eigen::VectorXcd project_onto(const std::vector<Eigen::VectorXcd> &span,
                              const Eigen::VectorXcd &w) {
  if (span.empty()) {
    return Eigen::VectorXcd::Zero(w.size());
  }
  Eigen::MatrixXd B(2 * w.size(), static_cast<Eigen::Index>(span.size()));
  for (std::size_t c = 0; c < span.size(); ++c) {
    B.col(c) = to_real(span[c]);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols());
  return to_complex(Q * (Q.transpose() * to_real(w)));
}

cplx herm(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b) { return b.dot(a); }

double omega(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b) {
  return -std::imag(herm(a, b));
}

} // namespace

SplitVector split_displacement(const PointX &x, const Eigen::VectorXcd &w,
                               const LinearizedTorusAction &action) {
  require(w.size() == x.size(), "displacement has the wrong length");
  if (std::abs(herm(w, x.coords())) > 1e-10 * std::max(1.0, w.norm())) {
    fail(ErrorCode::precondition, "displacement must be horizontal at x");
  }
  std::vector<Eigen::VectorXcd> vert;
  std::vector<Eigen::VectorXcd> trans;
  for (int a = 0; a < action.g; ++a) {
    Eigen::VectorXcd xi(action.n);
    for (int j = 0; j < action.n; ++j) {
      xi[j] = cplx(0.0, static_cast<double>(action.W(a, j))) * x[j];
    }
    xi -= herm(xi, x.coords()) * x.coords();
    vert.push_back(xi);
    trans.push_back(cplx(0.0, 1.0) * xi);
  }
  SplitVector s;
  s.v = project_onto(vert, w);
  s.t = project_onto(trans, w);
  s.h = w - s.v - s.t;
  return s;
}

ScalingTable scaling_probe(const ScalingProbe &probe, const IsotypeLabel &label,
                           const LinearizedTorusAction &action,
                           const ProjectiveModel &model) {
  const PointX &x = probe.x;
  if (probe.w.norm() > 2.0 || probe.v.norm() > 2.0) {
    fail(ErrorCode::precondition, "displacements must have norm at most 2");
  }
  if (action.g > 0 && moment_map(x, action).norm() > 1e-8) {
    fail(ErrorCode::precondition, "scaling probe base point must lie on the zero locus");
  }
  ScalingTable tab;
  tab.w_split = split_displacement(x, probe.w, action);
  tab.v_split = split_displacement(x, probe.v, action);
  for (const SplitVector *s : {&tab.w_split, &tab.v_split}) {
    tab.max_mixed_inner = std::max(
        {tab.max_mixed_inner, std::abs(std::real(herm(s->t, s->v))),
         std::abs(std::real(herm(s->t, s->h))), std::abs(std::real(herm(s->v, s->h)))});
  }
  const SplitVector &W = tab.w_split;
  const SplitVector &V = tab.v_split;
  const cplx Q(-V.t.squaredNorm() - W.t.squaredNorm(),
               omega(W.v, W.t) - omega(V.v, V.t));
  const cplx psi2 = herm(W.h, V.h) - 0.5 * (W.h.squaredNorm() + V.h.squaredNorm());
  const double pref = std::pow(2.0, 0.5 * action.g) / effective_volume(x, action);

  for (int k : probe.ks) {
    require(k >= 1, "probe levels must be positive");
    const double rk = std::sqrt(static_cast<double>(k));
    const PointX xw = PointX::normalized(x.coords() + probe.w / rk);
    const PointX xv = PointX::normalized(x.coords() + probe.v / rk);
    const SectionBasis full = make_section_basis(k, model);
    const IsotypeBasis iso = isotype_basis(k, label, action, full);
    ScalingRow row;
    row.k = k;
    row.exact = equivariant_kernel(xw, xv, iso);
    row.predicted = std::pow(k / kPi, model.d - 0.5 * action.g) * pref * std::exp(Q + psi2);
    const cplx r = row.exact * std::conj(row.predicted) / std::norm(row.predicted);
    row.abs_ratio = std::abs(r);
    row.phase_err = std::arg(r);
    tab.rows.push_back(row);
  }
  return tab;
}

int vanishing_threshold(const IsotypeLabel &label,
                        const LinearizedTorusAction &action) {
  require(static_cast<int>(label.size()) == action.g,
          "isotype label length must equal the torus rank");
  if (!feasible_supports(action).empty()) {
    fail(ErrorCode::precondition,
         "the zero locus is nonempty; isotypes do not vanish for large k");
  }
  // Isotype at level k is spanned by z^alpha, |alpha| = k, -W alpha = label.
  Eigen::MatrixXd A = -action.W.cast<double>();
  Eigen::VectorXd b(action.g);
  for (int i = 0; i < action.g; ++i) {
    b[i] = static_cast<double>(label[i]);
  }
  const auto sol = maximize(Eigen::VectorXd::Ones(action.n), A, b);
  if (!sol) {
    return 0;
  }
  // The relaxation bounds k; integrality can push the last level lower.
  for (int k = static_cast<int>(std::floor(sol->objective + 1e-9)); k >= 0; --k) {
    const auto dims = isotype_dimensions(k, action);
    const auto it = dims.find(label);
    if (it != dims.end() && it->second > 0) {
      return k + 1;
    }
  }
  return 0;
}

} // namespace eqt
