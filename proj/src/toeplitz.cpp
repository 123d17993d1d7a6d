#include "eqt/toeplitz.hpp"

#include "eqt/error.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace eqt {

Observable Observable::constant(int d, double c) {
  Observable f;
  f.u_terms[MultiIndex(d + 1, 0)] = c;
  return f;
}

Observable Observable::u_monomial(const MultiIndex &beta, double coef) {
  Observable f;
  f.u_terms[beta] = coef;
  return f;
}

void Observable::validate(const ProjectiveModel &model) const {
  for (const auto &[beta, c] : u_terms) {
    if (static_cast<int>(beta.size()) != model.n_coords()) {
      fail(ErrorCode::config_invalid, "u-term exponent has the wrong length");
    }
    for (int b : beta) {
      if (b < 0) {
        fail(ErrorCode::config_invalid, "u-term exponents must be nonnegative");
      }
    }
    if (!std::isfinite(c)) {
      fail(ErrorCode::config_invalid, "u-term coefficient is not finite");
    }
  }
  if (h_term) {
    const auto &h = *h_term;
    if (h.rows() != model.n_coords() || h.cols() != model.n_coords()) {
      fail(ErrorCode::config_invalid, "h-term must be (d+1) x (d+1)");
    }
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
      fail(ErrorCode::config_invalid, "h-term must be Hermitian");
    }
  }
}

double Observable::operator()(const PointX &x) const {
  const Eigen::VectorXd u = x.moduli_squared();
  double v = 0.0;
  for (const auto &[beta, c] : u_terms) {
    double m = c;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      m *= std::pow(u[j], beta[j]);
    }
    v += m;
  }
  if (h_term) {
    v += std::real(x.coords().dot(*h_term * x.coords()));
  }
  return v;
}

double Observable::sup_bound() const {
  double s = 0.0;
  for (const auto &[beta, c] : u_terms) {
    s += std::abs(c);
  }
  if (h_term) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(*h_term);
    s += es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return s;
}

bool Observable::is_constant_one() const {
  if (h_term || u_terms.size() != 1) {
    return false;
  }
  const auto &[beta, c] = *u_terms.begin();
  return degree(beta) == 0 && c == 1.0;
}

namespace {

// log of N_{k+|beta|}(alpha + beta) / N_k(alpha), the vol_X factors cancel.
double log_shift_ratio(const MultiIndex &alpha, const MultiIndex &beta, int d) {
  const int k = degree(alpha);
  const int b = degree(beta);
  double s = log_factorial(d + k) - log_factorial(d + k + b);
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    s += log_factorial(alpha[j] + beta[j]) - log_factorial(alpha[j]);
  }
  return s;
}

} // namespace

cplx toeplitz_entry(const Observable &f, const MultiIndex &alpha,
                    const MultiIndex &alpha_prime, const ProjectiveModel &model) {
  const int n = model.n_coords();
  require(static_cast<int>(alpha.size()) == n &&
              static_cast<int>(alpha_prime.size()) == n,
          "multi-index length does not match the model");
  require(degree(alpha) == degree(alpha_prime),
          "Toeplitz entries need indices of equal degree");
  cplx v{0.0, 0.0};
  if (alpha == alpha_prime) {
    for (const auto &[beta, c] : f.u_terms) {
      v += c * std::exp(log_shift_ratio(alpha, beta, model.d));
    }
  }
  if (f.h_term) {
    const auto &h = *f.h_term;
    // conj(z_a) z_b z^alpha pairs with z^alpha' iff alpha' = alpha + e_b - e_a.
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (h(a, b) == cplx(0.0, 0.0)) {
          continue;
        }
        MultiIndex shifted = alpha;
        shifted[b] += 1;
        shifted[a] -= 1;
        if (shifted[a] < 0 || shifted != alpha_prime) {
          continue;
        }
        MultiIndex up = alpha;
        up[b] += 1;
        const double lnum = log_monomial_norm(up, model);
        const double lden = 0.5 * (log_monomial_norm(alpha, model) +
                                   log_monomial_norm(alpha_prime, model));
        v += h(a, b) * std::exp(lnum - lden);
      }
    }
  }
  return v;
}

Eigen::MatrixXcd toeplitz_matrix(const Observable &f, const IsotypeBasis &basis,
                                 const ProjectiveModel &model) {
  const int m = static_cast<int>(basis.size());
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(m, m);
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m; ++r) {
      T(r, c) = toeplitz_entry(f, basis.indices[c], basis.indices[r], model);
    }
  }
  return T;
}

Eigen::VectorXcd gamma_diagonal(const IsotypeBasis &basis,
                                const DiagonalSymmetry &sym) {
  Eigen::VectorXcd g(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    g[static_cast<Eigen::Index>(i)] = gamma_phase(basis.indices[i], sym);
  }
  return g;
}

cplx trace_psi(int k, const IsotypeLabel &label, const Observable &f,
               const DiagonalSymmetry &sym, const LinearizedTorusAction &action,
               const ProjectiveModel &model) {
  const SectionBasis full = make_section_basis(k, model);
  const IsotypeBasis iso = isotype_basis(k, label, action, full);
  cplx tr{0.0, 0.0};
  for (const auto &alpha : iso.indices) {
    tr += gamma_phase(alpha, sym) * toeplitz_entry(f, alpha, alpha, model);
  }
  return tr;
}

cplx trace_psi_dense(int k, const IsotypeLabel &label, const Observable &f,
                     const DiagonalSymmetry &sym,
                     const LinearizedTorusAction &action,
                     const ProjectiveModel &model,
                     const Eigen::MatrixXcd *remix) {
  const SectionBasis full = make_section_basis(k, model);
  const IsotypeBasis iso = isotype_basis(k, label, action, full);
  if (iso.empty()) {
    return {0.0, 0.0};
  }
  const Eigen::MatrixXcd T = toeplitz_matrix(f, iso, model);
  const Eigen::MatrixXcd G = gamma_diagonal(iso, sym).asDiagonal();
  Eigen::MatrixXcd psi = G * T;
  if (remix != nullptr) {
    require(remix->rows() == psi.rows() && remix->cols() == psi.cols(),
            "basis change has the wrong size");
    psi = remix->adjoint() * psi * (*remix);
  }
  return psi.trace();
}

QuadratureEstimate trace_via_kernel_quadrature(
    int k, const IsotypeLabel &label, const Observable &f,
    const DiagonalSymmetry &sym, const LinearizedTorusAction &action,
    const ProjectiveModel &model, int n_samples, std::uint64_t seed) {
  const SectionBasis full = make_section_basis(k, model);
  const IsotypeBasis iso = isotype_basis(k, label, action, full);
  auto integrand = [&](const PointX &y) -> cplx {
    return equivariant_kernel(gamma_X_inverse(y, sym), y, iso) * f(y);
  };
  return integrate_over_X(integrand, n_samples, seed, model);
}

TraceSeries trace_sweep(const std::vector<int> &ks, const LabelRule &rule,
                        const Observable &f, const DiagonalSymmetry &sym,
                        const LinearizedTorusAction &action,
                        const ProjectiveModel &model, int threads) {
  for (std::size_t i = 1; i < ks.size(); ++i) {
    require(ks[i] > ks[i - 1], "sweep levels must be strictly increasing");
  }
  const std::size_t n = ks.size();
  std::vector<TraceRecord> recs(n);
  std::vector<std::string> errs(n);

  auto work = [&](std::size_t i) {
    try {
      const int k = ks[i];
      TraceRecord r;
      r.k = k;
      r.label = rule(k);
      const SectionBasis full = make_section_basis(k, model);
      const IsotypeBasis iso = isotype_basis(k, r.label, action, full);
      r.dim = static_cast<long long>(iso.size());
      for (const auto &alpha : iso.indices) {
        r.trace += gamma_phase(alpha, sym) * toeplitz_entry(f, alpha, alpha, model);
      }
      r.method = "diagonal";
      recs[i] = std::move(r);
    } catch (const std::exception &e) {
      errs[i] = e.what();
    }
  };

  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (nt == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      work(i);
    }
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += nt) {
          work(i);
        }
      });
    }
  }

  TraceSeries s;
  for (std::size_t i = 0; i < n; ++i) {
    if (errs[i].empty()) {
      s.records.push_back(std::move(recs[i]));
    } else {
      s.failures.emplace_back(ks[i], errs[i]);
    }
  }
  return s;
}

std::string format_label(const IsotypeLabel &label) {
  std::string s;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (i > 0) {
      s += ';';
    }
    s += std::to_string(label[i]);
  }
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

void write_trace_csv(const TraceSeries &series, std::ostream &os) {
  os << "k,label,trace_re,trace_im,dim,method\n";
  for (const auto &r : series.records) {
    os << r.k << ',' << format_label(r.label) << ','
       << format_double(r.trace.real()) << ',' << format_double(r.trace.imag())
       << ',' << r.dim << ',' << r.method << '\n';
  }
}

} // namespace eqt
