#pragma once

// Toeplitz matrices of polynomial observables on the isotypes of the section
// spaces, the composite with the symmetry, and its trace.

#include "eqt/sampling.hpp"
#include "eqt/symmetry.hpp"

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>

namespace eqt {

/// f = sum_beta c_beta u^beta + sum_{ab} h_ab z_a conj(z_b) / |z|^2 with
/// u_j = |z_j|^2 / |z|^2. Real valued: c real and h Hermitian.
struct Observable {
  std::map<MultiIndex, double> u_terms;
  std::optional<Eigen::MatrixXcd> h_term;

  static Observable constant(int d, double c = 1.0);
  static Observable u_monomial(const MultiIndex &beta, double coef = 1.0);

  /// Throws CONFIG_INVALID on shape errors or a non-Hermitian h-term.
  void validate(const ProjectiveModel &model) const;
  double operator()(const PointX &x) const;
  /// Uniform bound on |f| over M.
  double sup_bound() const;
  bool is_constant_one() const;
};

/// Matrix element <f e_alpha, e_alpha'> between orthonormalized monomials.
cplx toeplitz_entry(const Observable &f, const MultiIndex &alpha,
                    const MultiIndex &alpha_prime, const ProjectiveModel &model);

/// T_f restricted to an isotype; entry (r, c) = <f e_c, e_r>.
Eigen::MatrixXcd toeplitz_matrix(const Observable &f, const IsotypeBasis &basis,
                                 const ProjectiveModel &model);

/// Diagonal of the symmetry operator on an isotype basis.
Eigen::VectorXcd gamma_diagonal(const IsotypeBasis &basis,
                                const DiagonalSymmetry &sym);

/// trace(gamma_k o T_f) on the isotype, using that gamma_k is diagonal in the
/// monomial basis.
cplx trace_psi(int k, const IsotypeLabel &label, const Observable &f,
               const DiagonalSymmetry &sym, const LinearizedTorusAction &action,
               const ProjectiveModel &model);

/// Same trace through dense matrices, optionally conjugated by a unitary
/// change of isotype basis (basis independence check).
cplx trace_psi_dense(int k, const IsotypeLabel &label, const Observable &f,
                     const DiagonalSymmetry &sym,
                     const LinearizedTorusAction &action,
                     const ProjectiveModel &model,
                     const Eigen::MatrixXcd *remix = nullptr);

/// int_X Pi_{label,k}(gamma_X^{-1}(y), y) f(y) dens_X(y) by quadrature.
QuadratureEstimate trace_via_kernel_quadrature(
    int k, const IsotypeLabel &label, const Observable &f,
    const DiagonalSymmetry &sym, const LinearizedTorusAction &action,
    const ProjectiveModel &model, int n_samples, std::uint64_t seed);

struct TraceRecord {
  int k = 0;
  IsotypeLabel label;
  cplx trace{0.0, 0.0};
  long long dim = 0;
  std::string method;
};

struct TraceSeries {
  std::vector<TraceRecord> records;
  /// (k, message) for levels whose evaluation failed.
  std::vector<std::pair<int, std::string>> failures;
};

using LabelRule = std::function<IsotypeLabel(int k)>;

/// Evaluates trace_psi for every k in `ks` (strictly increasing), spread over
/// `threads` workers; output order follows `ks`.
TraceSeries trace_sweep(const std::vector<int> &ks, const LabelRule &rule,
                        const Observable &f, const DiagonalSymmetry &sym,
                        const LinearizedTorusAction &action,
                        const ProjectiveModel &model, int threads = 1);

std::string format_label(const IsotypeLabel &label);
std::string format_double(double v);

/// Columns: k, label, trace_re, trace_im, dim, method.
void write_trace_csv(const TraceSeries &series, std::ostream &os);

} // namespace eqt
