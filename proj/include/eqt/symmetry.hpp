#pragma once

// Torus actions on (P^d, O(1)), their moment maps and isotypes, and the
// diagonal unitary symmetry commuting with them.

#include "eqt/lattice.hpp"
#include "eqt/model.hpp"

#include <map>
#include <vector>

namespace eqt {

/// T^g acting on C^{d+1} by t.z = (t^{W e_0} z_0, ..., t^{W e_d} z_d).
struct LinearizedTorusAction {
  int g = 0;
  int n = 2; ///< d + 1
  IntMatrix W; ///< g x n weight matrix; column j is the weight of z_j.

  static LinearizedTorusAction trivial(int d);
  static LinearizedTorusAction from_rows(int d,
                                         const std::vector<std::vector<long long>> &rows);

  Eigen::VectorXd weight(int j) const { return W.col(j).cast<double>(); }
  /// Checks shape against the model and that g <= d.
  void validate(const ProjectiveModel &model) const;
};

/// Character label of T^g; chi(t) = t^label.
using IsotypeLabel = std::vector<long long>;

/// Gamma = diag(e^{i phi_j}) plus a global phase theta_A of the
/// linearization on A.
struct DiagonalSymmetry {
  std::vector<double> phi;
  double theta_A = 0.0;

  static DiagonalSymmetry identity(int d);
  bool is_identity(double tol = 1e-14) const;
  void validate(const ProjectiveModel &model) const;
};

struct IsotypeBasis {
  int k = 0;
  IsotypeLabel label;
  std::vector<MultiIndex> indices;
  std::vector<double> log_norms;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

/// Character by which the pulled-back monomial transforms: -W alpha.
IsotypeLabel weight_of(const MultiIndex &alpha,
                       const LinearizedTorusAction &action);

IsotypeBasis isotype_basis(int k, const IsotypeLabel &label,
                           const LinearizedTorusAction &action,
                           const SectionBasis &basis);

/// Dimension of every occurring isotype at level k.
std::map<IsotypeLabel, long long>
isotype_dimensions(int k, const LinearizedTorusAction &action);

/// Phi_i(x) = -sum_j W_ij |x_j|^2.
Eigen::VectorXd moment_map(const PointX &x, const LinearizedTorusAction &action);

/// mu_t(x) for t = exp(i angles).
PointX act(const Eigen::VectorXd &angles, const PointX &x,
           const LinearizedTorusAction &action);

/// chi_label(exp(i angles)).
cplx character(const IsotypeLabel &label, const Eigen::VectorXd &angles);

/// Eigenvalue of the induced operator on the monomial z^alpha:
/// e^{i k theta_A} e^{-i <phi, alpha>}.
cplx gamma_phase(const MultiIndex &alpha, const DiagonalSymmetry &sym);

/// gamma_X^{-1}(x) = e^{i theta_A} Gamma^{-1} x, so that the induced
/// operator is s -> s o gamma_X^{-1}.
PointX gamma_X_inverse(const PointX &x, const DiagonalSymmetry &sym);
PointX gamma_X(const PointX &x, const DiagonalSymmetry &sym);

/// Equivariant Szego kernel by direct summation over the isotype basis.
cplx equivariant_kernel(const PointX &x, const PointX &y,
                        const IsotypeBasis &basis);
LogComplex log_equivariant_kernel(const PointX &x, const PointX &y,
                                  const IsotypeBasis &basis);

} // namespace eqt
