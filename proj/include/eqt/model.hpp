#pragma once

// Exact geometry of P^d with the hyperplane bundle O(1).
//
// The unit circle bundle X is realized as the unit sphere S^{2d+1} in
// C^{d+1}; sections of O(k) are homogeneous degree-k polynomials restricted
// to it. Volumes use the normalization vol(P^d) = pi^d / d!, and the circle
// fiber carries total mass kappa_X, so vol(X) = kappa_X * vol(P^d).

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

namespace eqt {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

struct ProjectiveModel {
  int d = 1;
  double kappa_X = 1.0;

  static ProjectiveModel make(int d, double kappa_X = 1.0);

  int n_coords() const { return d + 1; }
  double vol_M() const;
  double vol_X() const { return kappa_X * vol_M(); }
};

/// A point of the circle bundle: a unit vector in C^{d+1}.
class PointX {
public:
  PointX() = default;

  /// Normalizes `v`; throws on a zero vector.
  static PointX normalized(const Eigen::VectorXcd &v);
  /// Wraps `v` without normalizing; requires |v| = 1 within 1e-12.
  static PointX from_unit(const Eigen::VectorXcd &v);

  const Eigen::VectorXcd &coords() const { return coords_; }
  int size() const { return static_cast<int>(coords_.size()); }
  cplx operator[](int j) const { return coords_[j]; }

  /// Circle action r_t: multiplies every coordinate by e^{i angle}.
  PointX rotated(double angle) const;

  /// u_j = |z_j|^2, the torus-invariant coordinates on the simplex.
  Eigen::VectorXd moduli_squared() const;

private:
  explicit PointX(Eigen::VectorXcd v) : coords_(std::move(v)) {}
  Eigen::VectorXcd coords_;
};

/// Hermitian product <x, y> = sum_j x_j conj(y_j).
cplx hermitian_product(const PointX &x, const PointX &y);

using MultiIndex = std::vector<int>;

int degree(const MultiIndex &alpha);

/// All multi-indices of `n_vars` entries summing to `k`, in lexicographic
/// order (first entry decreasing).
std::vector<MultiIndex> enumerate_multi_indices(int k, int n_vars);

double log_factorial(int n);
double log_binomial(int n, int k);
double binomial(int n, int k);

/// log N_k(alpha), N_k(alpha) = vol_X d! alpha! / (d+k)!.
double log_monomial_norm(const MultiIndex &alpha, const ProjectiveModel &model);
double monomial_norm(const MultiIndex &alpha, const ProjectiveModel &model);

struct SectionBasis {
  int k = 0;
  std::vector<MultiIndex> indices;
  std::vector<double> log_norms;

  std::size_t size() const { return indices.size(); }
};

SectionBasis make_section_basis(int k, const ProjectiveModel &model);

/// A complex number stored as (log|z|, arg z); log_abs = -inf encodes zero.
struct LogComplex {
  double log_abs;
  double arg;

  bool is_zero() const;
  cplx value() const;
};

/// z^alpha evaluated in log form.
LogComplex log_monomial(const MultiIndex &alpha, const PointX &x);
cplx monomial_value(const MultiIndex &alpha, const PointX &x);

/// Overflow-free accumulator for sums of complex terms given in log form.
class LogComplexSum {
public:
  void add(double log_abs, double arg);
  void add(const LogComplex &z) { add(z.log_abs, z.arg); }

  bool is_zero() const;
  /// log|sum|; -inf when the sum vanishes exactly.
  double log_abs() const;
  double arg() const;
  cplx value() const;

private:
  double scale_ = -std::numeric_limits<double>::infinity();
  cplx acc_{0.0, 0.0};
};

/// Level-k Szego kernel C_{k,d} <x,y>^k, C_{k,d} = binom(k+d, d) / vol_X.
cplx szego_kernel(const PointX &x, const PointX &y, int k,
                  const ProjectiveModel &model);
LogComplex log_szego_kernel(const PointX &x, const PointX &y, int k,
                            const ProjectiveModel &model);

} // namespace eqt
