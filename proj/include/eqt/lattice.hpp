#pragma once

// Integer-lattice helpers for torus phase equations.

#include <Eigen/Dense>

#include <vector>

namespace eqt {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

struct SmithForm {
  IntMatrix U; ///< m x m, unimodular
  IntMatrix D; ///< m x n, diagonal with d_0 | d_1 | ...
  IntMatrix V; ///< n x n, unimodular
  int rank = 0;
};

/// U * A * V = D.
SmithForm smith_normal_form(const IntMatrix &A);

int integer_rank(const IntMatrix &A);

/// Solutions of A x = phases (mod 2 pi) for x in (R / 2 pi Z)^n.
struct PhaseSolutions {
  bool consistent = false;
  /// Dimension of the solution torus; zero means finitely many solutions.
  int free_dims = 0;
  /// One representative per connected component (free coordinates at 0),
  /// reduced to [0, 2 pi).
  std::vector<Eigen::VectorXd> solutions;
};

PhaseSolutions solve_phase_system(const IntMatrix &A,
                                  const Eigen::VectorXd &phases,
                                  double tol = 1e-9);

/// Order of the finite group {x : A x = 0 mod 2 pi}; 0 if it is infinite.
long long kernel_torsion_order(const IntMatrix &A);

/// Angle reduced to [0, 2 pi).
double wrap_angle(double a);
/// Distance of an angle to 0 on the circle.
double angle_distance(double a);

} // namespace eqt
