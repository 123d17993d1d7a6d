#pragma once

// Small dense linear programs: maximize c.x subject to A x = b, x >= 0.
// Sizes here are a handful of rows and columns, so a two-phase tableau
// simplex with Bland's rule is enough.

#include <Eigen/Dense>

#include <optional>

namespace eqt {

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// Returns nullopt when infeasible. Throws NUMERIC_FAILURE if unbounded.
std::optional<LpSolution> maximize(const Eigen::VectorXd &c,
                                   const Eigen::MatrixXd &A,
                                   const Eigen::VectorXd &b,
                                   double tol = 1e-10);

} // namespace eqt
