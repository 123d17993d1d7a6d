#include "eqt/linear_program.hpp"

#include "eqt/error.hpp"

#include <limits>
#include <vector>

namespace eqt {

namespace {

// Tableau layout: rows 0..m-1 constraints, last column the right-hand side.
struct Tableau {
  Eigen::MatrixXd T;
  std::vector<int> basis;
};

void pivot(Tableau &tab, Eigen::VectorXd &obj, double &obj_val, int row,
           int col) {
  const int n = static_cast<int>(tab.T.cols()) - 1;
  tab.T.row(row) /= tab.T(row, col);
  for (int i = 0; i < tab.T.rows(); ++i) {
    if (i != row && tab.T(i, col) != 0.0) {
      tab.T.row(i) -= tab.T(i, col) * tab.T.row(row);
    }
  }
  const double f = obj[col];
  if (f != 0.0) {
    obj -= f * tab.T.row(row).head(n).transpose();
    obj_val += f * tab.T(row, n);
  }
  tab.basis[row] = col;
}

// Maximizes obj.x over the tableau, restricted to columns < allowed.
// `obj` holds reduced costs (positive entries improve).
void run_simplex(Tableau &tab, Eigen::VectorXd &obj, double &obj_val,
                 int allowed, double tol) {
  const int m = static_cast<int>(tab.T.rows());
  const int n = static_cast<int>(tab.T.cols()) - 1;
  for (int iter = 0; iter < 10000; ++iter) {
    int col = -1;
    for (int j = 0; j < allowed; ++j) {
      if (obj[j] > tol) {
        col = j;
        break;
      }
    }
    if (col < 0) {
      return;
    }
    int row = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (tab.T(i, col) > tol) {
        const double ratio = tab.T(i, n) / tab.T(i, col);
        if (ratio < best - tol ||
            (ratio <= best + tol && row >= 0 && tab.basis[i] < tab.basis[row])) {
          best = ratio;
          row = i;
        }
      }
    }
    if (row < 0) {
      fail(ErrorCode::numeric_failure, "linear program is unbounded");
    }
    pivot(tab, obj, obj_val, row, col);
  }
  fail(ErrorCode::numeric_failure, "simplex iteration limit reached");
}

} // namespace

std::optional<LpSolution> maximize(const Eigen::VectorXd &c,
                                   const Eigen::MatrixXd &A,
                                   const Eigen::VectorXd &b, double tol) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  require(c.size() == n && b.size() == m, "linear program shape mismatch");

  // Columns: n structural, m artificial, then rhs.
  Tableau tab;
  tab.T = Eigen::MatrixXd::Zero(m, n + m + 1);
  tab.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    const double sgn = b[i] < 0.0 ? -1.0 : 1.0;
    tab.T.row(i).head(n) = sgn * A.row(i);
    tab.T(i, n + i) = 1.0;
    tab.T(i, n + m) = sgn * b[i];
    tab.basis[i] = n + i;
  }

  // Phase one: maximize -sum(artificials).
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(n + m);
  double obj_val = 0.0;
  for (int i = 0; i < m; ++i) {
    obj.head(n) += tab.T.row(i).head(n).transpose();
    obj_val -= tab.T(i, n + m);
  }
  run_simplex(tab, obj, obj_val, n, tol);
  if (obj_val < -1e-8) {
    return std::nullopt;
  }
  // Drive remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] >= n) {
      for (int j = 0; j < n; ++j) {
        if (std::abs(tab.T(i, j)) > tol) {
          Eigen::VectorXd dummy = Eigen::VectorXd::Zero(n + m);
          double dv = 0.0;
          pivot(tab, dummy, dv, i, j);
          break;
        }
      }
    }
  }

  // Phase two: reduced costs of c against the current basis.
  Eigen::VectorXd obj2 = Eigen::VectorXd::Zero(n + m);
  obj2.head(n) = c;
  double val2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const int bcol = tab.basis[i];
    if (bcol < n && obj2[bcol] != 0.0) {
      const double f = obj2[bcol];
      obj2 -= f * tab.T.row(i).head(n + m).transpose();
      val2 += f * tab.T(i, n + m);
    }
  }
  run_simplex(tab, obj2, val2, n, tol);

  LpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] < n) {
      sol.x[tab.basis[i]] = tab.T(i, n + m);
    }
  }
  sol.objective = c.dot(sol.x);
  return sol;
}

} // namespace eqt
