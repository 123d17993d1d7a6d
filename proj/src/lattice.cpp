#include "eqt/lattice.hpp"

#include "eqt/error.hpp"
#include "eqt/model.hpp"

#include <cmath>
#include <cstdlib>
#include <utility>

namespace eqt {

namespace {

void swap_rows(IntMatrix &M, int a, int b) {
  if (a != b) {
    M.row(a).swap(M.row(b));
  }
}

void swap_cols(IntMatrix &M, int a, int b) {
  if (a != b) {
    M.col(a).swap(M.col(b));
  }
}

} // namespace

SmithForm smith_normal_form(const IntMatrix &A) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  SmithForm s;
  s.D = A;
  s.U = IntMatrix::Identity(m, m);
  s.V = IntMatrix::Identity(n, n);
  IntMatrix &D = s.D;

  int t = 0;
  for (; t < std::min(m, n); ++t) {
    // Pivot: smallest nonzero |entry| in the trailing block.
    int pr = -1;
    int pc = -1;
    for (int i = t; i < m; ++i) {
      for (int j = t; j < n; ++j) {
        if (D(i, j) != 0 &&
            (pr < 0 || std::llabs(D(i, j)) < std::llabs(D(pr, pc)))) {
          pr = i;
          pc = j;
        }
      }
    }
    if (pr < 0) {
      break;
    }
    swap_rows(D, t, pr);
    swap_rows(s.U, t, pr);
    swap_cols(D, t, pc);
    swap_cols(s.V, t, pc);

    bool clean = false;
    while (!clean) {
      clean = true;
      for (int i = t + 1; i < m; ++i) {
        const long long q = D(i, t) / D(t, t);
        if (q != 0) {
          D.row(i) -= q * D.row(t);
          s.U.row(i) -= q * s.U.row(t);
        }
        if (D(i, t) != 0) {
          swap_rows(D, t, i);
          swap_rows(s.U, t, i);
          clean = false;
        }
      }
      for (int j = t + 1; j < n; ++j) {
        const long long q = D(t, j) / D(t, t);
        if (q != 0) {
          D.col(j) -= q * D.col(t);
          s.V.col(j) -= q * s.V.col(t);
        }
        if (D(t, j) != 0) {
          swap_cols(D, t, j);
          swap_cols(s.V, t, j);
          clean = false;
        }
      }
      if (clean) {
        // Divisibility: the pivot must divide the whole trailing block.
        for (int i = t + 1; i < m && clean; ++i) {
          for (int j = t + 1; j < n; ++j) {
            if (D(i, j) % D(t, t) != 0) {
              D.row(t) += D.row(i);
              s.U.row(t) += s.U.row(i);
              clean = false;
              break;
            }
          }
        }
      }
    }
    if (D(t, t) < 0) {
      D.row(t) *= -1;
      s.U.row(t) *= -1;
    }
  }
  s.rank = t;
  return s;
}

int integer_rank(const IntMatrix &A) { return smith_normal_form(A).rank; }

double wrap_angle(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r < 0.0) {
    r += 2.0 * kPi;
  }
  if (r >= 2.0 * kPi) {
    r = 0.0;
  }
  return r;
}

double angle_distance(double a) {
  const double r = wrap_angle(a);
  return std::min(r, 2.0 * kPi - r);
}

PhaseSolutions solve_phase_system(const IntMatrix &A,
                                  const Eigen::VectorXd &phases, double tol) {
  require(A.rows() == phases.size(), "phase system shape mismatch");
  const SmithForm s = smith_normal_form(A);
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const Eigen::VectorXd rhs = s.U.cast<double>() * phases;

  PhaseSolutions out;
  for (int i = s.rank; i < m; ++i) {
    if (angle_distance(rhs[i]) > tol) {
      return out;
    }
  }
  out.consistent = true;
  out.free_dims = n - s.rank;

  // Enumerate the finite choices m_i in [0, D_ii) for the pivot coordinates.
  std::vector<long long> counter(s.rank, 0);
  while (true) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < s.rank; ++i) {
      const double dii = static_cast<double>(s.D(i, i));
      y[i] = (rhs[i] + 2.0 * kPi * static_cast<double>(counter[i])) / dii;
    }
    Eigen::VectorXd x = s.V.cast<double>() * y;
    for (int j = 0; j < n; ++j) {
      x[j] = wrap_angle(x[j]);
    }
    out.solutions.push_back(std::move(x));

    int pos = 0;
    while (pos < s.rank) {
      if (++counter[pos] < s.D(pos, pos)) {
        break;
      }
      counter[pos] = 0;
      ++pos;
    }
    if (pos == s.rank) {
      break;
    }
  }
  return out;
}

long long kernel_torsion_order(const IntMatrix &A) {
  const SmithForm s = smith_normal_form(A);
  if (s.rank < A.cols()) {
    return 0;
  }
  long long order = 1;
  for (int i = 0; i < s.rank; ++i) {
    order *= s.D(i, i);
  }
  return order;
}

} // namespace eqt
