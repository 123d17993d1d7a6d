#include "eqt/symmetry.hpp"

#include "eqt/error.hpp"

#include <cmath>
#include <string>

namespace eqt {

LinearizedTorusAction LinearizedTorusAction::trivial(int d) {
  LinearizedTorusAction a;
  a.g = 0;
  a.n = d + 1;
  a.W = IntMatrix::Zero(0, d + 1);
  return a;
}

LinearizedTorusAction
LinearizedTorusAction::from_rows(int d,
                                 const std::vector<std::vector<long long>> &rows) {
  LinearizedTorusAction a;
  a.g = static_cast<int>(rows.size());
  a.n = d + 1;
  a.W = IntMatrix::Zero(a.g, a.n);
  for (int i = 0; i < a.g; ++i) {
    if (static_cast<int>(rows[i].size()) != a.n) {
      fail(ErrorCode::config_invalid,
           "weight row " + std::to_string(i) + " has length " +
               std::to_string(rows[i].size()) + ", expected " +
               std::to_string(a.n));
    }
    for (int j = 0; j < a.n; ++j) {
      a.W(i, j) = rows[i][j];
    }
  }
  return a;
}

void LinearizedTorusAction::validate(const ProjectiveModel &model) const {
  if (n != model.n_coords() || W.cols() != n || W.rows() != g) {
    fail(ErrorCode::config_invalid, "weight matrix shape does not match d");
  }
  if (g > model.d) {
    fail(ErrorCode::config_invalid,
         "torus rank exceeds d; 0 cannot be a regular value");
  }
}

DiagonalSymmetry DiagonalSymmetry::identity(int d) {
  DiagonalSymmetry s;
  s.phi.assign(d + 1, 0.0);
  return s;
}

bool DiagonalSymmetry::is_identity(double tol) const {
  if (angle_distance(theta_A) > tol) {
    return false;
  }
  for (double p : phi) {
    if (angle_distance(p) > tol) {
      return false;
    }
  }
  return true;
}

void DiagonalSymmetry::validate(const ProjectiveModel &model) const {
  if (static_cast<int>(phi.size()) != model.n_coords()) {
    fail(ErrorCode::config_invalid, "phase list length must be d + 1");
  }
}

IsotypeLabel weight_of(const MultiIndex &alpha,
                       const LinearizedTorusAction &action) {
  require(static_cast<int>(alpha.size()) == action.n,
          "multi-index length does not match the action");
  IsotypeLabel w(action.g, 0);
  for (int i = 0; i < action.g; ++i) {
    long long s = 0;
    for (int j = 0; j < action.n; ++j) {
      s += action.W(i, j) * alpha[j];
    }
    w[i] = -s;
  }
  return w;
}

IsotypeBasis isotype_basis(int k, const IsotypeLabel &label,
                           const LinearizedTorusAction &action,
                           const SectionBasis &basis) {
  require(basis.k == k, "section basis is at a different level");
  require(static_cast<int>(label.size()) == action.g,
          "isotype label length must equal the torus rank");
  IsotypeBasis out;
  out.k = k;
  out.label = label;
  for (std::size_t i = 0; i < basis.indices.size(); ++i) {
    if (weight_of(basis.indices[i], action) == label) {
      out.indices.push_back(basis.indices[i]);
      out.log_norms.push_back(basis.log_norms[i]);
    }
  }
  return out;
}

std::map<IsotypeLabel, long long>
isotype_dimensions(int k, const LinearizedTorusAction &action) {
  std::map<IsotypeLabel, long long> dims;
  for (const auto &alpha : enumerate_multi_indices(k, action.n)) {
    ++dims[weight_of(alpha, action)];
  }
  return dims;
}

Eigen::VectorXd moment_map(const PointX &x, const LinearizedTorusAction &action) {
  require(x.size() == action.n, "point does not match the action");
  const Eigen::VectorXd u = x.moduli_squared();
  return -(action.W.cast<double>() * u);
}

PointX act(const Eigen::VectorXd &angles, const PointX &x,
           const LinearizedTorusAction &action) {
  require(angles.size() == action.g, "torus element has the wrong rank");
  Eigen::VectorXcd v = x.coords();
  for (int j = 0; j < action.n; ++j) {
    const double a = action.weight(j).dot(angles);
    v[j] *= std::polar(1.0, a);
  }
  return PointX::from_unit(v);
}

cplx character(const IsotypeLabel &label, const Eigen::VectorXd &angles) {
  require(static_cast<int>(label.size()) == angles.size(),
          "character label and torus element disagree in rank");
  double a = 0.0;
  for (int i = 0; i < angles.size(); ++i) {
    a += static_cast<double>(label[i]) * angles[i];
  }
  return std::polar(1.0, a);
}

cplx gamma_phase(const MultiIndex &alpha, const DiagonalSymmetry &sym) {
  require(alpha.size() == sym.phi.size(),
          "multi-index length does not match the symmetry");
  double a = degree(alpha) * sym.theta_A;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    a -= alpha[j] * sym.phi[j];
  }
  return std::polar(1.0, a);
}

PointX gamma_X_inverse(const PointX &x, const DiagonalSymmetry &sym) {
  Eigen::VectorXcd v = x.coords();
  for (int j = 0; j < x.size(); ++j) {
    v[j] *= std::polar(1.0, sym.theta_A - sym.phi[j]);
  }
  return PointX::from_unit(v);
}

PointX gamma_X(const PointX &x, const DiagonalSymmetry &sym) {
  Eigen::VectorXcd v = x.coords();
  for (int j = 0; j < x.size(); ++j) {
    v[j] *= std::polar(1.0, sym.phi[j] - sym.theta_A);
  }
  return PointX::from_unit(v);
}

LogComplex log_equivariant_kernel(const PointX &x, const PointX &y,
                                  const IsotypeBasis &basis) {
  LogComplexSum sum;
  for (std::size_t i = 0; i < basis.indices.size(); ++i) {
    const LogComplex mx = log_monomial(basis.indices[i], x);
    const LogComplex my = log_monomial(basis.indices[i], y);
    if (mx.is_zero() || my.is_zero()) {
      continue;
    }
    sum.add(mx.log_abs + my.log_abs - basis.log_norms[i], mx.arg - my.arg);
  }
  return {sum.log_abs(), sum.arg()};
}

cplx equivariant_kernel(const PointX &x, const PointX &y,
                        const IsotypeBasis &basis) {
  return log_equivariant_kernel(x, y, basis).value();
}

} // namespace eqt
