#include "eqt/model.hpp"

#include "eqt/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace eqt {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

ProjectiveModel ProjectiveModel::make(int d, double kappa_X) {
  require(d >= 1, "projective dimension must be positive");
  require(kappa_X > 0.0, "circle fiber normalization must be positive");
  return ProjectiveModel{d, kappa_X};
}

double ProjectiveModel::vol_M() const {
  return std::exp(d * std::log(kPi) - log_factorial(d));
}

PointX PointX::normalized(const Eigen::VectorXcd &v) {
  const double n = v.norm();
  require(n > 0.0 && std::isfinite(n), "cannot normalize a zero vector");
  return PointX(v / n);
}

PointX PointX::from_unit(const Eigen::VectorXcd &v) {
  require(std::abs(v.norm() - 1.0) <= 1e-12, "point is not a unit vector");
  return PointX(v);
}

PointX PointX::rotated(double angle) const {
  return PointX(coords_ * std::polar(1.0, angle));
}

Eigen::VectorXd PointX::moduli_squared() const {
  return coords_.cwiseAbs2();
}

cplx hermitian_product(const PointX &x, const PointX &y) {
  require(x.size() == y.size(), "points live in different models");
  // Eigen's dot conjugates the first argument.
  return y.coords().dot(x.coords());
}

int degree(const MultiIndex &alpha) {
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

std::vector<MultiIndex> enumerate_multi_indices(int k, int n_vars) {
  require(k >= 0 && n_vars >= 1, "invalid multi-index enumeration request");
  std::vector<MultiIndex> out;
  MultiIndex cur(n_vars, 0);
  // Depth-first over entries 0..n_vars-2, the last entry takes the rest.
  auto rec = [&](auto &&self, int pos, int remaining) -> void {
    if (pos == n_vars - 1) {
      cur[pos] = remaining;
      out.push_back(cur);
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      cur[pos] = a;
      self(self, pos + 1, remaining - a);
    }
  };
  rec(rec, 0, k);
  return out;
}

double log_factorial(int n) {
  require(n >= 0, "factorial of a negative integer");
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_binomial(int n, int k) {
  require(k >= 0 && k <= n, "binomial out of range");
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double binomial(int n, int k) { return std::round(std::exp(log_binomial(n, k))); }

double log_monomial_norm(const MultiIndex &alpha, const ProjectiveModel &model) {
  require(static_cast<int>(alpha.size()) == model.n_coords(),
          "multi-index length does not match the model");
  double s = std::log(model.vol_X()) + log_factorial(model.d);
  int k = 0;
  for (int a : alpha) {
    require(a >= 0, "multi-index entries must be nonnegative");
    s += log_factorial(a);
    k += a;
  }
  return s - log_factorial(model.d + k);
}

double monomial_norm(const MultiIndex &alpha, const ProjectiveModel &model) {
  return std::exp(log_monomial_norm(alpha, model));
}

SectionBasis make_section_basis(int k, const ProjectiveModel &model) {
  SectionBasis b;
  b.k = k;
  b.indices = enumerate_multi_indices(k, model.n_coords());
  b.log_norms.reserve(b.indices.size());
  for (const auto &alpha : b.indices) {
    b.log_norms.push_back(log_monomial_norm(alpha, model));
  }
  return b;
}

bool LogComplex::is_zero() const { return log_abs == kNegInf; }

cplx LogComplex::value() const {
  if (is_zero()) {
    return {0.0, 0.0};
  }
  return std::polar(std::exp(log_abs), arg);
}

LogComplex log_monomial(const MultiIndex &alpha, const PointX &x) {
  require(static_cast<int>(alpha.size()) == x.size(),
          "multi-index length does not match the point");
  double la = 0.0;
  double ar = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    if (alpha[j] == 0) {
      continue;
    }
    const double r = std::abs(x[j]);
    if (r == 0.0) {
      return {kNegInf, 0.0};
    }
    la += alpha[j] * std::log(r);
    ar += alpha[j] * std::arg(x[j]);
  }
  return {la, ar};
}

cplx monomial_value(const MultiIndex &alpha, const PointX &x) {
  return log_monomial(alpha, x).value();
}

void LogComplexSum::add(double log_abs, double arg) {
  if (log_abs == kNegInf) {
    return;
  }
  if (log_abs > scale_) {
    if (scale_ != kNegInf) {
      acc_ *= std::exp(scale_ - log_abs);
    }
    scale_ = log_abs;
  }
  acc_ += std::polar(std::exp(log_abs - scale_), arg);
}

bool LogComplexSum::is_zero() const {
  return scale_ == kNegInf || acc_ == cplx(0.0, 0.0);
}

double LogComplexSum::log_abs() const {
  if (is_zero()) {
    return kNegInf;
  }
  return scale_ + std::log(std::abs(acc_));
}

double LogComplexSum::arg() const { return is_zero() ? 0.0 : std::arg(acc_); }

cplx LogComplexSum::value() const {
  if (is_zero()) {
    return {0.0, 0.0};
  }
  return acc_ * std::exp(scale_);
}

LogComplex log_szego_kernel(const PointX &x, const PointX &y, int k,
                            const ProjectiveModel &model) {
  require(k >= 0, "level must be nonnegative");
  const cplx ip = hermitian_product(x, y);
  const double lc = log_binomial(k + model.d, model.d) - std::log(model.vol_X());
  if (k == 0) {
    return {lc, 0.0};
  }
  if (std::abs(ip) == 0.0) {
    return {kNegInf, 0.0};
  }
  return {lc + k * std::log(std::abs(ip)), k * std::arg(ip)};
}

cplx szego_kernel(const PointX &x, const PointX &y, int k,
                  const ProjectiveModel &model) {
  return log_szego_kernel(x, y, k, model).value();
}

} // namespace eqt
