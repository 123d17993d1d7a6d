#include "eqt/sampling.hpp"

#include "eqt/error.hpp"

#include <array>
#include <cmath>
#include <random>

namespace eqt {

namespace {

constexpr std::array<int, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                         23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, int base) {
  const double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<PointX> sample_sphere(int n, std::uint64_t seed,
                                  const ProjectiveModel &model) {
  require(n >= 1, "sample count must be positive");
  const int dims = 2 * model.n_coords();
  require(dims <= static_cast<int>(kPrimes.size()),
          "model too large for the Halton sampler");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(dims);
  for (auto &s : shift) {
    s = unif(rng);
  }

  std::vector<PointX> out;
  out.reserve(n);
  Eigen::VectorXcd v(model.n_coords());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < model.n_coords(); ++j) {
      double a = radical_inverse(i + 1, kPrimes[2 * j]) + shift[2 * j];
      double b = radical_inverse(i + 1, kPrimes[2 * j + 1]) + shift[2 * j + 1];
      a -= std::floor(a);
      b -= std::floor(b);
      // |z_j|^2 is exponential; 1 - a lies in (0, 1].
      const double r = std::sqrt(-std::log1p(-a));
      v[j] = std::polar(r, 2.0 * kPi * b);
    }
    if (v.norm() == 0.0) {
      v[0] = 1.0;
    }
    out.push_back(PointX::normalized(v));
  }
  return out;
}

QuadratureEstimate integrate_over_X(const std::function<cplx(const PointX &)> &F,
                                    int n, std::uint64_t seed,
                                    const ProjectiveModel &model,
                                    int replicates) {
  require(replicates >= 2, "need at least two replicates for an error bar");
  require(n >= replicates, "fewer samples than replicates");
  const int per = n / replicates;
  std::vector<cplx> means;
  means.reserve(replicates);
  for (int r = 0; r < replicates; ++r) {
    const auto pts = sample_sphere(per, mix_seed(seed, r), model);
    cplx s{0.0, 0.0};
    for (const auto &p : pts) {
      s += F(p);
    }
    means.push_back(s / static_cast<double>(per));
  }
  cplx mean{0.0, 0.0};
  for (const auto &m : means) {
    mean += m;
  }
  mean /= static_cast<double>(replicates);
  double var = 0.0;
  for (const auto &m : means) {
    var += std::norm(m - mean);
  }
  var /= static_cast<double>(replicates - 1);

  QuadratureEstimate q;
  q.value = mean * model.vol_X();
  q.stderr_ = std::sqrt(var / replicates) * model.vol_X();
  q.n_samples = per * replicates;
  return q;
}

} // namespace eqt
