#pragma once

// Quadrature on the circle bundle X = S^{2d+1}.
//
// Points come from a Halton sequence under a seeded Cranley-Patterson
// rotation, pushed to complex Gaussians by Box-Muller and normalized. Error
// bars come from independent rotations of the same point set.

#include "eqt/model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace eqt {

/// Deterministic, uniformly distributed unit vectors in C^{d+1}.
std::vector<PointX> sample_sphere(int n, std::uint64_t seed,
                                  const ProjectiveModel &model);

struct QuadratureEstimate {
  cplx value{0.0, 0.0};
  /// Standard error of |value|, combining real and imaginary parts.
  double stderr_ = 0.0;
  int n_samples = 0;
};

/// Estimates int_X F dens_X using `replicates` independent rotations of an
/// n/replicates-point Halton set.
QuadratureEstimate integrate_over_X(const std::function<cplx(const PointX &)> &F,
                                    int n, std::uint64_t seed,
                                    const ProjectiveModel &model,
                                    int replicates = 32);

/// splitmix64 step; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace eqt
