#pragma once

// One-time pinning of the normalization and sign conventions that the
// geometry leaves open. Every run carries the resulting record.

#include "eqt/asymptotics.hpp"

#include <array>
#include <string>

namespace eqt {

struct KappaCandidate {
  double kappa = 0.0;
  /// |int_X Pi_k(x,x) dens_X - dim H^0| in units of the quadrature stderr.
  double quadrature_z = 0.0;
  /// Pi_k(x,x) / (k/pi)^d at large k; 1 for the consistent normalization.
  double diagonal_ratio = 0.0;
};

struct CalibrationRecord {
  double kappa_X = 1.0;
  std::vector<KappaCandidate> kappa_candidates;
  /// +1: gamma_k acts on z^alpha by e^{i(k theta_A - <phi, alpha>)}.
  int gamma_phase_sign = +1;
  Conventions conventions;
  /// max_k |trace - prediction| for each (phase sign, orientation) pair,
  /// in the order (+,+), (+,-), (-,+), (-,-).
  std::array<double, 4> lefschetz_residuals{};
  bool forced_wrong = false;
};

/// Chooses kappa_X in {1, 2 pi}: both satisfy the quadrature identity, only
/// one gives on-diagonal Szego scaling (k/pi)^d.
double calibrate_kappa(std::vector<KappaCandidate> *candidates,
                       std::uint64_t seed = 11, int n_samples = 1 << 14);

/// The symmetry with its phase sign flipped when sign = -1.
DiagonalSymmetry with_phase_sign(const DiagonalSymmetry &sym, int sign);

/// Pins the phase sign and h orientation with the trivial-G Lefschetz
/// identity on P^1. `force_wrong` flips the orientation afterwards (negative
/// control for the self-test).
CalibrationRecord calibrate(bool force_wrong = false, std::uint64_t seed = 11);

/// max_{k <= k_max} |exact trace - leading term| for the trivial-G, f = 1
/// Lefschetz configuration on P^1 under the given conventions.
double lefschetz_residual(int phase_sign, const Conventions &conv, int k_max = 60);

} // namespace eqt
