#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "quenchsig/bloch.hpp"
#include "quenchsig/common.hpp"

namespace quenchsig {

/// Gapped protocol with random harmonics up to `max_order` on both sides.
/// Draws are repeated until both min |d| exceed `min_gap`.
QuenchProtocol random_protocol(std::mt19937_64& rng, int max_order = 2, double min_gap = 0.2);

/// Chiral protocol (d_z = 0, d_x even, d_y odd in k) for both sides, so that
/// n and n' are collinear at k = 0 and k = pi and the DCN is quantized.
QuenchProtocol random_chiral_protocol(std::mt19937_64& rng, int max_order = 2, double min_gap = 0.2);

struct SelftestCheck {
  std::string name;
  double max_error = 0.0;
  double tol = 0.0;
  bool passed() const { return max_error <= tol; }
};

/// Largest deviations between U = 0 exact diagonalization and the
/// free-fermion module along one quench.
struct OracleErrors {
  double rate = 0.0;
  double es = 0.0;
  double two_point = 0.0;
};

/// Compares on n_t uniform times in [0, t_max] with a half-chain cut. Near
/// exact zeros of the return amplitude the amplitudes are compared instead.
OracleErrors ed_oracle_errors(const QuenchProtocol& q, int L, Boundary bc, double t_max, int n_t);

/// Interaction-free ED against the free-fermion routes (rate, ES, two-point
/// functions), fast against dense ES, and the Slater-layer identities.
std::vector<SelftestCheck> run_selftest(std::uint64_t seed = 20240607, int random_draws = 4);

}  // namespace quenchsig
