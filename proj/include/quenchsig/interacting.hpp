#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "quenchsig/bloch.hpp"
#include "quenchsig/free_fermion.hpp"

namespace quenchsig {

/// Fixed-N occupation basis over 2L orbitals (A1,B1,A2,B2,...). Bit o of a
/// state is orbital o. A state is c^dag_{o1} c^dag_{o2} ... |0> with
/// o1 < o2 < ..., i.e. creation operators applied in descending orbital
/// index, so c_o acquires (-1)^(number of occupied orbitals below o).
class FockBasis {
 public:
  static constexpr std::size_t kMaxStates = 10'000'000;

  FockBasis(int orbitals, int particles);

  int orbitals() const { return orbitals_; }
  int particles() const { return particles_; }
  std::size_t dim() const { return states_.size(); }
  const std::vector<std::uint64_t>& states() const { return states_; }
  std::uint64_t state(std::size_t i) const { return states_[i]; }
  std::optional<std::size_t> index(std::uint64_t bits) const;

  static std::string sign_convention();

 private:
  int orbitals_;
  int particles_;
  std::vector<std::uint64_t> states_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;
using SparseC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct ManyBodyOperator {
  BasisPtr basis;
  SparseC matrix;
  int L = 0;

  VectorC apply(const VectorC& v) const;
};

struct FockState {
  BasisPtr basis;
  VectorC amplitudes;

  double norm() const { return amplitudes.norm(); }
};

/// Fermionic sign and target of c^dag_i c_j on `bits`; nullopt if zero.
std::optional<std::pair<std::uint64_t, double>> hop(std::uint64_t bits, int i, int j);

/// sum_ij h_ij c^dag_i c_j + U sum_j n_{A_j} n_{B_j} at N particles
/// (default: half filling, one per unit cell).
ManyBodyOperator build_hubbard(const BlochFunction& f, double U, int L, Boundary bc, int particles = -1);
/// Same from an explicit single-particle matrix.
ManyBodyOperator build_hubbard(const LatticeHamiltonian& h, double U, int particles = -1);

struct GroundMultiplet {
  std::vector<double> energies;
  std::vector<FockState> states;
  /// Energy of the first level outside the multiplet, if computed.
  std::optional<double> next_energy;
};

struct EigenOptions {
  std::size_t dense_limit = 512;
  int max_krylov = 120;
  int max_restarts = 60;
  double residual_tol = 1e-10;
  double degeneracy_tol = 1e-8;
};

/// Lowest eigenvector(s). Returns at least `degeneracy_hint` states plus every
/// further state within degeneracy_tol of the lowest energy.
GroundMultiplet ground_state(const ManyBodyOperator& H, int degeneracy_hint = 1, const EigenOptions& opts = {});

struct EvolveOptions {
  std::size_t dense_limit = 512;
  int krylov_dim = 30;
  double step_tol = 1e-10;
  double min_step = 1e-12;
};

/// Reuses one dense eigendecomposition (small bases) or runs adaptive
/// Krylov steps (large bases) to apply exp(-iHt).
class StateEvolver {
 public:
  explicit StateEvolver(const ManyBodyOperator& H, const EvolveOptions& opts = {});

  FockState evolve(const FockState& psi, double t) const;
  bool dense() const { return dense_; }

 private:
  const ManyBodyOperator* H_;
  EvolveOptions opts_;
  bool dense_ = false;
  MatrixC V_;
  Eigen::VectorXd E_;
};

FockState evolve_state(const FockState& psi, const ManyBodyOperator& H, double t, const EvolveOptions& opts = {});

double expectation(const FockState& psi, const ManyBodyOperator& H);
cplx overlap(const FockState& a, const FockState& b);

struct LoschmidtValue {
  double rate = 0.0;
  bool saturated = false;
};

/// -(1/L) ln |<psi0|psit>|^2 with L in unit cells.
LoschmidtValue loschmidt_rate(const FockState& psi0, const FockState& psit, int L);

/// Squared Schmidt coefficients across the cut after `cut` cells, descending.
std::vector<double> many_body_es(const FockState& psi, int cut, int n_lambda = -1);

/// Number of leading lambdas equal to lambda_1 within relative tol.
int degenerate_prefix(const std::vector<double>& lambdas, double tol);

/// <c^dag_i c_j> for all orbital pairs.
MatrixC two_point_matrix(const FockState& psi);

/// Slater determinant as a many-body state; column order sets the sign.
FockState fock_from_orbitals(const BasisPtr& basis, const MatrixC& orbitals);

/// Inversion: orbital o -> 2L-1-o (A_j <-> B_{L+1-j}).
FockState apply_inversion(const FockState& psi);

/// Combinations of the multiplet diagonal in the inversion, ordered by
/// eigenvalue descending (+1 first).
std::vector<FockState> inversion_eigenstates(const std::vector<FockState>& multiplet);

struct IsingParameters {
  double field = 0.0;
  double coupling = 0.0;
  /// "topological", "critical" or "trivial" for the fermionic chain
  /// (paramagnetic, critical and ordered Ising phases).
  std::string phase;
};

/// Ising form J T^z_j - (U/4) T^x_{j-1} T^x_j; only defined for J' = 0.
IsingParameters map_to_ising(double J, double U, double J_prime = 0.0);

/// Kitaev Bloch function (0, -U/2 sin k, 2J - U/2 cos k).
BlochFunction map_to_kitaev(double J, double U, double J_prime = 0.0);

/// Return-amplitude rate of a transverse-field Ising chain quenched from
/// coupling_pre to coupling_post at fixed field, by dense ED on 2^L states.
std::vector<double> ising_rate(double field, double coupling_pre, double coupling_post, int L, Boundary bc,
                               const std::vector<double>& times);

struct SlaterState {
  int L = 0;
  MatrixC orbitals;  // 2L x N, orthonormal columns

  int particles() const { return static_cast<int>(orbitals.cols()); }
};

enum class Sublattice { A, B };

/// prod_j a^dag_j |0> or prod_j b^dag_j |0>, cells in ascending order. With
/// bond_ordered the B state lists b_L first, pairing b_j with a_{j+1}.
SlaterState polarized_state(int L, Sublattice s, bool bond_ordered = false);

cplx slater_overlap(const SlaterState& phi, const SlaterState& psi);

/// exp(-i H t) applied to each orbital.
SlaterState evolve_slater(const SlaterState& s, const LatticeHamiltonian& H, double t);

/// <Psi_sign|Psi_sign(t)> for the cat state (|Psi_A> + sign |Psi_B>)/sqrt(2)
/// evolved with the interaction-free chain J a^dag_{j+1} b_j + h.c.
cplx cat_overlap(int L, Boundary bc, int sign, double t, double J = 1.0);

struct BondTerm {
  int bond = 0;   // 1-based bond j couples a_{j+1} and b_j
  int parity = 1; // +1 for w_{j,+}, -1 for w_{j,-}
  cplx amplitude;
};

struct BondExpansion {
  /// Boundary orbitals |1,A> and |L,B> are isolated and do not evolve.
  bool stationary = false;
  std::vector<BondTerm> terms;
};

/// exp(-i H' t)|j,s> for 1-based cell j on an open chain of L cells with
/// H' = sum_j (a^dag_{j+1} b_j + h.c.).
BondExpansion bond_basis_evolution(int j, Sublattice s, double t, int L);

/// Site amplitudes (2L vector) of a bond expansion, for the state |j,s>.
VectorC bond_expansion_to_sites(const BondExpansion& e, int j, Sublattice s, int L);

}  // namespace quenchsig
