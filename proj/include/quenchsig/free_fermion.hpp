#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "quenchsig/bloch.hpp"

namespace quenchsig {

using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

/// Longest hopping (in unit cells) a lattice Hamiltonian may carry.
inline constexpr int kMaxHoppingRange = 2;

/// First-quantized 2L x 2L Hamiltonian, orbitals ordered A1,B1,A2,B2,...
struct LatticeHamiltonian {
  int L = 0;
  Boundary bc = Boundary::periodic;
  MatrixC matrix;

  int orbitals() const { return 2 * L; }
};

/// Real-space hoppings of f. Block (j, j') equals T_{j-j'} where
/// h(k) = sum_r T_r e^{ikr}; periodic contributions wrap modulo L.
LatticeHamiltonian build_lattice(const BlochFunction& f, int L, Boundary bc);

/// Projector P onto the occupied single-particle orbitals of a Slater
/// determinant. P(i,j) = <c^dag_j c_i>, so the flattened parent is I - 2P.
struct CorrelationMatrix {
  int L = 0;
  MatrixC P;

  double particle_number() const { return P.trace().real(); }
  /// <c^dag_i c_j>.
  cplx two_point(int i, int j) const { return P(j, i); }
};

/// Fills every negative-energy orbital. Throws NumericalError if an orbital
/// sits within 1e-10 of zero energy unless allow_degenerate is set, in which
/// case zero-energy orbitals are left empty.
CorrelationMatrix ground_correlation(const LatticeHamiltonian& H, bool allow_degenerate = false);

/// Occupied orbitals (columns) of the ground state of H.
MatrixC ground_orbitals(const LatticeHamiltonian& H, bool allow_degenerate = false);

/// P(t) = U P U^dag with U = exp(-i H' t).
CorrelationMatrix evolve_correlation(const CorrelationMatrix& C0, const LatticeHamiltonian& Hpost, double t);

/// Shares one eigendecomposition of H' across many evolution times.
class CorrelationEvolver {
 public:
  CorrelationEvolver(CorrelationMatrix C0, const LatticeHamiltonian& Hpost);

  CorrelationMatrix at(double t) const;
  /// exp(-i H' t).
  MatrixC propagator(double t) const;

 private:
  CorrelationMatrix C0_;
  MatrixC V_;
  Eigen::VectorXd E_;
  MatrixC P0_eig_;  // C0 in the eigenbasis of H'
};

inline constexpr double kInertTol = 1e-12;

struct EntanglementData {
  std::vector<double> xi;        // ascending
  std::vector<double> eps;       // ln((1-xi)/xi), +-inf for inert modes
  std::vector<double> lambdas;   // descending
  int active_modes = 0;
  /// Modes with xi above 1 - kInertTol.
  int filled_modes = 0;
  /// (lambda_1 - lambda_2) / lambda_1, set by the active mode nearest xi = 1/2.
  /// A vanishing value means every lambda sits in a degenerate multiplet.
  /// 1 when no mode is active.
  double relative_spread = 1.0;
  /// 1 - lambda_min / lambda_max over all 2^active eigenvalues.
  double total_spread = 0.0;

  /// The whole ES is organized in degenerate multiplets (lambda_1 = lambda_2).
  bool fully_degenerate(double tol = 1e-6) const { return active_modes > 0 && relative_spread < tol; }
  /// Multiplet size 2^p, p = number of modes whose pair splitting is below tol.
  double degeneracy_order(double tol = 1e-6) const;
};

/// Builds the many-body spectrum from single-particle eigenvalues xi.
EntanglementData entanglement_from_xi(std::vector<double> xi, int n_lambda);

/// The n_lambda largest products prod_m [1/2 + s_m (xi_m - 1/2)], best first.
std::vector<double> top_lambdas(const std::vector<double>& active_xi, int n_lambda);

/// Dense route: eigenvalues of the restriction of C to the first `cut` cells.
EntanglementData entanglement_spectrum(const CorrelationMatrix& C, int cut, int n_lambda);

/// 2x2 occupied-band projector (1 - n.sigma)/2 for Bloch vector d.
Eigen::Matrix2cd band_projector(const BlochVector3& d);

/// ES of the half-filled lower band of the parent at time t on a PBC ring of
/// L cells, built from momentum blocks. Uses a boundary-restricted
/// eigenproblem when the correlation range is short, else the dense route.
EntanglementData momentum_entanglement_spectrum(const QuenchProtocol& q, int L, int cut, double t,
                                                int n_lambda);

/// Real-space correlation matrix of the parent lower band at time t (PBC).
CorrelationMatrix momentum_correlation(const QuenchProtocol& q, int L, double t);

/// Q = I - 2P.
LatticeHamiltonian flattened_parent(const CorrelationMatrix& C);

/// Loschmidt rate -(1/L) ln |det(Phi0^dag U Phi0)|^2 of a Slater state.
double slater_rate(const MatrixC& occupied, const MatrixC& propagator, int L);

/// -(1/L) ln prod_k (1 + n(k).n_P(k,t))/2 on the L lattice momenta.
double finite_size_rate(const QuenchProtocol& q, int L, double t);

struct EscEvent {
  double t = 0.0;
  double spread = 0.0;
  double order = 0.0;  // 2^p for free fermions, prefix length for ED
};

/// Time-local minima of spread(t) on the grid, refined by golden section and
/// kept when below tol. spread must return {spread, order} at any time.
std::vector<EscEvent> detect_esc(const std::function<std::pair<double, double>(double)>& spread,
                                 const std::vector<double>& times, double tol);

/// Uniform time grid of n points on [0, t_max].
std::vector<double> time_grid(double t_max, int n);

/// Splits d_P(., t) into harmonics through order 2. Throws NumericalError if
/// higher harmonics exceed 1e-10.
BlochFunction parent_bloch_function(const QuenchProtocol& q, double t);

struct ParentSpectrumSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> energies;

  int zero_mode_count(std::size_t i, double tol = 1e-8) const;
};

ParentSpectrumSeries parent_obc_spectrum(const QuenchProtocol& q, int L, const std::vector<double>& times);

struct ZeroModeProfile {
  double energy = 0.0;
  std::vector<double> density;  // per unit cell
  /// Fitted decay length in unit cells; 0 if the tail is too short to fit.
  double xi_loc = 0.0;
  bool left_edge = true;
};

/// Cell densities of the modes with |E| < tol, separated into edge-localized
/// combinations by diagonalizing the position operator in that subspace.
std::vector<ZeroModeProfile> zero_mode_profiles(const LatticeHamiltonian& H, double tol = 1e-8);

/// nu(t) from (-1)^nu = sign[d_P^x(0,t) d_P^x(pi,t)].
int z2_invariant(const QuenchProtocol& q, double t);
/// Same sign rule on explicit values.
int z2_from_values(double dx_at_0, double dx_at_pi);

}  // namespace quenchsig
