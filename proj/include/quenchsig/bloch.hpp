#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quenchsig/common.hpp"

namespace quenchsig {

/// Real 3-vector d(k) of a two-band Bloch Hamiltonian h(k) = d.sigma.
struct BlochVector3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double dot(const BlochVector3& o) const { return x * o.x + y * o.y + z * o.z; }
  BlochVector3 cross(const BlochVector3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  BlochVector3 normalized() const;

  BlochVector3& operator+=(const BlochVector3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend BlochVector3 operator+(BlochVector3 a, const BlochVector3& b) { return a += b; }
  friend BlochVector3 operator-(const BlochVector3& a, const BlochVector3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend BlochVector3 operator-(const BlochVector3& a) { return {-a.x, -a.y, -a.z}; }
  friend BlochVector3 operator*(double s, const BlochVector3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend BlochVector3 operator*(const BlochVector3& a, double s) { return s * a; }
  friend BlochVector3 operator/(const BlochVector3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend bool operator==(const BlochVector3&, const BlochVector3&) = default;
};

/// One Fourier harmonic: contributes cos_part*cos(hk) + sin_part*sin(hk).
struct Harmonic {
  BlochVector3 cos_part;
  BlochVector3 sin_part;
};

using ParamMap = std::map<std::string, double, std::less<>>;

/// Parametrized map k -> d(k), stored as a finite harmonic series.
///
/// Every supported family (constant, SSH circle, Rice-Mele, dispersive
/// Rice-Mele, Kitaev, user harmonics) is a trigonometric polynomial, so
/// evaluation is a short exact sum. Entry h of `harmonics()` is order h.
class BlochFunction {
 public:
  static constexpr int kMaxOrder = 8;

  BlochFunction() = default;
  BlochFunction(std::string family, ParamMap params, std::vector<Harmonic> harmonics,
                bool allow_gapless = false);

  /// J*(beta, 0, alpha), independent of k.
  static BlochFunction constant(double beta, double alpha, double J = 1.0);
  static BlochFunction constant_vector(const BlochVector3& d);
  /// Jx*(cos k, sin k, 0).
  static BlochFunction ssh_circle(double Jx);
  /// J*(cos k, sin k, alpha).
  static BlochFunction rice_mele(double alpha, double J = 1.0);
  /// J*(delta + cos k, sin k, alpha).
  static BlochFunction dispersive(double delta, double alpha, double J = 1.0);
  /// (0, -U/2 sin k, 2J - U/2 cos k).
  static BlochFunction kitaev(double J, double U);
  /// Hopping J a^dag_{j+1} b_j + J' a^dag_j b_j + h.c.: (J' + J cos k, -J sin k, 0).
  static BlochFunction interacting_ssh(double J, double J_prime = 0.0);
  /// (Jx, 0, Jz cos k).
  static BlochFunction x_cos_z(double Jx, double Jz);
  static BlochFunction from_harmonics(std::vector<Harmonic> harmonics, bool allow_gapless = false);

  /// Builds a named family; throws ConfigError on an unknown name or missing parameter.
  static BlochFunction from_family(std::string_view family, const ParamMap& params);

  BlochVector3 operator()(double k) const;
  /// Analytic dd/dk.
  BlochVector3 derivative(double k) const;

  int order() const { return static_cast<int>(harmonics_.size()) - 1; }
  const std::vector<Harmonic>& harmonics() const { return harmonics_; }
  const std::string& family() const { return family_; }
  const ParamMap& params() const { return params_; }
  bool allow_gapless() const { return allow_gapless_; }

  /// Minimum of |d(k)| over a uniform grid of n_k momenta.
  double min_norm(int n_k = 1024) const;
  /// If |d(k)| is the same on the whole grid (within tol) returns that value.
  std::optional<double> flat_norm(int n_k = 256, double tol = 1e-12) const;
  /// Throws GaplessError unless gapped on the grid or flagged allow_gapless.
  void require_gapped(int n_k = 1024) const;

 private:
  std::string family_ = "harmonic";
  ParamMap params_;
  std::vector<Harmonic> harmonics_{Harmonic{}};
  bool allow_gapless_ = false;
};

/// Pre- and post-quench Bloch functions over k in [-pi, pi).
struct QuenchProtocol {
  BlochFunction pre;
  BlochFunction post;
  std::string label;

  /// Protocol with pre and post exchanged.
  QuenchProtocol reversed() const { return {post, pre, label + " (reversed)"}; }
};

/// Uniform grid k_n = -pi + 2 pi n / n_k, n = 0..n_k-1.
std::vector<double> momentum_grid(int n_k);

/// d = d_par + d_perp relative to dp, with d_o = -(d x dp)/|dp|.
struct Decomposition {
  BlochVector3 par;
  BlochVector3 perp;
  BlochVector3 ortho;
};

Decomposition decompose(const BlochVector3& d, const BlochVector3& dp);

/// Parent Bloch vector d_P(k,t) of e^{-iH't} H e^{iH't}.
BlochVector3 parent_bloch(const QuenchProtocol& q, double k, double t);
/// Analytic time derivative of parent_bloch.
BlochVector3 parent_bloch_dt(const QuenchProtocol& q, double k, double t);

/// Period pi/|d'(k)| of the parent Bloch vector at momentum k.
double period_at(const QuenchProtocol& q, double k);

/// Common period of all momenta when the post-quench bands are flat.
std::optional<double> parent_period(const QuenchProtocol& q);

/// Time-dependent hoppings of the parent Hamiltonian for the quench
/// J(beta,0,alpha) -> J(cos k, sin k, alpha):
///   h_P = [[M, delta + eps e^{-ik} + eta e^{-2ik}], [h.c., -M]],
///   M(k) = m + m_c cos k + m_s sin k.
struct ParentCoefficients {
  cplx eta;
  cplx epsilon;
  cplx delta;
  double m = 0.0;
  double m_c = 0.0;
  double m_s = 0.0;

  /// Bloch vector rebuilt from the hoppings.
  BlochVector3 bloch(double k) const;
};

ParentCoefficients parent_coefficients(double alpha, double beta, double J, double t);

}  // namespace quenchsig
