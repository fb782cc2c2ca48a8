#pragma once

#include <array>
#include <vector>

#include "quenchsig/bloch.hpp"

namespace quenchsig {

/// gamma(k) = [n(k).n'(k)]^2.
double gamma(const QuenchProtocol& q, double k);

/// Signed overlap n(k).n'(k) of the pre- and post-quench unit vectors.
double unit_overlap(const QuenchProtocol& q, double k);

struct RateValue {
  double f = 0.0;
  /// Grid momenta where the integrand vanished; each one is replaced by the
  /// singularity correction of a quadratic zero.
  int excluded = 0;
};

/// Integrand values below this count as exact zeros.
inline constexpr double kRateZero = 1e-24;

/// f(t) = -(1/N) sum_k ln[cos^2(d' t) + gamma sin^2(d' t)] on the uniform grid.
RateValue rate_function(const QuenchProtocol& q, double t, int n_k = 1024);

struct RateCurve {
  std::vector<double> times;
  std::vector<double> values;
  /// True if any time needed grid-point exclusion.
  bool excluded_points = false;
};

RateCurve rate_curve(const QuenchProtocol& q, const std::vector<double>& times, int n_k = 1024);

struct DqptEvent {
  double k_star = 0.0;
  double t_star = 0.0;
};

/// Roots k* of n.n' (sign-change bisection on the grid) and the critical
/// times t* = (2n+1) pi / (2 |d'(k*)|) up to t_max, sorted by time.
std::vector<DqptEvent> dqpt_times(const QuenchProtocol& q, double t_max, int n_k = 1024);

/// Distinct roots k* of n.n' only.
std::vector<double> critical_momenta(const QuenchProtocol& q, int n_k = 1024);

struct FixedMomentum {
  double k = 0.0;
  bool parallel = true;
};

inline constexpr double kFixedMomentumTol = 1e-10;
inline constexpr double kFixedMomentumWarn = 1e-6;

/// Momenta where n(k) = +-n'(k), sorted ascending in [-pi, pi). Momenta
/// that miss by less than kFixedMomentumWarn are appended to near_misses.
std::vector<FixedMomentum> fixed_momenta(const QuenchProtocol& q, int n_k = 2048,
                                         std::vector<double>* near_misses = nullptr);

struct DcnSegment {
  double k_lo = 0.0;
  double k_hi = 0.0;
  double numeric = 0.0;
  double analytic = 0.0;
};

struct DcnResult {
  std::vector<DcnSegment> segments;
  std::vector<FixedMomentum> fixed;
};

/// Segments between consecutive fixed momenta (the last one wraps through
/// k = pi) with the closed-form value 1/2 (cos theta_m - cos theta_{m+1}).
/// The numeric column is left at zero.
DcnResult dcn_analytic(const QuenchProtocol& q);

/// Midpoint-rule solid-angle integral over segment m of dcn_analytic(q).
double dcn_numeric(const QuenchProtocol& q, int m, int n_k = 512, int n_t = 512);
double dcn_numeric(const QuenchProtocol& q, const DcnSegment& segment, int n_k = 512, int n_t = 512);

/// Both columns filled.
DcnResult dcn(const QuenchProtocol& q, int n_k = 512, int n_t = 512);

using Spinor = std::array<cplx, 2>;

/// Normalized lower-band eigenvector of d.sigma.
Spinor lower_band_state(const BlochVector3& d);

/// -arg prod <u_n|u_{n+1}> over a closed loop, in (-pi, pi].
double berry_phase(const std::vector<Spinor>& states);

/// Zak phase of the lower band of the parent Hamiltonian at time t.
double zak_phase(const QuenchProtocol& q, double t, int n_k = 1024);

struct ZakSeries {
  std::vector<double> times;
  std::vector<double> phases;
};

ZakSeries zak_series(const QuenchProtocol& q, const std::vector<double>& times, int n_k = 1024);

}  // namespace quenchsig
