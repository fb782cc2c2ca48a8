#include "quenchsig/free_fermion.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unsupported/Eigen/FFT>

#include "quenchsig/indicators.hpp"

namespace quenchsig {

namespace {

Eigen::Matrix2cd pauli(const BlochVector3& a) {
  Eigen::Matrix2cd m;
  m << cplx(a.z, 0.0), cplx(a.x, -a.y), cplx(a.x, a.y), cplx(-a.z, 0.0);
  return m;
}

// T_r for r in [-R, R], stored at index r + R.
std::vector<Eigen::Matrix2cd> hopping_blocks(const BlochFunction& f) {
  const int R = f.order();
  const auto& hs = f.harmonics();
  std::vector<Eigen::Matrix2cd> T(2 * R + 1, Eigen::Matrix2cd::Zero());
  T[R] = pauli(hs[0].cos_part);
  const cplx two_i(0.0, 2.0);
  for (int h = 1; h <= R; ++h) {
    const Eigen::Matrix2cd a = pauli(hs[h].cos_part) / 2.0;
    const Eigen::Matrix2cd b = pauli(hs[h].sin_part) / two_i;
    T[R + h] = a + b;
    T[R - h] = a - b;
  }
  return T;
}

int positive_mod(int a, int n) { return ((a % n) + n) % n; }

template <class F>
double golden_section(F&& f, double a, double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

LatticeHamiltonian build_lattice(const BlochFunction& f, int L, Boundary bc) {
  if (f.order() > kMaxHoppingRange) {
    throw ConfigError("unsupported hopping range: harmonic order " + std::to_string(f.order()) +
                      " exceeds " + std::to_string(kMaxHoppingRange));
  }
  if (L < 2) throw ConfigError("lattice needs at least two unit cells");
  const int R = f.order();
  const auto T = hopping_blocks(f);

  LatticeHamiltonian H{L, bc, MatrixC::Zero(2 * L, 2 * L)};
  for (int j = 0; j < L; ++j) {
    for (int r = -R; r <= R; ++r) {
      int jp = j - r;
      if (bc == Boundary::open) {
        if (jp < 0 || jp >= L) continue;
      } else {
        jp = positive_mod(jp, L);
      }
      H.matrix.block<2, 2>(2 * j, 2 * jp) += T[r + R];
    }
  }
  return H;
}

MatrixC ground_orbitals(const LatticeHamiltonian& H, bool allow_degenerate) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(H.matrix);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  const auto& E = es.eigenvalues();
  std::vector<int> occ;
  for (int n = 0; n < E.size(); ++n) {
    if (std::abs(E[n]) < 1e-10) {
      if (!allow_degenerate) {
        throw NumericalError("ambiguous filling: single-particle level at zero energy");
      }
      continue;
    }
    if (E[n] < 0.0) occ.push_back(n);
  }
  MatrixC out(H.matrix.rows(), static_cast<Eigen::Index>(occ.size()));
  for (std::size_t c = 0; c < occ.size(); ++c) out.col(c) = es.eigenvectors().col(occ[c]);
  return out;
}

CorrelationMatrix ground_correlation(const LatticeHamiltonian& H, bool allow_degenerate) {
  const MatrixC phi = ground_orbitals(H, allow_degenerate);
  return {H.L, phi * phi.adjoint()};
}

CorrelationEvolver::CorrelationEvolver(CorrelationMatrix C0, const LatticeHamiltonian& Hpost)
    : C0_(std::move(C0)) {
  if (C0_.P.rows() != Hpost.matrix.rows()) {
    throw ConfigError("correlation matrix and post-quench Hamiltonian differ in dimension");
  }
  Eigen::SelfAdjointEigenSolver<MatrixC> es(Hpost.matrix);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  V_ = es.eigenvectors();
  E_ = es.eigenvalues();
  P0_eig_ = V_.adjoint() * C0_.P * V_;
}

MatrixC CorrelationEvolver::propagator(double t) const {
  VectorC phase(E_.size());
  for (Eigen::Index a = 0; a < E_.size(); ++a) phase[a] = std::polar(1.0, -E_[a] * t);
  return V_ * phase.asDiagonal() * V_.adjoint();
}

CorrelationMatrix CorrelationEvolver::at(double t) const {
  if (t == 0.0) return C0_;
  const Eigen::Index n = E_.size();
  MatrixC M(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) M(a, b) = P0_eig_(a, b) * std::polar(1.0, -(E_[a] - E_[b]) * t);
  }
  MatrixC P = V_ * M * V_.adjoint();
  P = 0.5 * (P + P.adjoint()).eval();
  return {C0_.L, std::move(P)};
}

CorrelationMatrix evolve_correlation(const CorrelationMatrix& C0, const LatticeHamiltonian& Hpost, double t) {
  return CorrelationEvolver(C0, Hpost).at(t);
}

std::vector<double> top_lambdas(const std::vector<double>& active_xi, int n_lambda) {
  if (n_lambda <= 0) return {};
  double log_base = 0.0;
  std::vector<double> log_ratio;
  for (double x : active_xi) {
    const double hi = std::max(x, 1.0 - x);
    const double lo = std::min(x, 1.0 - x);
    log_base += std::log(hi);
    log_ratio.push_back(std::log(lo / hi));
  }
  std::sort(log_ratio.begin(), log_ratio.end(), std::greater<>());

  // Subsets of flipped modes in descending product order: each node is
  // (log value, index of the last flipped mode); children either append the
  // next mode or move the last flip one step further.
  struct Node {
    double value;
    std::size_t last;
    bool operator<(const Node& o) const { return value < o.value; }
  };
  std::vector<double> out{std::exp(log_base)};
  std::priority_queue<Node> heap;
  if (!log_ratio.empty()) heap.push({log_base + log_ratio[0], 0});
  while (static_cast<int>(out.size()) < n_lambda && !heap.empty()) {
    const Node top = heap.top();
    heap.pop();
    out.push_back(std::exp(top.value));
    const std::size_t next = top.last + 1;
    if (next < log_ratio.size()) {
      heap.push({top.value + log_ratio[next], next});
      heap.push({top.value - log_ratio[top.last] + log_ratio[next], next});
    }
  }
  return out;
}

namespace {

double pair_splitting(double x) { return 1.0 - std::min(x, 1.0 - x) / std::max(x, 1.0 - x); }

}  // namespace

double EntanglementData::degeneracy_order(double tol) const {
  int p = 0;
  for (double x : xi) {
    if (x >= kInertTol && x <= 1.0 - kInertTol && pair_splitting(x) < tol) ++p;
  }
  return std::ldexp(1.0, p);
}

EntanglementData entanglement_from_xi(std::vector<double> xi, int n_lambda) {
  EntanglementData data;
  for (double& x : xi) x = std::clamp(x, 0.0, 1.0);
  std::sort(xi.begin(), xi.end());
  std::vector<double> active;
  double log_ratio = 0.0;
  for (double x : xi) {
    if (x < kInertTol) {
      data.eps.push_back(std::numeric_limits<double>::infinity());
    } else if (x > 1.0 - kInertTol) {
      data.eps.push_back(-std::numeric_limits<double>::infinity());
      ++data.filled_modes;
    } else {
      data.eps.push_back(std::log((1.0 - x) / x));
      active.push_back(x);
      log_ratio += std::log(std::min(x, 1.0 - x) / std::max(x, 1.0 - x));
      data.relative_spread = std::min(data.relative_spread, pair_splitting(x));
    }
  }
  data.xi = std::move(xi);
  data.active_modes = static_cast<int>(active.size());
  data.total_spread = -std::expm1(log_ratio);
  data.lambdas = top_lambdas(active, n_lambda);
  return data;
}

EntanglementData entanglement_spectrum(const CorrelationMatrix& C, int cut, int n_lambda) {
  if (cut < 1 || cut >= C.L) throw ConfigError("entanglement cut must satisfy 1 <= cut < L");
  const MatrixC CS = C.P.topLeftCorner(2 * cut, 2 * cut);
  Eigen::SelfAdjointEigenSolver<MatrixC> es(CS, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  std::vector<double> xi(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  return entanglement_from_xi(std::move(xi), n_lambda);
}

Eigen::Matrix2cd band_projector(const BlochVector3& d) {
  return 0.5 * (Eigen::Matrix2cd::Identity() - pauli(d.normalized()));
}

namespace {

// B_r = (1/L) sum_m e^{-i k_m r} Pi(k_m) for k_m = 2 pi m / L, r = 0..L-1.
std::vector<Eigen::Matrix2cd> correlation_blocks(const QuenchProtocol& q, int L, double t) {
  std::vector<std::vector<cplx>> series(4, std::vector<cplx>(L));
  for (int m = 0; m < L; ++m) {
    const double k = 2.0 * kPi * m / L;
    const Eigen::Matrix2cd pi = band_projector(parent_bloch(q, k, t));
    for (int e = 0; e < 4; ++e) series[e][m] = pi(e / 2, e % 2);
  }
  Eigen::FFT<double> fft;
  std::vector<Eigen::Matrix2cd> B(L);
  std::vector<cplx> spectrum;
  for (int e = 0; e < 4; ++e) {
    fft.fwd(spectrum, series[e]);
    for (int r = 0; r < L; ++r) B[r](e / 2, e % 2) = spectrum[r] / static_cast<double>(L);
  }
  return B;
}

MatrixC assemble(const std::vector<Eigen::Matrix2cd>& B, const std::vector<int>& rows,
                 const std::vector<int>& cols) {
  const int L = static_cast<int>(B.size());
  MatrixC M(2 * rows.size(), 2 * cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      M.block<2, 2>(2 * a, 2 * b) = B[positive_mod(rows[a] - cols[b], L)];
    }
  }
  return M;
}

std::vector<int> cell_range(int lo, int hi) {
  std::vector<int> v;
  for (int j = lo; j < hi; ++j) v.push_back(j);
  return v;
}

}  // namespace

CorrelationMatrix momentum_correlation(const QuenchProtocol& q, int L, double t) {
  const auto B = correlation_blocks(q, L, t);
  const auto all = cell_range(0, L);
  return {L, assemble(B, all, all)};
}

EntanglementData momentum_entanglement_spectrum(const QuenchProtocol& q, int L, int cut, double t,
                                                int n_lambda) {
  if (cut < 1 || cut >= L) throw ConfigError("entanglement cut must satisfy 1 <= cut < L");
  const auto B = correlation_blocks(q, L, t);
  int R = 0;
  for (int r = 1; r < L; ++r) {
    if (B[r].cwiseAbs().maxCoeff() > 1e-15) R = std::max(R, std::min(r, L - r));
  }

  if (R == 0 || 2 * R > cut || 2 * R > L - cut) {
    const auto S = cell_range(0, cut);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(assemble(B, S, S), Eigen::EigenvaluesOnly);
    std::vector<double> xi(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return entanglement_from_xi(std::move(xi), n_lambda);
  }

  // Only cells within R of a cut couple S to its complement, so the active
  // modes live in the kernel complement of C_SSbar C_SbarS on those cells.
  std::vector<int> edge = cell_range(0, R);
  for (int j = cut - R; j < cut; ++j) edge.push_back(j);
  std::vector<int> outside = cell_range(cut, cut + R);
  for (int j = L - R; j < L; ++j) outside.push_back(j);

  const MatrixC cross = assemble(B, edge, outside);
  const MatrixC M = cross * cross.adjoint();
  Eigen::SelfAdjointEigenSolver<MatrixC> mes(M);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index n = 0; n < mes.eigenvalues().size(); ++n) {
    if (mes.eigenvalues()[n] > 1e-14) keep.push_back(n);
  }
  MatrixC V(M.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) V.col(c) = mes.eigenvectors().col(keep[c]);

  std::vector<double> xi;
  double active_sum = 0.0;
  if (!keep.empty()) {
    const MatrixC CSS = assemble(B, edge, edge);
    const MatrixC reduced = V.adjoint() * CSS * V;
    Eigen::SelfAdjointEigenSolver<MatrixC> res(reduced, Eigen::EigenvaluesOnly);
    for (Eigen::Index n = 0; n < res.eigenvalues().size(); ++n) {
      xi.push_back(res.eigenvalues()[n]);
      active_sum += res.eigenvalues()[n];
    }
  }
  const double trace = cut * B[0].trace().real();
  const int inert = 2 * cut - static_cast<int>(xi.size());
  const int filled = std::clamp(static_cast<int>(std::lround(trace - active_sum)), 0, inert);
  xi.insert(xi.end(), static_cast<std::size_t>(filled), 1.0);
  xi.insert(xi.end(), static_cast<std::size_t>(inert - filled), 0.0);
  return entanglement_from_xi(std::move(xi), n_lambda);
}

LatticeHamiltonian flattened_parent(const CorrelationMatrix& C) {
  const auto n = C.P.rows();
  return {C.L, Boundary::periodic, MatrixC::Identity(n, n) - 2.0 * C.P};
}

double slater_rate(const MatrixC& occupied, const MatrixC& propagator, int L) {
  const MatrixC overlap = occupied.adjoint() * propagator * occupied;
  const double amp = std::abs(overlap.determinant());
  return -2.0 * std::log(std::max(amp, 1e-300)) / L;
}

double finite_size_rate(const QuenchProtocol& q, int L, double t) {
  double sum = 0.0;
  for (int m = 0; m < L; ++m) {
    const double k = 2.0 * kPi * m / L;
    const BlochVector3 n = q.pre(k).normalized();
    const BlochVector3 nP = parent_bloch(q, k, t).normalized();
    sum += std::log(std::max(0.5 * (1.0 + n.dot(nP)), 1e-300));
  }
  return -sum / L;
}

std::vector<double> time_grid(double t_max, int n) {
  if (n < 1) throw ConfigError("time grid needs at least one point");
  if (n == 1) return {0.0};
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = t_max * i / (n - 1);
  return t;
}

std::vector<EscEvent> detect_esc(const std::function<std::pair<double, double>(double)>& spread,
                                 const std::vector<double>& times, double tol) {
  const std::size_t n = times.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = spread(times[i]).first;

  std::vector<EscEvent> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? s[i - 1] : std::numeric_limits<double>::infinity();
    const double right = i + 1 < n ? s[i + 1] : std::numeric_limits<double>::infinity();
    if (!(s[i] < left && s[i] <= right)) continue;
    const double lo = i > 0 ? times[i - 1] : times[i];
    const double hi = i + 1 < n ? times[i + 1] : times[i];
    double t = times[i];
    if (hi > lo) {
      const double tr = golden_section([&](double x) { return spread(x).first; }, lo, hi, 1e-12);
      if (spread(tr).first <= s[i]) t = tr;
    }
    const auto [value, order] = spread(t);
    if (value < tol) out.push_back({t, value, order});
  }
  return out;
}

BlochFunction parent_bloch_function(const QuenchProtocol& q, double t) {
  constexpr int N = 32;
  std::vector<BlochVector3> d(N);
  for (int n = 0; n < N; ++n) d[n] = parent_bloch(q, 2.0 * kPi * n / N, t);

  std::vector<Harmonic> hs(N / 2 + 1);
  for (int h = 0; h <= N / 2; ++h) {
    const double w = (h == 0 || h == N / 2) ? 1.0 / N : 2.0 / N;
    for (int n = 0; n < N; ++n) {
      const double k = 2.0 * kPi * n / N;
      hs[h].cos_part += (w * std::cos(h * k)) * d[n];
      if (h != 0 && h != N / 2) hs[h].sin_part += (w * std::sin(h * k)) * d[n];
    }
  }
  double residual = 0.0;
  for (int h = kMaxHoppingRange + 1; h <= N / 2; ++h) {
    for (const auto& v : {hs[h].cos_part, hs[h].sin_part}) {
      residual = std::max({residual, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
    }
  }
  if (residual > 1e-10) {
    throw NumericalError("parent Hamiltonian is not next-nearest-neighbour: harmonic residual " +
                         std::to_string(residual));
  }
  hs.resize(kMaxHoppingRange + 1);
  for (auto& h : hs) {
    for (double* c : {&h.cos_part.x, &h.cos_part.y, &h.cos_part.z, &h.sin_part.x, &h.sin_part.y, &h.sin_part.z}) {
      if (std::abs(*c) < 1e-15) *c = 0.0;
    }
  }
  return BlochFunction::from_harmonics(std::move(hs), true);
}

int ParentSpectrumSeries::zero_mode_count(std::size_t i, double tol) const {
  const auto& E = energies.at(i);
  return static_cast<int>(std::count_if(E.begin(), E.end(), [&](double e) { return std::abs(e) < tol; }));
}

ParentSpectrumSeries parent_obc_spectrum(const QuenchProtocol& q, int L, const std::vector<double>& times) {
  ParentSpectrumSeries series{times, std::vector<std::vector<double>>(times.size())};
  std::vector<BlochFunction> fns;
  for (double t : times) fns.push_back(parent_bloch_function(q, t));
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto H = build_lattice(fns[i], L, Boundary::open);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(H.matrix, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    series.energies[i].assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  }
  return series;
}

std::vector<ZeroModeProfile> zero_mode_profiles(const LatticeHamiltonian& H, double tol) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(H.matrix);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  const double scale = H.matrix.cwiseAbs().maxCoeff();
  tol = std::max(tol, 100.0 * std::numeric_limits<double>::epsilon() * scale);

  std::vector<Eigen::Index> zero;
  for (Eigen::Index n = 0; n < es.eigenvalues().size(); ++n) {
    if (std::abs(es.eigenvalues()[n]) < tol) zero.push_back(n);
  }
  if (zero.empty()) return {};

  MatrixC Z(H.matrix.rows(), static_cast<Eigen::Index>(zero.size()));
  Eigen::VectorXd energy(zero.size());
  for (std::size_t c = 0; c < zero.size(); ++c) {
    Z.col(c) = es.eigenvectors().col(zero[c]);
    energy[c] = es.eigenvalues()[zero[c]];
  }
  Eigen::VectorXd position(H.matrix.rows());
  for (Eigen::Index i = 0; i < position.size(); ++i) position[i] = static_cast<double>(i / 2);
  const MatrixC X = Z.adjoint() * position.asDiagonal() * Z;
  Eigen::SelfAdjointEigenSolver<MatrixC> xs(X);
  const MatrixC modes = Z * xs.eigenvectors();
  const double centre = 0.5 * (H.L - 1);

  std::vector<ZeroModeProfile> out;
  for (Eigen::Index c = 0; c < modes.cols(); ++c) {
    ZeroModeProfile p;
    const VectorC v = modes.col(c);
    p.energy = (v.adjoint() * H.matrix * v)(0, 0).real();
    p.density.resize(H.L);
    for (int j = 0; j < H.L; ++j) p.density[j] = std::norm(v[2 * j]) + std::norm(v[2 * j + 1]);
    p.left_edge = xs.eigenvalues()[c] < centre;

    // log-linear fit of the tail from the peak towards the middle
    std::vector<double> xs_fit, ys_fit;
    const int half = H.L / 2;
    const int start = p.left_edge
                          ? static_cast<int>(std::max_element(p.density.begin(), p.density.begin() + half) -
                                             p.density.begin())
                          : static_cast<int>(std::max_element(p.density.begin() + (H.L - half), p.density.end()) -
                                             p.density.begin());
    for (int s = 0; s < half; ++s) {
      const int j = p.left_edge ? start + s : start - s;
      if (j < 0 || j >= H.L) break;
      if (p.density[j] < 1e-13) break;
      xs_fit.push_back(s);
      ys_fit.push_back(std::log(p.density[j]));
    }
    // nearly compact modes leave only two cells above the floor
    if (xs_fit.size() >= 2) {
      const double n = static_cast<double>(xs_fit.size());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < xs_fit.size(); ++i) {
        sx += xs_fit[i];
        sy += ys_fit[i];
        sxx += xs_fit[i] * xs_fit[i];
        sxy += xs_fit[i] * ys_fit[i];
      }
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      if (slope < 0.0) p.xi_loc = -1.0 / slope;
    }
    out.push_back(std::move(p));
  }
  return out;
}

int z2_from_values(double dx_at_0, double dx_at_pi) {
  if (std::abs(dx_at_0) < 1e-14 || std::abs(dx_at_pi) < 1e-14) {
    throw NumericalError("real-momentum invariant undefined: d_P^x vanishes at k = 0 or pi");
  }
  return (dx_at_0 > 0.0) == (dx_at_pi > 0.0) ? 0 : 1;
}

int z2_invariant(const QuenchProtocol& q, double t) {
  return z2_from_values(parent_bloch(q, 0.0, t).x, parent_bloch(q, kPi, t).x);
}

}  // namespace quenchsig
