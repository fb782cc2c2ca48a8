#include "quenchsig/interacting.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>

#include "quenchsig/parallel.hpp"

namespace quenchsig {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double parity_sign(std::uint64_t bits) { return (std::popcount(bits) & 1) ? -1.0 : 1.0; }

std::uint64_t low_mask(int n) { return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

}  // namespace

FockBasis::FockBasis(int orbitals, int particles) : orbitals_(orbitals), particles_(particles) {
  if (orbitals < 1 || orbitals > 62) throw ConfigError("Fock basis supports 1..62 orbitals");
  if (particles < 0 || particles > orbitals) throw ConfigError("particle number out of range");
  if (binomial(orbitals, particles) > static_cast<double>(kMaxStates)) {
    throw ConfigError("Fock basis would exceed " + std::to_string(kMaxStates) + " states");
  }
  if (particles == 0) {
    states_.push_back(0);
    return;
  }
  // Gosper's hack walks fixed-popcount integers in increasing order.
  std::uint64_t s = low_mask(particles);
  const std::uint64_t end = std::uint64_t{1} << orbitals;
  while (s < end) {
    states_.push_back(s);
    const std::uint64_t c = s & (~s + 1);
    const std::uint64_t r = s + c;
    s = (((r ^ s) >> 2) / c) | r;
  }
}

std::optional<std::size_t> FockBasis::index(std::uint64_t bits) const {
  const auto it = std::lower_bound(states_.begin(), states_.end(), bits);
  if (it == states_.end() || *it != bits) return std::nullopt;
  return static_cast<std::size_t>(it - states_.begin());
}

std::string FockBasis::sign_convention() {
  return "orbitals A1,B1,A2,B2,... = bits 0,1,2,3,...; |n> = c^dag_{o1} c^dag_{o2} ... |0> with "
         "o1 < o2 < ... (creation operators applied in descending orbital index)";
}

std::optional<std::pair<std::uint64_t, double>> hop(std::uint64_t bits, int i, int j) {
  const std::uint64_t bj = std::uint64_t{1} << j;
  const std::uint64_t bi = std::uint64_t{1} << i;
  if (!(bits & bj)) return std::nullopt;
  double sign = parity_sign(bits & (bj - 1));
  const std::uint64_t mid = bits ^ bj;
  if (mid & bi) return std::nullopt;
  sign *= parity_sign(mid & (bi - 1));
  return std::make_pair(mid | bi, sign);
}

VectorC ManyBodyOperator::apply(const VectorC& v) const {
  VectorC out(matrix.rows());
  const std::size_t rows = static_cast<std::size_t>(matrix.rows());
  constexpr std::size_t chunk = 4096;
  const std::size_t n_chunks = (rows + chunk - 1) / chunk;
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t end = std::min(rows, (c + 1) * chunk);
    for (std::size_t r = c * chunk; r < end; ++r) {
      cplx acc = 0.0;
      for (SparseC::InnerIterator it(matrix, static_cast<Eigen::Index>(r)); it; ++it) {
        acc += it.value() * v[it.col()];
      }
      out[static_cast<Eigen::Index>(r)] = acc;
    }
  });
  return out;
}

ManyBodyOperator build_hubbard(const LatticeHamiltonian& h, double U, int particles) {
  const int L = h.L;
  if (L > 12) throw ConfigError("exact diagonalization is limited to L <= 12 unit cells");
  if (particles < 0) particles = L;
  auto basis = std::make_shared<const FockBasis>(2 * L, particles);

  struct Entry {
    int i, j;
    cplx value;
  };
  std::vector<Entry> hops;
  std::vector<double> onsite(2 * L, 0.0);
  for (int i = 0; i < 2 * L; ++i) {
    for (int j = 0; j < 2 * L; ++j) {
      const cplx v = h.matrix(i, j);
      if (i == j) {
        onsite[i] = v.real();
      } else if (std::abs(v) > 0.0) {
        hops.push_back({i, j, v});
      }
    }
  }

  const std::size_t dim = basis->dim();
  constexpr std::size_t chunk = 2048;
  const std::size_t n_chunks = (dim + chunk - 1) / chunk;
  std::vector<std::vector<Eigen::Triplet<cplx>>> parts(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    auto& out = parts[c];
    const std::size_t end = std::min(dim, (c + 1) * chunk);
    for (std::size_t b = c * chunk; b < end; ++b) {
      const std::uint64_t bits = basis->state(b);
      double diag = 0.0;
      for (int o = 0; o < 2 * L; ++o) {
        if (bits >> o & 1) diag += onsite[o];
      }
      for (int j = 0; j < L; ++j) {
        if ((bits >> (2 * j) & 1) && (bits >> (2 * j + 1) & 1)) diag += U;
      }
      if (diag != 0.0) out.emplace_back(b, b, diag);
      for (const auto& e : hops) {
        const auto r = hop(bits, e.i, e.j);
        if (!r) continue;
        const auto a = basis->index(r->first);
        out.emplace_back(*a, b, e.value * r->second);
      }
    }
  });

  std::vector<Eigen::Triplet<cplx>> all;
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  ManyBodyOperator op{basis, SparseC(dim, dim), L};
  op.matrix.setFromTriplets(all.begin(), all.end());
  return op;
}

ManyBodyOperator build_hubbard(const BlochFunction& f, double U, int L, Boundary bc, int particles) {
  if (L > 12) throw ConfigError("exact diagonalization is limited to L <= 12 unit cells");
  return build_hubbard(build_lattice(f, L, bc), U, particles);
}

namespace {

MatrixC dense_matrix(const ManyBodyOperator& H) { return MatrixC(H.matrix); }

void orthogonalize(VectorC& w, const std::vector<VectorC>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& u : basis) w -= u.dot(w) * u;
  }
}

// Lowest eigenpair of H in the orthogonal complement of `deflate`.
std::pair<double, VectorC> lanczos_lowest(const ManyBodyOperator& H, const std::vector<VectorC>& deflate,
                                          const EigenOptions& opts, std::mt19937_64& rng) {
  const Eigen::Index dim = H.matrix.rows();
  std::normal_distribution<double> normal;
  VectorC v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = cplx(normal(rng), normal(rng));
  orthogonalize(v, deflate);
  v.normalize();

  double theta = 0.0;
  double residual = 0.0;
  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    std::vector<VectorC> V{v};
    std::vector<double> alpha, beta;
    Eigen::VectorXd y;
    bool converged = false;
    for (int m = 0; m < opts.max_krylov; ++m) {
      VectorC w = H.apply(V[m]);
      const double a = V[m].dot(w).real();
      alpha.push_back(a);
      w -= a * V[m];
      if (m > 0) w -= beta[m - 1] * V[m - 1];
      orthogonalize(w, V);
      orthogonalize(w, deflate);
      const double b = w.norm();

      const bool check = (m + 1) % 5 == 0 || b < 1e-12 || m + 1 == opts.max_krylov ||
                         static_cast<Eigen::Index>(V.size()) + static_cast<Eigen::Index>(deflate.size()) >= dim;
      if (check) {
        const int n = m + 1;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
          T(i, i) = alpha[i];
          if (i + 1 < n) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        theta = es.eigenvalues()[0];
        y = es.eigenvectors().col(0);
        residual = b * std::abs(y[n - 1]);
        if (residual < opts.residual_tol || b < 1e-12 ||
            static_cast<Eigen::Index>(V.size()) + static_cast<Eigen::Index>(deflate.size()) >= dim) {
          converged = true;
          break;
        }
        if (m + 1 == opts.max_krylov) break;
      }
      beta.push_back(b);
      V.push_back(w / b);
    }
    VectorC x = VectorC::Zero(dim);
    for (Eigen::Index i = 0; i < y.size(); ++i) x += y[i] * V[i];
    orthogonalize(x, deflate);
    x.normalize();
    if (converged) {
      const double true_residual = (H.apply(x) - theta * x).norm();
      if (true_residual < 10.0 * opts.residual_tol) return {theta, x};
    }
    v = x;
  }
  throw NumericalError("Lanczos did not converge; last residual " + std::to_string(residual));
}

}  // namespace

GroundMultiplet ground_state(const ManyBodyOperator& H, int degeneracy_hint, const EigenOptions& opts) {
  degeneracy_hint = std::max(1, degeneracy_hint);
  const std::size_t dim = H.basis->dim();
  GroundMultiplet g;

  if (dim <= opts.dense_limit) {
    Eigen::SelfAdjointEigenSolver<MatrixC> es(dense_matrix(H));
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    const auto& E = es.eigenvalues();
    std::size_t n = 0;
    while (n < dim && (static_cast<int>(n) < degeneracy_hint || E[n] - E[0] < opts.degeneracy_tol)) {
      g.energies.push_back(E[n]);
      g.states.push_back({H.basis, es.eigenvectors().col(n)});
      ++n;
    }
    if (n < dim) g.next_energy = E[n];
    return g;
  }

  std::mt19937_64 rng(20240607);
  std::vector<VectorC> found;
  while (found.size() < dim) {
    auto [e, v] = lanczos_lowest(H, found, opts, rng);
    const bool inside = static_cast<int>(found.size()) < degeneracy_hint || e - g.energies.front() < opts.degeneracy_tol;
    if (!inside) {
      g.next_energy = e;
      break;
    }
    g.energies.push_back(e);
    g.states.push_back({H.basis, v});
    found.push_back(std::move(v));
  }
  return g;
}

StateEvolver::StateEvolver(const ManyBodyOperator& H, const EvolveOptions& opts) : H_(&H), opts_(opts) {
  if (H.basis->dim() <= opts.dense_limit) {
    Eigen::SelfAdjointEigenSolver<MatrixC> es(dense_matrix(H));
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    V_ = es.eigenvectors();
    E_ = es.eigenvalues();
    dense_ = true;
  }
}

FockState StateEvolver::evolve(const FockState& psi, double t) const {
  if (psi.basis->dim() != H_->basis->dim()) throw ConfigError("state and Hamiltonian bases differ");
  if (t == 0.0) return psi;
  if (dense_) {
    VectorC c = V_.adjoint() * psi.amplitudes;
    for (Eigen::Index n = 0; n < c.size(); ++n) c[n] *= std::polar(1.0, -E_[n] * t);
    return {psi.basis, V_ * c};
  }

  VectorC v = psi.amplitudes;
  double remaining = t;
  double dt = t;
  const int m_max = opts_.krylov_dim;
  while (remaining != 0.0) {
    const double nrm = v.norm();
    std::vector<VectorC> V{v / nrm};
    std::vector<double> alpha, beta;
    double tail = 0.0;  // beta_m, zero on happy breakdown
    for (int m = 0; m < m_max; ++m) {
      VectorC w = H_->apply(V[m]);
      const double a = V[m].dot(w).real();
      alpha.push_back(a);
      w -= a * V[m];
      if (m > 0) w -= beta[m - 1] * V[m - 1];
      orthogonalize(w, V);
      const double b = w.norm();
      if (b < 1e-13 * std::max(1.0, std::abs(a))) {
        tail = 0.0;
        break;
      }
      if (m + 1 == m_max) {
        tail = b;
        break;
      }
      beta.push_back(b);
      V.push_back(w / b);
    }
    const int n = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < n) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);

    if (std::abs(dt) > std::abs(remaining)) dt = remaining;
    VectorC c(n);
    while (true) {
      VectorC phase(n);
      for (int i = 0; i < n; ++i) phase[i] = std::polar(1.0, -es.eigenvalues()[i] * dt) * es.eigenvectors()(0, i);
      c = es.eigenvectors().cast<cplx>() * phase;
      const double err = tail * std::abs(c[n - 1]) * nrm;
      if (err <= opts_.step_tol) break;
      dt *= 0.5;
      if (std::abs(dt) < opts_.min_step) throw NumericalError("Krylov step size underflow");
    }
    VectorC next = VectorC::Zero(v.size());
    for (int i = 0; i < n; ++i) next += (nrm * c[i]) * V[i];
    v = std::move(next);
    remaining -= dt;
    if (std::abs(remaining) < 1e-15 * std::abs(t)) remaining = 0.0;
    dt = std::abs(2.0 * dt) < std::abs(remaining) ? 2.0 * dt : remaining;
  }
  return {psi.basis, v};
}

FockState evolve_state(const FockState& psi, const ManyBodyOperator& H, double t, const EvolveOptions& opts) {
  return StateEvolver(H, opts).evolve(psi, t);
}

double expectation(const FockState& psi, const ManyBodyOperator& H) {
  return psi.amplitudes.dot(H.apply(psi.amplitudes)).real() / psi.amplitudes.squaredNorm();
}

cplx overlap(const FockState& a, const FockState& b) {
  if (a.basis->dim() != b.basis->dim()) throw ConfigError("states live in different bases");
  return a.amplitudes.dot(b.amplitudes);
}

LoschmidtValue loschmidt_rate(const FockState& psi0, const FockState& psit, int L) {
  const double amp = std::abs(overlap(psi0, psit));
  LoschmidtValue out;
  out.saturated = amp < 1e-300;
  out.rate = -2.0 * std::log(std::max(amp, 1e-300)) / L;
  return out;
}

std::vector<double> many_body_es(const FockState& psi, int cut, int n_lambda) {
  const FockBasis& basis = *psi.basis;
  const int L = basis.orbitals() / 2;
  if (cut < 1 || cut >= L) throw ConfigError("entanglement cut must satisfy 1 <= cut < L");
  const int left_bits = 2 * cut;
  const std::uint64_t mask = low_mask(left_bits);

  // Left orbitals precede right ones in the operator string, so
  // |n> = |left> (x) |right> without an extra sign.
  struct Sector {
    std::map<std::uint64_t, int> left, right;
    std::vector<std::tuple<int, int, cplx>> entries;
  };
  std::map<int, Sector> sectors;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const cplx a = psi.amplitudes[static_cast<Eigen::Index>(i)];
    if (a == 0.0) continue;
    const std::uint64_t s = basis.state(i);
    const std::uint64_t l = s & mask;
    const std::uint64_t r = s >> left_bits;
    Sector& sec = sectors[std::popcount(l)];
    const int li = sec.left.try_emplace(l, static_cast<int>(sec.left.size())).first->second;
    const int ri = sec.right.try_emplace(r, static_cast<int>(sec.right.size())).first->second;
    sec.entries.emplace_back(li, ri, a);
  }
  std::vector<double> lambdas;
  const double norm2 = psi.amplitudes.squaredNorm();
  for (auto& [n, sec] : sectors) {
    MatrixC M = MatrixC::Zero(static_cast<Eigen::Index>(sec.left.size()), static_cast<Eigen::Index>(sec.right.size()));
    for (const auto& [li, ri, a] : sec.entries) M(li, ri) = a;
    // Eigen 3.4.0's BDCSVD returns wrong singular values for some blocks;
    // the Gram matrix of the shorter side is small and well conditioned enough
    const MatrixC G = M.rows() <= M.cols() ? MatrixC(M * M.adjoint()) : MatrixC(M.adjoint() * M);
    const Eigen::SelfAdjointEigenSolver<MatrixC> es(G, Eigen::EigenvaluesOnly);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      lambdas.push_back(std::max(es.eigenvalues()[k], 0.0) / norm2);
    }
  }
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  if (n_lambda >= 0 && static_cast<int>(lambdas.size()) > n_lambda) lambdas.resize(n_lambda);
  return lambdas;
}

int degenerate_prefix(const std::vector<double>& lambdas, double tol) {
  if (lambdas.empty()) return 0;
  int n = 1;
  while (n < static_cast<int>(lambdas.size()) && (lambdas[0] - lambdas[n]) < tol * lambdas[0]) ++n;
  return n;
}

MatrixC two_point_matrix(const FockState& psi) {
  const FockBasis& basis = *psi.basis;
  const int n = basis.orbitals();
  MatrixC G = MatrixC::Zero(n, n);
  for (std::size_t b = 0; b < basis.dim(); ++b) {
    const cplx ab = psi.amplitudes[static_cast<Eigen::Index>(b)];
    if (ab == 0.0) continue;
    const std::uint64_t bits = basis.state(b);
    for (int j = 0; j < n; ++j) {
      if (!(bits >> j & 1)) continue;
      for (int i = 0; i < n; ++i) {
        const auto r = hop(bits, i, j);
        if (!r) continue;
        const auto a = basis.index(r->first);
        G(i, j) += std::conj(psi.amplitudes[static_cast<Eigen::Index>(*a)]) * ab * r->second;
      }
    }
  }
  return G;
}

FockState fock_from_orbitals(const BasisPtr& basis, const MatrixC& orbitals) {
  if (orbitals.rows() != basis->orbitals() || orbitals.cols() != basis->particles()) {
    throw ConfigError("orbital matrix does not match the Fock basis");
  }
  const int N = basis->particles();
  FockState out{basis, VectorC::Zero(static_cast<Eigen::Index>(basis->dim()))};
  std::vector<int> occ(N);
  MatrixC sub(N, N);
  for (std::size_t i = 0; i < basis->dim(); ++i) {
    std::uint64_t s = basis->state(i);
    for (int p = 0; p < N; ++p) {
      occ[p] = std::countr_zero(s);
      s &= s - 1;
    }
    for (int p = 0; p < N; ++p) sub.row(p) = orbitals.row(occ[p]);
    out.amplitudes[static_cast<Eigen::Index>(i)] = N == 0 ? cplx(1.0) : sub.determinant();
  }
  return out;
}

FockState apply_inversion(const FockState& psi) {
  const FockBasis& basis = *psi.basis;
  const int n = basis.orbitals();
  const int N = basis.particles();
  const double sign = ((N * (N - 1) / 2) % 2) ? -1.0 : 1.0;
  FockState out{psi.basis, VectorC::Zero(psi.amplitudes.size())};
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const std::uint64_t s = basis.state(i);
    std::uint64_t r = 0;
    for (int o = 0; o < n; ++o) {
      if (s >> o & 1) r |= std::uint64_t{1} << (n - 1 - o);
    }
    out.amplitudes[static_cast<Eigen::Index>(*basis.index(r))] = sign * psi.amplitudes[static_cast<Eigen::Index>(i)];
  }
  return out;
}

std::vector<FockState> inversion_eigenstates(const std::vector<FockState>& multiplet) {
  const auto m = static_cast<Eigen::Index>(multiplet.size());
  if (m == 0) return {};
  MatrixC I(m, m);
  std::vector<FockState> inverted;
  for (const auto& s : multiplet) inverted.push_back(apply_inversion(s));
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) I(a, b) = overlap(multiplet[a], inverted[b]);
  }
  I = 0.5 * (I + I.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixC> es(I);
  std::vector<FockState> out;
  for (Eigen::Index c = m - 1; c >= 0; --c) {
    VectorC v = VectorC::Zero(multiplet.front().amplitudes.size());
    for (Eigen::Index a = 0; a < m; ++a) v += es.eigenvectors()(a, c) * multiplet[a].amplitudes;
    v.normalize();
    out.push_back({multiplet.front().basis, std::move(v)});
  }
  return out;
}

IsingParameters map_to_ising(double J, double U, double J_prime) {
  if (J_prime != 0.0) throw ConfigError("the Ising mapping requires J' = 0");
  IsingParameters p{J, U / 4.0, ""};
  const double diff = p.coupling - std::abs(p.field);
  if (std::abs(diff) < 1e-12 * std::max(1.0, std::abs(p.field))) {
    p.phase = "critical";
  } else {
    p.phase = diff < 0.0 ? "topological" : "trivial";
  }
  return p;
}

BlochFunction map_to_kitaev(double J, double U, double J_prime) {
  if (J_prime != 0.0) throw ConfigError("the Kitaev mapping requires J' = 0");
  return BlochFunction::kitaev(J, U);
}

std::vector<double> ising_rate(double field, double coupling_pre, double coupling_post, int L, Boundary bc,
                               const std::vector<double>& times) {
  if (L < 2 || L > 14) throw ConfigError("Ising ED supports 2 <= L <= 14");
  const Eigen::Index dim = Eigen::Index{1} << L;
  auto build = [&](double coupling) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index s = 0; s < dim; ++s) {
      for (int j = 0; j < L; ++j) H(s, s) += field * ((s >> j & 1) ? -1.0 : 1.0);
      const int bonds = bc == Boundary::periodic ? L : L - 1;
      for (int b = 0; b < bonds; ++b) {
        const int j0 = b;
        const int j1 = (b + 1) % L;
        H(s ^ ((Eigen::Index{1} << j0) | (Eigen::Index{1} << j1)), s) -= coupling;
      }
    }
    return H;
  };
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pre(build(coupling_pre));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> post(build(coupling_post));
  const Eigen::VectorXd psi0 = pre.eigenvectors().col(0);
  const Eigen::VectorXd weights = (post.eigenvectors().transpose() * psi0).cwiseAbs2();
  std::vector<double> rate;
  for (double t : times) {
    cplx amp = 0.0;
    for (Eigen::Index n = 0; n < dim; ++n) amp += weights[n] * std::polar(1.0, -post.eigenvalues()[n] * t);
    rate.push_back(-2.0 * std::log(std::max(std::abs(amp), 1e-300)) / L);
  }
  return rate;
}

SlaterState polarized_state(int L, Sublattice s, bool bond_ordered) {
  if (L < 1) throw ConfigError("need at least one unit cell");
  SlaterState st{L, MatrixC::Zero(2 * L, L)};
  const int offset = s == Sublattice::A ? 0 : 1;
  for (int c = 0; c < L; ++c) {
    const int cell = (bond_ordered && s == Sublattice::B) ? (c + L - 1) % L : c;
    st.orbitals(2 * cell + offset, c) = 1.0;
  }
  return st;
}

cplx slater_overlap(const SlaterState& phi, const SlaterState& psi) {
  if (phi.particles() != psi.particles()) throw ConfigError("Slater overlap needs equal particle numbers");
  if (phi.orbitals.rows() != psi.orbitals.rows()) throw ConfigError("Slater states live on different lattices");
  if (phi.particles() == 0) return 1.0;
  return (phi.orbitals.adjoint() * psi.orbitals).determinant();
}

SlaterState evolve_slater(const SlaterState& s, const LatticeHamiltonian& H, double t) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(H.matrix);
  VectorC phase(es.eigenvalues().size());
  for (Eigen::Index n = 0; n < phase.size(); ++n) phase[n] = std::polar(1.0, -es.eigenvalues()[n] * t);
  const MatrixC U = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  return {s.L, U * s.orbitals};
}

cplx cat_overlap(int L, Boundary bc, int sign, double t, double J) {
  const auto H = build_lattice(BlochFunction::interacting_ssh(J, 0.0), L, bc);
  const SlaterState A = polarized_state(L, Sublattice::A);
  const SlaterState B = polarized_state(L, Sublattice::B, true);
  const SlaterState At = evolve_slater(A, H, t);
  const SlaterState Bt = evolve_slater(B, H, t);
  const double s = sign >= 0 ? 1.0 : -1.0;
  return 0.5 * (slater_overlap(A, At) + slater_overlap(B, Bt) + s * (slater_overlap(A, Bt) + slater_overlap(B, At)));
}

BondExpansion bond_basis_evolution(int j, Sublattice s, double t, int L) {
  if (j < 1 || j > L) throw ConfigError("cell index out of range");
  BondExpansion e;
  const double r = 1.0 / std::sqrt(2.0);
  if (s == Sublattice::A) {
    if (j == 1) {
      e.stationary = true;
      return e;
    }
    e.terms = {{j - 1, +1, r * std::polar(1.0, -t)}, {j - 1, -1, r * std::polar(1.0, t)}};
  } else {
    if (j == L) {
      e.stationary = true;
      return e;
    }
    e.terms = {{j, +1, r * std::polar(1.0, -t)}, {j, -1, -r * std::polar(1.0, t)}};
  }
  return e;
}

VectorC bond_expansion_to_sites(const BondExpansion& e, int j, Sublattice s, int L) {
  VectorC v = VectorC::Zero(2 * L);
  if (e.stationary) {
    v[2 * (j - 1) + (s == Sublattice::A ? 0 : 1)] = 1.0;
    return v;
  }
  const double r = 1.0 / std::sqrt(2.0);
  for (const auto& term : e.terms) {
    // w_{b,+-} = (|b+1,A> +- |b,B>)/sqrt(2)
    v[2 * term.bond] += term.amplitude * r;
    v[2 * (term.bond - 1) + 1] += term.amplitude * r * static_cast<double>(term.parity);
  }
  return v;
}

}  // namespace quenchsig
