#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "quenchsig/indicators.hpp"
#include "quenchsig/interacting.hpp"
#include "quenchsig/scenario.hpp"
#include "quenchsig/selftest.hpp"
#include "support.hpp"

using namespace quenchsig;

namespace {

// Jordan-Wigner annihilator on n orbitals: c_o = prod_{p<o} Z_p sigma^-_o,
// acting on full Fock-space bit states.
MatrixC jw_annihilator(int n, int o) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  MatrixC c = MatrixC::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    if (!(s >> o & 1)) continue;
    const int below = __builtin_popcountll(static_cast<unsigned long long>(s) & ((1ull << o) - 1));
    c(s ^ (Eigen::Index{1} << o), s) = below % 2 ? -1.0 : 1.0;
  }
  return c;
}

// Dense Fock-space Hamiltonian restricted to the basis of `H`.
MatrixC jw_hubbard(const LatticeHamiltonian& h, double U, const FockBasis& basis) {
  const int n = h.orbitals();
  std::vector<MatrixC> c;
  for (int o = 0; o < n; ++o) c.push_back(jw_annihilator(n, o));
  const Eigen::Index dim = Eigen::Index{1} << n;
  MatrixC full = MatrixC::Zero(dim, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (h.matrix(i, j) != 0.0) full += h.matrix(i, j) * c[i].adjoint() * c[j];
    }
  for (int cell = 0; cell < h.L; ++cell) {
    full += U * (c[2 * cell].adjoint() * c[2 * cell]) * (c[2 * cell + 1].adjoint() * c[2 * cell + 1]);
  }
  const auto d = static_cast<Eigen::Index>(basis.dim());
  MatrixC sub(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) sub(a, b) = full(basis.state(a), basis.state(b));
  return sub;
}

QuenchProtocol alpha_beta(double a, double b) { return make_protocol("alpha_beta", {{"alpha", a}, {"beta", b}}); }

FockState polarized_fock(int L, Sublattice s) {
  auto basis = std::make_shared<const FockBasis>(2 * L, L);
  return fock_from_orbitals(basis, polarized_state(L, s).orbitals);
}

}  // namespace

TEST_SUITE("interacting_ed") {
  TEST_CASE("Fock basis") {
    const FockBasis b(8, 4);
    CHECK(b.dim() == 70);
    for (std::size_t i = 1; i < b.dim(); ++i) CHECK(b.state(i - 1) < b.state(i));
    for (std::size_t i = 0; i < b.dim(); ++i) {
      CHECK(__builtin_popcountll(b.state(i)) == 4);
      CHECK(*b.index(b.state(i)) == i);
    }
    CHECK_FALSE(b.index(0b111));
    CHECK_THROWS_AS(FockBasis(60, 30), ConfigError);
    CHECK(FockBasis::sign_convention().find("descending") != std::string::npos);
  }

  TEST_CASE("Hubbard matrix equals the Jordan-Wigner construction") {
    auto rng = test_rng(30);
    for (int draw = 0; draw < 3; ++draw) {
      const auto f = random_protocol(rng).post;
      for (Boundary bc : {Boundary::periodic, Boundary::open}) {
        for (int L : {2, 3, 4}) {
          const auto lat = build_lattice(f, L, bc);
          const double U = 0.7 + draw;
          const auto H = build_hubbard(lat, U);
          const MatrixC dense = MatrixC(H.matrix);
          CHECK((dense - jw_hubbard(lat, U, *H.basis)).cwiseAbs().maxCoeff() < 1e-13);
          CHECK((dense - dense.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        }
      }
    }
    CHECK_THROWS_AS(build_hubbard(BlochFunction::rice_mele(0.5), 1.0, 13, Boundary::open), ConfigError);
  }

  TEST_CASE("sparse apply matches the matrix") {
    const auto H = build_hubbard(BlochFunction::rice_mele(0.5), 1.3, 5, Boundary::periodic);
    auto rng = test_rng(31);
    std::normal_distribution<double> g;
    VectorC v(H.basis->dim());
    for (auto& x : v) x = cplx(g(rng), g(rng));
    CHECK((H.apply(v) - H.matrix * v).norm() < 1e-12);
  }

  TEST_CASE("U = 0 ground energy is the Slater energy") {
    auto rng = test_rng(32);
    for (int draw = 0; draw < 3; ++draw) {
      const auto f = random_protocol(rng).pre;
      for (Boundary bc : {Boundary::periodic, Boundary::open}) {
        const int L = 5;
        const auto lat = build_lattice(f, L, bc);
        const Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<MatrixC>(lat.matrix).eigenvalues();
        const auto g = ground_state(build_hubbard(f, 0.0, L, bc));
        CHECK(g.energies.front() == doctest::Approx(e.head(L).sum()).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("Lanczos agrees with dense diagonalization") {
    const auto H = build_hubbard(BlochFunction::rice_mele(0.5), 2.0, 5, Boundary::open);
    EigenOptions lanczos;
    lanczos.dense_limit = 0;
    const auto a = ground_state(H);
    const auto b = ground_state(H, 1, lanczos);
    CHECK(a.energies.front() == doctest::Approx(b.energies.front()).epsilon(1e-12));
    CHECK(std::abs(std::abs(overlap(a.states.front(), b.states.front())) - 1.0) < 1e-9);
    const VectorC r = H.apply(b.states.front().amplitudes) - b.energies.front() * b.states.front().amplitudes;
    CHECK(r.norm() < 1e-9);
  }

  TEST_CASE("large-U doublet and inversion") {
    const int L = 4;
    const auto H = build_hubbard(BlochFunction::interacting_ssh(1.0, 0.0), 100.0, L, Boundary::open);
    const auto g = ground_state(H, 2);
    REQUIRE(g.states.size() >= 2);
    CHECK(std::abs(g.energies[1] - g.energies[0]) < 1e-3);

    // the doublet lives (to O(J/U)) in span{Psi_A, Psi_B}
    const auto A = polarized_fock(L, Sublattice::A);
    const auto B = polarized_fock(L, Sublattice::B);
    double weight = 0.0;
    for (int i = 0; i < 2; ++i) weight += std::norm(overlap(A, g.states[i])) + std::norm(overlap(B, g.states[i]));
    CHECK(weight > 1.9);

    // inversion swaps the polarized states
    CHECK(std::abs(std::abs(overlap(apply_inversion(A), B)) - 1.0) < 1e-12);
    const auto cats = inversion_eigenstates({g.states[0], g.states[1]});
    REQUIRE(cats.size() == 2);
    CHECK(std::abs(overlap(cats[0], apply_inversion(cats[0])) - 1.0) < 1e-8);
    CHECK(std::abs(overlap(cats[1], apply_inversion(cats[1])) + 1.0) < 1e-8);

    // inversion is a symmetry of the chain
    const auto psi = g.states[0];
    CHECK(expectation(apply_inversion(psi), H) == doctest::Approx(expectation(psi, H)).epsilon(1e-10));
  }

  TEST_CASE("evolution: identity, eigenstate phase, conservation") {
    const auto H = build_hubbard(BlochFunction::rice_mele(0.5), 0.5, 4, Boundary::open);
    const auto pre = build_hubbard(BlochFunction::constant(0.5, 0.5), 0.5, 4, Boundary::open);
    const auto psi0 = ground_state(pre).states.front();
    CHECK((evolve_state(psi0, H, 0.0).amplitudes - psi0.amplitudes).norm() < 1e-14);

    const auto eig = ground_state(H).states.front();
    const auto e1 = evolve_state(eig, H, 2.3);
    CHECK(std::abs(std::abs(overlap(eig, e1)) - 1.0) < 1e-10);

    EvolveOptions krylov;
    krylov.dense_limit = 0;
    const double E0 = expectation(psi0, H);
    for (double t : {0.5, 3.0, 10.0}) {
      const auto d = evolve_state(psi0, H, t);
      const auto k = evolve_state(psi0, H, t, krylov);
      CHECK(std::abs(k.norm() - 1.0) < 1e-10);
      CHECK(std::abs(expectation(k, H) - E0) < 1e-8);
      CHECK((d.amplitudes - k.amplitudes).norm() < 1e-8);
    }
  }

  TEST_CASE("interaction-free ED matches free fermions over a period") {
    const auto checks = run_selftest(kTestSeed, 2);
    for (const auto& c : checks) {
      INFO(c.name << " max error " << c.max_error);
      CHECK(c.passed());
    }
  }

  TEST_CASE("Loschmidt rate and ES basics") {
    const auto A = polarized_fock(4, Sublattice::A);
    CHECK(loschmidt_rate(A, A, 4).rate == doctest::Approx(0.0));
    const auto B = polarized_fock(4, Sublattice::B);
    const auto lr = loschmidt_rate(A, B, 4);
    CHECK(lr.saturated);
    CHECK(many_body_es(A, 2) == std::vector<double>{1.0});

    const auto H = build_hubbard(BlochFunction::rice_mele(0.5), 1.0, 4, Boundary::open);
    const auto psi = evolve_state(ground_state(build_hubbard(BlochFunction::constant(0.5, 0.5), 1.0, 4, Boundary::open)).states.front(), H, 1.3);
    const auto lam = many_body_es(psi, 2);
    double sum = 0.0;
    for (double l : lam) sum += l;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::is_sorted(lam.rbegin(), lam.rend()));

    CHECK(degenerate_prefix({0.3, 0.3, 0.2}, 1e-6) == 2);
    CHECK(degenerate_prefix({0.5, 0.2}, 1e-6) == 1);
  }

  TEST_CASE("strong interaction freezes the polarized state") {
    const int L = 4;
    LatticeHamiltonian none{L, Boundary::open, MatrixC::Zero(2 * L, 2 * L)};
    const auto H = build_hubbard(none, 1e4);
    const auto A = polarized_fock(L, Sublattice::A);
    for (double t : time_grid(3.0, 13)) CHECK(loschmidt_rate(A, evolve_state(A, H, t), L).rate < 1e-6);
  }

  TEST_CASE("Ising and Kitaev mappings") {
    auto p = map_to_ising(1.0, 4.0);
    CHECK(p.field == 1.0);
    CHECK(p.coupling == 1.0);
    CHECK(p.phase == "critical");
    p = map_to_ising(1.0, 0.0);
    CHECK(p.coupling == 0.0);
    CHECK(p.phase == "topological");
    p = map_to_ising(1.0, 8.0);
    CHECK(p.coupling == 2.0);
    CHECK(p.phase == "trivial");
    CHECK_THROWS_AS(map_to_ising(1.0, 2.0, 0.1), ConfigError);
    CHECK_THROWS_AS(map_to_kitaev(1.0, 2.0, 0.1), ConfigError);

    CHECK(map_to_kitaev(1.0, 4.0)(0.0).norm() < 1e-15);
    for (double k : {-1.0, 2.0}) CHECK((map_to_kitaev(1.0, 0.0)(k) - BlochVector3{0, 0, 2}).norm() < 1e-15);
    // Kitaev gap closes where coupling = field
    CHECK(map_to_kitaev(1.0, 3.9)(0.0).norm() > 0.0);

    QuenchProtocol q{map_to_kitaev(1.0, 10.0), map_to_kitaev(1.0, 0.0), "kitaev"};
    const auto r = dcn_analytic(q);
    double mx = 0.0;
    for (const auto& s : r.segments) mx = std::max(mx, std::abs(s.analytic));
    CHECK(mx == doctest::Approx(1.0));
    const auto ev = dqpt_times(q, 2.0);
    REQUIRE(!ev.empty());
    CHECK(ev.front().t_star == doctest::Approx(kPi / 4).epsilon(1e-10));
  }

  TEST_CASE("Ising chain cusp near pi/4 after a pure-field quench") {
    const auto times = time_grid(kPi / 2, 201);
    const auto f = ising_rate(1.0, 2.5, 0.0, 10, Boundary::periodic, times);
    const std::size_t peak = std::max_element(f.begin(), f.end()) - f.begin();
    CHECK(std::abs(times[peak] - kPi / 4) < 0.05);
    CHECK_THROWS_AS(ising_rate(1.0, 2.5, 0.0, 15, Boundary::periodic, times), ConfigError);
  }

  TEST_CASE("Slater layer identities") {
    for (int L : {4, 6, 8, 16, 32, 64}) {
      const auto Hobc = build_lattice(BlochFunction::interacting_ssh(1.0), L, Boundary::open);
      const auto Hpbc = build_lattice(BlochFunction::interacting_ssh(1.0), L, Boundary::periodic);
      const auto A = polarized_state(L, Sublattice::A);
      const auto B = polarized_state(L, Sublattice::B);
      for (const auto* H : {&Hobc, &Hpbc}) {
        const auto At = evolve_slater(A, *H, kPi / 2);
        CHECK(std::abs(slater_overlap(A, At)) < 1e-12);
        CHECK(std::abs(slater_overlap(B, evolve_slater(B, *H, kPi / 2))) < 1e-12);
      }
      CHECK(std::abs(slater_overlap(B, evolve_slater(A, Hobc, kPi / 2))) < 1e-12);
      const double ref = (L / 2) % 2 ? -1.0 : 1.0;
      CHECK(std::abs(cat_overlap(L, Boundary::periodic, +1, kPi / 2) - ref) < 1e-12);
      CHECK(std::abs(cat_overlap(L, Boundary::periodic, -1, kPi / 2) + ref) < 1e-12);
      CHECK(std::abs(cat_overlap(L, Boundary::open, +1, kPi / 2)) < 1e-12);
    }
    CHECK_THROWS_AS(slater_overlap(polarized_state(4, Sublattice::A), polarized_state(3, Sublattice::A)), ConfigError);
  }

  TEST_CASE("Slater layer agrees with many-body evolution") {
    const int L = 4;
    const auto lat = build_lattice(BlochFunction::interacting_ssh(1.0), L, Boundary::open);
    const auto H = build_hubbard(lat, 0.0);
    const auto A = polarized_state(L, Sublattice::A);
    const auto FA = polarized_fock(L, Sublattice::A);
    for (double t : {0.3, 1.1}) {
      const cplx slater = slater_overlap(A, evolve_slater(A, lat, t));
      CHECK(std::abs(slater - overlap(FA, evolve_state(FA, H, t))) < 1e-12);
    }
  }

  TEST_CASE("bond-operator evolution") {
    const int L = 6;
    const auto H = build_lattice(BlochFunction::interacting_ssh(1.0), L, Boundary::open);
    CHECK(bond_basis_evolution(1, Sublattice::A, 0.7, L).stationary);
    CHECK(bond_basis_evolution(L, Sublattice::B, 0.7, L).stationary);
    for (int j = 1; j <= L; ++j) {
      for (Sublattice s : {Sublattice::A, Sublattice::B}) {
        VectorC site = VectorC::Zero(2 * L);
        site[2 * (j - 1) + (s == Sublattice::A ? 0 : 1)] = 1.0;
        for (double t : {0.0, 0.4, kPi / 2}) {
          const auto e = bond_basis_evolution(j, s, t, L);
          const VectorC exact = evolve_slater(SlaterState{L, site}, H, t).orbitals.col(0);
          CHECK((bond_expansion_to_sites(e, j, s, L) - exact).norm() < 1e-12);
        }
      }
    }
    // e^{-iH pi/2}|j,A> = -i|j-1,B>
    const VectorC v = bond_expansion_to_sites(bond_basis_evolution(3, Sublattice::A, kPi / 2, L), 3, Sublattice::A, L);
    CHECK(std::abs(v[2 * 1 + 1] - cplx(0, -1)) < 1e-12);
  }
}
