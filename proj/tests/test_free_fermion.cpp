#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "quenchsig/free_fermion.hpp"
#include "quenchsig/indicators.hpp"
#include "quenchsig/scenario.hpp"
#include "quenchsig/selftest.hpp"
#include "support.hpp"

using namespace quenchsig;

namespace {

QuenchProtocol ssh() { return make_protocol("ssh_quench", {{"J_x", 1.0}}); }
QuenchProtocol alpha_beta(double a, double b) { return make_protocol("alpha_beta", {{"alpha", a}, {"beta", b}}); }

Eigen::VectorXd eigenvalues(const MatrixC& m) { return Eigen::SelfAdjointEigenSolver<MatrixC>(m).eigenvalues(); }

// Plane wave e^{-ikj} u on every cell.
VectorC plane_wave(int L, double k, const Spinor& u) {
  VectorC v(2 * L);
  for (int j = 0; j < L; ++j) {
    const cplx ph = std::polar(1.0 / std::sqrt(double(L)), -k * j);
    v(2 * j) = ph * u[0];
    v(2 * j + 1) = ph * u[1];
  }
  return v;
}

Spinor upper_band_state(const BlochVector3& d) { return lower_band_state(-d); }

// Refined ESC time near `guess` for a protocol, by the momentum route.
double refine_esc(const QuenchProtocol& q, int L, double lo, double hi) {
  auto spread = [&](double t) {
    const auto es = momentum_entanglement_spectrum(q, L, L / 2, t, 4);
    return std::pair{es.relative_spread, es.degeneracy_order()};
  };
  const auto ev = detect_esc(spread, time_grid(hi, 401), 1e-6);
  for (const auto& e : ev) {
    if (e.t >= lo) return e.t;
  }
  return -1.0;
}

}  // namespace

TEST_SUITE("free_fermion") {
  TEST_CASE("lattice Hamiltonian reproduces the Bloch matrix") {
    auto rng = test_rng(20);
    for (int draw = 0; draw < 5; ++draw) {
      const auto q = random_protocol(rng, 2);
      const int L = 8;
      const auto H = build_lattice(q.post, L, Boundary::periodic);
      CHECK((H.matrix - H.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
      for (int m = 0; m < L; ++m) {
        const double k = 2 * kPi * m / L;
        const auto d = q.post(k);
        for (const auto& u : {lower_band_state(d), upper_band_state(d)}) {
          const VectorC v = plane_wave(L, k, u);
          const double e = (u == lower_band_state(d)) ? -d.norm() : d.norm();
          CHECK((H.matrix * v - e * v).norm() < 1e-12);
        }
      }
    }
  }

  TEST_CASE("lattice examples") {
    const auto H = build_lattice(BlochFunction::ssh_circle(1.0), 8, Boundary::periodic);
    const auto ev = eigenvalues(H.matrix);
    for (int i = 0; i < 16; ++i) CHECK(std::abs(ev(i) - (i < 8 ? -1.0 : 1.0)) < 1e-12);

    const auto C = build_lattice(BlochFunction::constant(0.7, 0.2), 6, Boundary::open);
    for (int j = 0; j < 6; ++j) {
      for (int l = 0; l < 6; ++l) {
        const auto blk = C.matrix.block<2, 2>(2 * j, 2 * l);
        if (j != l) CHECK(blk.cwiseAbs().maxCoeff() == 0.0);
        else CHECK((blk - C.matrix.block<2, 2>(0, 0)).cwiseAbs().maxCoeff() == 0.0);
      }
    }

    // open chains drop the wrap-around bonds
    const auto O = build_lattice(BlochFunction::ssh_circle(1.0), 8, Boundary::open);
    CHECK(std::abs(O.matrix(14, 1)) == 0.0);
    const auto P = build_lattice(BlochFunction::ssh_circle(1.0), 8, Boundary::periodic);
    CHECK(std::abs(P.matrix(14, 1)) > 0.5);

    std::vector<Harmonic> h3(4);
    h3[3].cos_part = {1, 0, 0};
    h3[0].cos_part = {0, 0, 3};
    CHECK_THROWS_AS(build_lattice(BlochFunction::from_harmonics(h3), 8, Boundary::periodic), ConfigError);
  }

  TEST_CASE("ground correlation") {
    const auto H = build_lattice(BlochFunction::constant(1.0, 0.0), 6, Boundary::open);
    const auto C = ground_correlation(H);
    CHECK(C.particle_number() == doctest::Approx(6.0));
    CHECK((C.P * C.P - C.P).cwiseAbs().maxCoeff() < 1e-12);
    const auto ev = eigenvalues(C.P);
    for (int i = 0; i < 12; ++i) CHECK(std::abs(ev(i) - (i < 6 ? 0.0 : 1.0)) < 1e-12);
    // bond-centred orbitals: (|A> - |B>)/sqrt2 in each cell
    CHECK(std::abs(C.P(0, 1) + 0.5) < 1e-12);
    CHECK(std::abs(C.two_point(0, 0) - 0.5) < 1e-12);

    const auto S = ground_correlation(build_lattice(BlochFunction::ssh_circle(1.0), 8, Boundary::periodic));
    CHECK((S.P * S.P - S.P).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(S.particle_number() == doctest::Approx(8.0));

    const auto Z = build_lattice(BlochFunction::constant_vector({0, 0, 0}), 4, Boundary::open);
    CHECK_THROWS_AS(ground_correlation(Z), NumericalError);
    CHECK_NOTHROW(ground_correlation(Z, true));
  }

  TEST_CASE("correlation evolution") {
    const auto q = ssh();
    const int L = 16;
    const auto C0 = ground_correlation(build_lattice(q.pre, L, Boundary::periodic));
    const auto H1 = build_lattice(q.post, L, Boundary::periodic);
    const auto same = evolve_correlation(C0, H1, 0.0);
    CHECK((same.P - C0.P).cwiseAbs().maxCoeff() < 1e-13);

    for (double t : {0.3, 1.0, kPi / 2}) {
      const auto C = evolve_correlation(C0, H1, t);
      const auto ev = eigenvalues(C.P);
      for (int i = 0; i < 2 * L; ++i) CHECK(std::abs(ev(i) - (i < L ? 0.0 : 1.0)) < 1e-12);
      const auto Q = flattened_parent(C).matrix;
      CHECK((Q * Q - MatrixC::Identity(2 * L, 2 * L)).cwiseAbs().maxCoeff() < 1e-10);
      // the occupied state at momentum k is the lower band of d_P(k, t)
      for (int m = 0; m < L; ++m) {
        const double k = 2 * kPi * m / L;
        const VectorC v = plane_wave(L, k, lower_band_state(parent_bloch(q, k, t)));
        CHECK((C.P * v - v).norm() < 1e-12);
        const VectorC w = plane_wave(L, k, upper_band_state(parent_bloch(q, k, t)));
        CHECK((C.P * w).norm() < 1e-12);
      }
    }
    CHECK_THROWS_AS(evolve_correlation(C0, build_lattice(q.post, 8, Boundary::periodic), 1.0), ConfigError);
  }

  TEST_CASE("momentum correlation equals real-space evolution") {
    auto rng = test_rng(21);
    for (int draw = 0; draw < 6; ++draw) {
      const auto q = random_protocol(rng);
      for (int L : {8, 24, 64}) {
        const CorrelationEvolver ev(ground_correlation(build_lattice(q.pre, L, Boundary::periodic)),
                                    build_lattice(q.post, L, Boundary::periodic));
        for (double t : {0.0, 0.8, 2.9}) {
          const auto Cr = ev.at(t);
          const auto Cm = momentum_correlation(q, L, t);
          CHECK((Cr.P - Cm.P).cwiseAbs().maxCoeff() < 1e-10);
          for (int cut : {1, L / 2, L - 3}) {
            const auto a = entanglement_spectrum(Cr, cut, 8);
            const auto b = momentum_entanglement_spectrum(q, L, cut, t, 8);
            REQUIRE(a.xi.size() == b.xi.size());
            double e = 0.0;
            for (std::size_t i = 0; i < a.xi.size(); ++i) e = std::max(e, std::abs(a.xi[i] - b.xi[i]));
            for (std::size_t i = 0; i < std::min(a.lambdas.size(), b.lambdas.size()); ++i) {
              e = std::max(e, std::abs(a.lambdas[i] - b.lambdas[i]));
            }
            CHECK(e < 1e-10);
          }
        }
      }
    }
  }

  TEST_CASE("entanglement data from xi") {
    const auto d = entanglement_from_xi({0.0, 0.5, 0.5, 1.0, 0.2}, 8);
    CHECK(d.active_modes == 3);
    CHECK(d.filled_modes == 1);
    REQUIRE(d.lambdas.size() == 8);
    double sum = 0.0;
    for (double l : d.lambdas) sum += l;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.lambdas[0] == doctest::Approx(0.8 * 0.25));
    CHECK(d.lambdas[7] == doctest::Approx(0.2 * 0.25));
    for (std::size_t i = 0; i < d.xi.size(); ++i) {
      if (std::isfinite(d.eps[i])) CHECK(d.xi[i] == doctest::Approx(1.0 / (1.0 + std::exp(d.eps[i]))));
    }
    CHECK(std::isinf(d.eps.front()));

    // inert modes leave every lambda unchanged
    const auto base = entanglement_from_xi({0.3, 0.45, 0.9}, 8);
    const auto padded = entanglement_from_xi({0.3, 1e-13, 0.45, 1.0 - 1e-13, 0.9, 0.0}, 8);
    REQUIRE(base.lambdas.size() == padded.lambdas.size());
    for (std::size_t i = 0; i < base.lambdas.size(); ++i) CHECK(std::abs(base.lambdas[i] - padded.lambdas[i]) < 1e-12);

    const auto prod = entanglement_from_xi({0.0, 1.0, 1.0}, 4);
    CHECK(prod.lambdas == std::vector<double>{1.0});
    CHECK_FALSE(prod.fully_degenerate());
  }

  TEST_CASE("best-first enumeration matches brute force") {
    auto rng = test_rng(22);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int draw = 0; draw < 20; ++draw) {
      std::vector<double> xi(10);
      for (double& x : xi) x = u(rng);
      std::vector<double> all;
      for (int s = 0; s < (1 << 10); ++s) {
        double p = 1.0;
        for (int m = 0; m < 10; ++m) p *= (s >> m & 1) ? xi[m] : 1.0 - xi[m];
        all.push_back(p);
      }
      std::sort(all.rbegin(), all.rend());
      const auto top = top_lambdas(xi, 50);
      REQUIRE(top.size() == 50);
      for (int i = 0; i < 50; ++i) CHECK(std::abs(top[i] - all[i]) < 1e-15);
    }
  }

  TEST_CASE("flat-band SSH crossing: sixteen equal lambdas") {
    const auto es = momentum_entanglement_spectrum(ssh(), 1000, 500, kPi / 2, 16);
    CHECK(es.active_modes == 4);
    REQUIRE(es.lambdas.size() == 16);
    for (double l : es.lambdas) CHECK(std::abs(l - 1.0 / 16) < 1e-8);
    CHECK(es.fully_degenerate());
    CHECK(es.degeneracy_order() == 16.0);
    const auto t0 = momentum_entanglement_spectrum(ssh(), 100, 50, 0.0, 4);
    CHECK(t0.lambdas == std::vector<double>{1.0});
  }

  TEST_CASE("alpha = beta = 0.5 crossing: two half-filled modes") {
    const auto q = alpha_beta(0.5, 0.5);
    const double T = kPi / std::sqrt(1.25);
    const double ts = refine_esc(q, 200, 0.0, T);
    CHECK(ts == doctest::Approx(1.028826).epsilon(1e-3 / 1.03));
    const auto es = momentum_entanglement_spectrum(q, 200, 100, ts, 6);
    int half = 0;
    for (double x : es.xi) half += std::abs(x - 0.5) < 1e-8;
    CHECK(half == 2);
    CHECK(es.degeneracy_order() == 4.0);
    // the leading quartet is degenerate, the next multiplet is well separated
    REQUIRE(es.lambdas.size() == 6);
    for (int i = 1; i < 4; ++i) CHECK(std::abs(es.lambdas[i] / es.lambdas[0] - 1.0) < 1e-8);
    CHECK(es.lambdas[4] < 0.1 * es.lambdas[3]);
    CHECK(es.fully_degenerate());
    CHECK(es.total_spread > 0.5);

    const auto series = parent_obc_spectrum(q, 200, {ts, 0.5 * ts});
    CHECK(series.zero_mode_count(0, 1e-6) == 2);
    CHECK(series.zero_mode_count(1, 1e-6) == 0);
  }

  TEST_CASE("dispersive post-quench keeps full degeneracy at crossings") {
    const auto q = make_protocol("dispersive", {{"alpha", 0.5}, {"beta", 0.5}, {"delta", 0.2}});
    auto spread = [&](double t) {
      const auto es = momentum_entanglement_spectrum(q, 200, 100, t, 4);
      return std::pair{es.relative_spread, es.degeneracy_order()};
    };
    const auto ev = detect_esc(spread, time_grid(6.0, 601), 1e-6);
    REQUIRE(!ev.empty());
    for (const auto& e : ev) {
      CHECK(e.spread < 1e-8);
      CHECK(e.order >= 2.0);
    }
  }

  TEST_CASE("ES degeneracy order counts xi = 1/2 modes") {
    for (const auto& q : {ssh(), alpha_beta(0.5, 0.5), alpha_beta(0.5, 0.0)}) {
      auto spread = [&](double t) {
        const auto es = momentum_entanglement_spectrum(q, 120, 60, t, 4);
        return std::pair{es.relative_spread, es.degeneracy_order()};
      };
      const auto ev = detect_esc(spread, time_grid(4.0, 401), 1e-6);
      REQUIRE(!ev.empty());
      for (const auto& e : ev) {
        const auto es = momentum_entanglement_spectrum(q, 120, 60, e.t, 4);
        int half = 0;
        for (double x : es.xi) half += std::abs(x - 0.5) < 1e-8;
        CHECK(std::ldexp(1.0, half) == e.order);
      }
    }
  }

  TEST_CASE("finite-size rate converges to the integral") {
    auto rng = test_rng(23);
    const auto q = random_protocol(rng);
    for (double t : {0.4, 1.3}) {
      CHECK(std::abs(finite_size_rate(q, 1024, t) - rate_function(q, t, 1 << 14).f) < 1e-3);
    }
    // real-space Slater determinant against the momentum product at small L
    const int L = 10;
    const auto H0 = build_lattice(q.pre, L, Boundary::periodic);
    const CorrelationEvolver ev(ground_correlation(H0), build_lattice(q.post, L, Boundary::periodic));
    const MatrixC occ = ground_orbitals(H0);
    for (double t : {0.4, 1.3}) CHECK(std::abs(slater_rate(occ, ev.propagator(t), L) - finite_size_rate(q, L, t)) < 1e-10);
  }

  TEST_CASE("flattened parent edge cases") {
    CorrelationMatrix vac{3, MatrixC::Zero(6, 6)};
    CHECK((flattened_parent(vac).matrix - MatrixC::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
    CorrelationMatrix full{3, MatrixC::Identity(6, 6)};
    CHECK((flattened_parent(full).matrix + MatrixC::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
    CorrelationMatrix half{1, MatrixC::Identity(2, 2) * 0.5};
    CHECK(eigenvalues(flattened_parent(half).matrix).cwiseAbs().minCoeff() < 1e-15);
  }

  TEST_CASE("parent OBC spectra") {
    const auto s = parent_obc_spectrum(ssh(), 200, {kPi / 2, 1.0, 0.0});
    CHECK(s.zero_mode_count(0) == 4);
    CHECK(s.zero_mode_count(1) == 0);
    CHECK(s.zero_mode_count(2) == 0);

    // periodic parent: spectrum repeats after T
    const auto q = alpha_beta(0.5, 0.5);
    const double T = kPi / std::sqrt(1.25);
    const auto p = parent_obc_spectrum(q, 40, {0.7, 0.7 + T});
    for (std::size_t i = 0; i < p.energies[0].size(); ++i) CHECK(std::abs(p.energies[0][i] - p.energies[1][i]) < 1e-10);

    // the dispersive parent acquires harmonics beyond second order
    const auto disp = make_protocol("dispersive", {{"alpha", 0.5}, {"beta", 0.5}, {"delta", 0.2}});
    CHECK_THROWS_AS(parent_obc_spectrum(disp, 20, {2.0}), NumericalError);
  }

  TEST_CASE("zero-mode profiles") {
    const auto q = alpha_beta(0.5, 0.5);
    const double ts = refine_esc(q, 200, 0.0, 2.0);
    const auto H = build_lattice(parent_bloch_function(q, ts), 200, Boundary::open);
    const auto prof = zero_mode_profiles(H, 1e-6);
    REQUIRE(prof.size() == 2);
    CHECK(prof[0].left_edge != prof[1].left_edge);
    for (const auto& p : prof) {
      double total = 0.0;
      for (double x : p.density) total += x;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(p.xi_loc > 0.0);
      CHECK(p.xi_loc < 20.0);
      const std::size_t peak = std::max_element(p.density.begin(), p.density.end()) - p.density.begin();
      CHECK((p.left_edge ? peak < 10 : peak > 189));
    }

    const auto flat = build_lattice(parent_bloch_function(ssh(), kPi / 2), 100, Boundary::open);
    const auto four = zero_mode_profiles(flat);
    REQUIRE(four.size() == 4);
    int left = 0;
    for (const auto& p : four) left += p.left_edge;
    CHECK(left == 2);

    CHECK(zero_mode_profiles(build_lattice(BlochFunction::constant(1, 0.3), 50, Boundary::open)).empty());
  }

  TEST_CASE("chiral beta = 0 protocol: zero modes and Zak = pi at crossings") {
    const auto q = alpha_beta(0.5, 0.0);
    auto spread = [&](double t) {
      const auto es = momentum_entanglement_spectrum(q, 200, 100, t, 4);
      return std::pair{es.relative_spread, es.degeneracy_order()};
    };
    const auto ev = detect_esc(spread, time_grid(2 * kPi / std::sqrt(1.25), 801), 1e-6);
    REQUIRE(!ev.empty());
    for (const auto& e : ev) {
      CHECK(std::abs(std::abs(zak_phase(q, e.t)) - kPi) < 1e-6);
      const auto s = parent_obc_spectrum(q, 200, {e.t});
      CHECK(s.zero_mode_count(0, 1e-6) == 2);
      // chiral symmetry: spectrum symmetric about zero
      const auto& E = s.energies[0];
      for (std::size_t i = 0; i < E.size(); ++i) CHECK(std::abs(E[i] + E[E.size() - 1 - i]) < 1e-10);
    }
  }

  TEST_CASE("real-momentum Z2 invariant") {
    for (double t : {0.0, 0.5, kPi / 2, 2.5}) CHECK(z2_invariant(ssh(), t) == 0);
    CHECK(z2_from_values(1.0, -0.5) == 1);
    CHECK(z2_from_values(-1.0, -0.5) == 0);
    CHECK_THROWS_AS(z2_from_values(0.0, 1.0), NumericalError);
  }

  TEST_CASE("time grid and ESC detection helpers") {
    const auto g = time_grid(2.0, 5);
    CHECK(g == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    auto f = [](double t) { return std::pair{std::abs(t - 0.7), 2.0}; };
    const auto ev = detect_esc(f, time_grid(2.0, 21), 1e-6);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].t == doctest::Approx(0.7).epsilon(1e-9));
  }
}
