#include "quenchsig/selftest.hpp"

#include <algorithm>
#include <cmath>

#include "quenchsig/free_fermion.hpp"
#include "quenchsig/interacting.hpp"

namespace quenchsig {

QuenchProtocol random_protocol(std::mt19937_64& rng, int max_order, double min_gap) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto draw = [&] {
    for (;;) {
      std::vector<Harmonic> hs(static_cast<std::size_t>(max_order) + 1);
      for (std::size_t h = 0; h < hs.size(); ++h) {
        const double w = 1.0 / (1.0 + h);
        hs[h].cos_part = {w * g(rng), w * g(rng), w * g(rng)};
        if (h > 0) hs[h].sin_part = {w * g(rng), w * g(rng), w * g(rng)};
      }
      BlochFunction f = BlochFunction::from_harmonics(hs, true);
      if (f.min_norm(512) > min_gap) return BlochFunction::from_harmonics(hs);
    }
  };
  QuenchProtocol q;
  q.pre = draw();
  q.post = draw();
  q.label = "random";
  return q;
}

QuenchProtocol random_chiral_protocol(std::mt19937_64& rng, int max_order, double min_gap) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto draw = [&] {
    for (;;) {
      std::vector<Harmonic> hs(static_cast<std::size_t>(max_order) + 1);
      for (std::size_t h = 0; h < hs.size(); ++h) {
        hs[h].cos_part = {g(rng), 0.0, 0.0};
        if (h > 0) hs[h].sin_part = {0.0, g(rng), 0.0};
      }
      BlochFunction f = BlochFunction::from_harmonics(hs, true);
      if (f.min_norm(512) > min_gap) return BlochFunction::from_harmonics(hs);
    }
  };
  QuenchProtocol q;
  q.pre = draw();
  q.post = draw();
  q.label = "random chiral";
  return q;
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    e = std::max(e, std::abs(x - y));
  }
  return e;
}

}  // namespace

OracleErrors ed_oracle_errors(const QuenchProtocol& q, int L, Boundary bc, double t_max, int n_t) {
  const auto H0 = build_lattice(q.pre, L, bc);
  const auto H1 = build_lattice(q.post, L, bc);
  const MatrixC occ = ground_orbitals(H0);
  const CorrelationEvolver ev(ground_correlation(H0), H1);

  const auto Hpre = build_hubbard(q.pre, 0.0, L, bc);
  const auto Hpost = build_hubbard(q.post, 0.0, L, bc);
  const FockState psi0 = ground_state(Hpre).states.front();
  const StateEvolver sev(Hpost);

  OracleErrors err;
  const int cut = L / 2;
  const auto times = time_grid(t_max, n_t);
  FockState psit = psi0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (i > 0) psit = sev.dense() ? sev.evolve(psi0, t) : sev.evolve(psit, t - times[i - 1]);
    const double f_ed = loschmidt_rate(psi0, psit, L).rate;
    const double f_ff = slater_rate(occ, ev.propagator(t), L);
    // the logarithm amplifies round-off near exact finite-size zeros of the
    // return amplitude, so compare amplitudes there instead
    const double amp_ff = std::exp(-0.5 * L * f_ff);
    const double e = amp_ff > 1e-4 ? std::abs(f_ed - f_ff) : std::abs(std::exp(-0.5 * L * f_ed) - amp_ff);
    err.rate = std::max(err.rate, e);

    const CorrelationMatrix C = ev.at(t);
    const int n = 1 << std::min(cut * 2, 6);
    err.es = std::max(err.es, max_abs_diff(many_body_es(psit, cut, n), entanglement_spectrum(C, cut, n).lambdas));

    const MatrixC G = two_point_matrix(psit);
    err.two_point = std::max(err.two_point, (G - C.P.transpose()).cwiseAbs().maxCoeff());
  }
  return err;
}

std::vector<SelftestCheck> run_selftest(std::uint64_t seed, int random_draws) {
  SelftestCheck rate{"ed_vs_free_rate", 0.0, 1e-8};
  SelftestCheck es{"ed_vs_free_es", 0.0, 1e-8};
  SelftestCheck corr{"ed_vs_free_two_point", 0.0, 1e-8};
  SelftestCheck fast{"momentum_vs_dense_es", 0.0, 1e-10};
  SelftestCheck slater{"slater_identities", 0.0, 1e-12};

  std::mt19937_64 rng(seed);
  std::vector<QuenchProtocol> protocols = {
      {BlochFunction::constant(0.5, 0.5), BlochFunction::rice_mele(0.5), "alpha_beta"}};
  for (int i = 0; i < random_draws; ++i) protocols.push_back(random_protocol(rng));

  for (const auto& q : protocols) {
    for (int L : {4, 6}) {
      for (Boundary bc : {Boundary::periodic, Boundary::open}) {
        const double period = kPi / std::max(q.post.min_norm(), 1e-3);
        const auto e = ed_oracle_errors(q, L, bc, period, 9);
        rate.max_error = std::max(rate.max_error, e.rate);
        es.max_error = std::max(es.max_error, e.es);
        corr.max_error = std::max(corr.max_error, e.two_point);
      }
    }
    const int L = 32;
    const CorrelationEvolver real_space(ground_correlation(build_lattice(q.pre, L, Boundary::periodic)),
                                        build_lattice(q.post, L, Boundary::periodic));
    for (double t : {0.0, 0.37, 1.1}) {
      const auto a = momentum_entanglement_spectrum(q, L, L / 2, t, 8);
      const auto b = entanglement_spectrum(real_space.at(t), L / 2, 8);
      fast.max_error = std::max(fast.max_error, max_abs_diff(a.xi, b.xi));
    }
  }

  for (int L : {4, 8, 16}) {
    const double sign_ref = (L / 2) % 2 ? -1.0 : 1.0;
    const auto A = polarized_state(L, Sublattice::A);
    const auto B = polarized_state(L, Sublattice::B);
    const auto Hobc = build_lattice(BlochFunction::interacting_ssh(1.0), L, Boundary::open);
    const auto At = evolve_slater(A, Hobc, kPi / 2);
    slater.max_error = std::max(slater.max_error, std::abs(slater_overlap(A, At)));
    slater.max_error = std::max(slater.max_error, std::abs(slater_overlap(B, At)));
    for (int s : {+1, -1}) {
      const cplx o = cat_overlap(L, Boundary::periodic, s, kPi / 2);
      slater.max_error = std::max(slater.max_error, std::abs(o - cplx(s * sign_ref, 0.0)));
    }
  }
  return {rate, es, corr, fast, slater};
}

}  // namespace quenchsig
