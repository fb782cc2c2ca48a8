#include "quenchsig/indicators.hpp"

#include <algorithm>
#include <cmath>

#include "quenchsig/parallel.hpp"

namespace quenchsig {

namespace {

// Minimizes a unimodal function on [a, b].
template <class F>
double golden_section(F&& f, double a, double b, double tol = 1e-13) {
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

// Canonical representative in [-pi, pi) with values close to +pi folded to -pi.
double canonical_momentum(double k) {
  double w = wrap_momentum(k);
  if (kPi - std::abs(w) < 1e-9) w = -kPi;
  return w;
}

void dedupe_sorted(std::vector<double>& ks, double tol) {
  std::sort(ks.begin(), ks.end());
  std::vector<double> out;
  for (double k : ks) {
    if (out.empty() || k - out.back() > tol) out.push_back(k);
  }
  if (out.size() > 1 && (out.front() + 2.0 * kPi) - out.back() <= tol) out.pop_back();
  ks = std::move(out);
}

}  // namespace

double unit_overlap(const QuenchProtocol& q, double k) {
  const BlochVector3 d = q.pre(k);
  const BlochVector3 dp = q.post(k);
  const double nd = d.norm();
  const double ndp = dp.norm();
  if (!(nd > 0.0) || !(ndp > 0.0)) {
    throw GaplessError("gap closes at k = " + std::to_string(k));
  }
  return std::clamp(d.dot(dp) / (nd * ndp), -1.0, 1.0);
}

double gamma(const QuenchProtocol& q, double k) {
  const double c = unit_overlap(q, k);
  return c * c;
}

RateValue rate_function(const QuenchProtocol& q, double t, int n_k) {
  RateValue out;
  const auto grid = momentum_grid(n_k);
  std::vector<double> arg(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = q.post(grid[i]).norm() * t;
    const double c = std::cos(w);
    const double s = std::sin(w);
    arg[i] = c * c + gamma(q, grid[i]) * s * s;
  }
  double sum = 0.0;
  const std::size_t n = arg.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (arg[i] >= kRateZero) {
      sum += std::log(arg[i]);
      continue;
    }
    ++out.excluded;
    // The omitted point of a log|k - k*|^2 singularity sitting on the grid is
    // restored by the Navot term ln c + 2 ln(h / 2 pi), with c read off the
    // neighbours g(k* +- h) = c h^2.
    const double left = arg[(i + n - 1) % n];
    const double right = arg[(i + 1) % n];
    if (left >= kRateZero && right >= kRateZero) sum += 0.5 * std::log(left * right) - 2.0 * std::log(2.0 * kPi);
  }
  out.f = -sum / n_k;
  return out;
}

RateCurve rate_curve(const QuenchProtocol& q, const std::vector<double>& times, int n_k) {
  RateCurve curve;
  curve.times = times;
  curve.values.resize(times.size());
  std::vector<int> excluded(times.size(), 0);
  parallel_for(times.size(), [&](std::size_t i) {
    const auto r = rate_function(q, times[i], n_k);
    curve.values[i] = r.f;
    excluded[i] = r.excluded;
  });
  curve.excluded_points = std::any_of(excluded.begin(), excluded.end(), [](int e) { return e > 0; });
  return curve;
}

std::vector<double> critical_momenta(const QuenchProtocol& q, int n_k) {
  const auto grid = momentum_grid(n_k);
  std::vector<double> g(n_k);
  for (int i = 0; i < n_k; ++i) g[i] = unit_overlap(q, grid[i]);

  std::vector<double> roots;
  for (int i = 0; i < n_k; ++i) {
    double a = grid[i];
    double b = i + 1 < n_k ? grid[i + 1] : kPi;
    double ga = g[i];
    const double gb = g[(i + 1) % n_k];
    if (ga == 0.0) {
      // a root sitting on the grid counts only if the sign really changes there
      const double before = g[(i + n_k - 1) % n_k];
      if (before * gb < 0.0) roots.push_back(canonical_momentum(a));
      continue;
    }
    if ((ga > 0.0) == (gb > 0.0) || gb == 0.0) continue;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      const double mid = 0.5 * (a + b);
      const double gm = unit_overlap(q, mid);
      if (gm == 0.0) {
        a = b = mid;
        break;
      }
      if ((gm > 0.0) == (ga > 0.0)) {
        a = mid;
        ga = gm;
      } else {
        b = mid;
      }
    }
    roots.push_back(canonical_momentum(0.5 * (a + b)));
  }
  dedupe_sorted(roots, 1e-9);
  return roots;
}

std::vector<DqptEvent> dqpt_times(const QuenchProtocol& q, double t_max, int n_k) {
  if (!(t_max > 0.0)) throw ConfigError("dqpt_times requires t_max > 0");
  std::vector<DqptEvent> events;
  for (double k : critical_momenta(q, n_k)) {
    const double w = q.post(k).norm();
    if (!(w > 0.0)) throw GaplessError("post-quench gap closes at a critical momentum");
    for (int n = 0;; ++n) {
      const double t = (2.0 * n + 1.0) * kPi / (2.0 * w);
      if (t > t_max) break;
      events.push_back({k, t});
    }
  }
  std::sort(events.begin(), events.end(), [](const DqptEvent& a, const DqptEvent& b) {
    return a.t_star != b.t_star ? a.t_star < b.t_star : a.k_star < b.k_star;
  });
  return events;
}

std::vector<FixedMomentum> fixed_momenta(const QuenchProtocol& q, int n_k, std::vector<double>* near_misses) {
  const auto grid = momentum_grid(n_k);
  const double dk = 2.0 * kPi / n_k;
  auto sine = [&](double k) {
    const BlochVector3 n = q.pre(k).normalized();
    const BlochVector3 np = q.post(k).normalized();
    return n.cross(np).norm();
  };
  std::vector<double> s(n_k);
  for (int i = 0; i < n_k; ++i) s[i] = sine(grid[i]);

  std::vector<double> found;
  std::vector<double> misses;
  for (int i = 0; i < n_k; ++i) {
    const double left = s[(i + n_k - 1) % n_k];
    const double right = s[(i + 1) % n_k];
    if (!(s[i] < left && s[i] <= right)) continue;
    const double k = golden_section(sine, grid[i] - dk, grid[i] + dk);
    const double c = unit_overlap(q, k);
    const double miss = 1.0 - std::abs(c);
    if (miss < kFixedMomentumTol) {
      found.push_back(canonical_momentum(k));
    } else if (miss < kFixedMomentumWarn) {
      misses.push_back(canonical_momentum(k));
    }
  }
  dedupe_sorted(found, 1e-8);
  if (near_misses) *near_misses = std::move(misses);

  std::vector<FixedMomentum> out;
  for (double k : found) out.push_back({k, unit_overlap(q, k) > 0.0});
  return out;
}

DcnResult dcn_analytic(const QuenchProtocol& q) {
  DcnResult res;
  res.fixed = fixed_momenta(q);
  const auto& f = res.fixed;
  if (f.size() < 2) {
    // A single fixed momentum bounds one segment spanning the zone.
    const double lo = f.empty() ? -kPi : f.front().k;
    res.segments.push_back({lo, lo + 2.0 * kPi, 0.0, 0.0});
    return res;
  }
  auto cos_theta = [](const FixedMomentum& m) { return m.parallel ? 1.0 : -1.0; };
  for (std::size_t m = 0; m < f.size(); ++m) {
    const bool wrap = m + 1 == f.size();
    const FixedMomentum& lo = f[m];
    const FixedMomentum& hi = wrap ? f.front() : f[m + 1];
    res.segments.push_back(
        {lo.k, wrap ? hi.k + 2.0 * kPi : hi.k, 0.0, 0.5 * (cos_theta(lo) - cos_theta(hi))});
  }
  return res;
}

double dcn_numeric(const QuenchProtocol& q, const DcnSegment& segment, int n_k, int n_t) {
  if (n_k < 1 || n_t < 1) throw ConfigError("dcn_numeric needs positive grid sizes");
  const double dk = (segment.k_hi - segment.k_lo) / n_k;
  const double h = 0.5 * dk;
  std::vector<double> partial(n_k, 0.0);

  parallel_for(static_cast<std::size_t>(n_k), [&](std::size_t i) {
    const double k = segment.k_lo + (static_cast<double>(i) + 0.5) * dk;
    const double w = q.post(k).norm();
    if (!(w > 0.0)) throw GaplessError("post-quench gap closes inside a DCN segment");
    const double period = kPi / w;
    const double dt = period / n_t;

    struct Frame {
      Decomposition parts;
      double omega;
      double inv_norm;
    };
    auto frame = [&](double kk) {
      const BlochVector3 d = q.pre(kk);
      const BlochVector3 dp = q.post(kk);
      return Frame{decompose(d, dp), 2.0 * dp.norm(), 1.0 / d.norm()};
    };
    auto unit = [](const Frame& f, double t) {
      return (f.parts.par + std::cos(f.omega * t) * f.parts.perp + std::sin(f.omega * t) * f.parts.ortho) *
             f.inv_norm;
    };
    const Frame mid = frame(k);
    const Frame plus = frame(k + h);
    const Frame minus = frame(k - h);

    double acc = 0.0;
    for (int j = 0; j < n_t; ++j) {
      const double t = (j + 0.5) * dt;
      const BlochVector3 n = unit(mid, t);
      const BlochVector3 dn_dk = (unit(plus, t) - unit(minus, t)) / (2.0 * h);
      const BlochVector3 dn_dt =
          ((-mid.omega * std::sin(mid.omega * t)) * mid.parts.perp +
           (mid.omega * std::cos(mid.omega * t)) * mid.parts.ortho) *
          mid.inv_norm;
      acc += n.dot(dn_dk.cross(dn_dt));
    }
    partial[i] = acc * dt;
  });

  double total = 0.0;
  for (double p : partial) total += p;
  return total * dk / (4.0 * kPi);
}

double dcn_numeric(const QuenchProtocol& q, int m, int n_k, int n_t) {
  const auto res = dcn_analytic(q);
  if (m < 0 || m >= static_cast<int>(res.segments.size())) {
    throw ConfigError("DCN segment index " + std::to_string(m) + " out of range");
  }
  return dcn_numeric(q, res.segments[m], n_k, n_t);
}

DcnResult dcn(const QuenchProtocol& q, int n_k, int n_t) {
  DcnResult res = dcn_analytic(q);
  for (auto& seg : res.segments) seg.numeric = dcn_numeric(q, seg, n_k, n_t);
  return res;
}

Spinor lower_band_state(const BlochVector3& d) {
  const double r = d.norm();
  if (!(r > 0.0)) throw GaplessError("lower band undefined for a vanishing Bloch vector");
  Spinor u;
  if (d.z > 0.0) {
    u = {cplx(d.x, -d.y), cplx(-(d.z + r), 0.0)};
  } else {
    u = {cplx(r - d.z, 0.0), cplx(-d.x, -d.y)};
  }
  const double n = std::sqrt(std::norm(u[0]) + std::norm(u[1]));
  u[0] /= n;
  u[1] /= n;
  return u;
}

double berry_phase(const std::vector<Spinor>& states) {
  cplx prod = 1.0;
  const std::size_t n = states.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Spinor& a = states[i];
    const Spinor& b = states[(i + 1) % n];
    const cplx link = std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
    prod *= link / std::abs(link);
  }
  double phase = -std::arg(prod);
  if (phase <= -kPi) phase += 2.0 * kPi;
  return phase;
}

double zak_phase(const QuenchProtocol& q, double t, int n_k) {
  std::vector<Spinor> states;
  states.reserve(n_k);
  for (double k : momentum_grid(n_k)) {
    const BlochVector3 dP = parent_bloch(q, k, t);
    if (dP.norm() < 1e-12) throw GaplessError("parent gap closes on the momentum grid");
    states.push_back(lower_band_state(dP));
  }
  return berry_phase(states);
}

ZakSeries zak_series(const QuenchProtocol& q, const std::vector<double>& times, int n_k) {
  ZakSeries z{times, std::vector<double>(times.size())};
  parallel_for(times.size(), [&](std::size_t i) { z.phases[i] = zak_phase(q, times[i], n_k); });
  return z;
}

}  // namespace quenchsig
