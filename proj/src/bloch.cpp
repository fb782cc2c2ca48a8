#include "quenchsig/bloch.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>

namespace quenchsig {

std::string to_string(Boundary bc) { return bc == Boundary::periodic ? "periodic" : "open"; }

double wrap_momentum(double k) {
  double w = std::remainder(k, 2.0 * kPi);  // in [-pi, pi]
  if (w >= kPi) w -= 2.0 * kPi;
  return w;
}

BlochVector3 BlochVector3::normalized() const {
  const double n = norm();
  if (n == 0.0) throw GaplessError("cannot normalize a vanishing Bloch vector");
  return *this / n;
}

BlochFunction::BlochFunction(std::string family, ParamMap params, std::vector<Harmonic> harmonics,
                             bool allow_gapless)
    : family_(std::move(family)),
      params_(std::move(params)),
      harmonics_(std::move(harmonics)),
      allow_gapless_(allow_gapless) {
  if (harmonics_.empty()) harmonics_.push_back(Harmonic{});
  // trailing zero harmonics do not count toward the order
  while (harmonics_.size() > 1 && harmonics_.back().cos_part == BlochVector3{} &&
         harmonics_.back().sin_part == BlochVector3{}) {
    harmonics_.pop_back();
  }
  if (order() > kMaxOrder) {
    throw ConfigError("harmonic order " + std::to_string(order()) + " exceeds the cap of " +
                      std::to_string(kMaxOrder));
  }
  harmonics_.front().sin_part = {};
}

BlochFunction BlochFunction::constant(double beta, double alpha, double J) {
  return {"constant", {{"beta", beta}, {"alpha", alpha}, {"J", J}}, {{{J * beta, 0.0, J * alpha}, {}}}};
}

BlochFunction BlochFunction::constant_vector(const BlochVector3& d) {
  return {"constant_vector", {{"x", d.x}, {"y", d.y}, {"z", d.z}}, {{d, {}}}};
}

BlochFunction BlochFunction::ssh_circle(double Jx) {
  return {"ssh_circle", {{"J_x", Jx}}, {Harmonic{}, {{Jx, 0.0, 0.0}, {0.0, Jx, 0.0}}}};
}

BlochFunction BlochFunction::rice_mele(double alpha, double J) {
  return {"rice_mele",
          {{"alpha", alpha}, {"J", J}},
          {{{0.0, 0.0, J * alpha}, {}}, {{J, 0.0, 0.0}, {0.0, J, 0.0}}}};
}

BlochFunction BlochFunction::dispersive(double delta, double alpha, double J) {
  return {"dispersive",
          {{"delta", delta}, {"alpha", alpha}, {"J", J}},
          {{{J * delta, 0.0, J * alpha}, {}}, {{J, 0.0, 0.0}, {0.0, J, 0.0}}}};
}

BlochFunction BlochFunction::kitaev(double J, double U) {
  return {"kitaev",
          {{"J", J}, {"U", U}},
          {{{0.0, 0.0, 2.0 * J}, {}}, {{0.0, 0.0, -U / 2.0}, {0.0, -U / 2.0, 0.0}}}};
}

BlochFunction BlochFunction::interacting_ssh(double J, double J_prime) {
  return {"interacting_ssh",
          {{"J", J}, {"J_prime", J_prime}},
          {{{J_prime, 0.0, 0.0}, {}}, {{J, 0.0, 0.0}, {0.0, -J, 0.0}}}};
}

BlochFunction BlochFunction::x_cos_z(double Jx, double Jz) {
  return {"x_cos_z", {{"J_x", Jx}, {"J_z", Jz}}, {{{Jx, 0.0, 0.0}, {}}, {{0.0, 0.0, Jz}, {}}}};
}

BlochFunction BlochFunction::from_harmonics(std::vector<Harmonic> harmonics, bool allow_gapless) {
  ParamMap params;
  const char axes[] = {'x', 'y', 'z'};
  for (std::size_t h = 0; h < harmonics.size(); ++h) {
    const double c[] = {harmonics[h].cos_part.x, harmonics[h].cos_part.y, harmonics[h].cos_part.z};
    const double s[] = {harmonics[h].sin_part.x, harmonics[h].sin_part.y, harmonics[h].sin_part.z};
    for (int a = 0; a < 3; ++a) {
      if (c[a] != 0.0) params["c" + std::to_string(h) + axes[a]] = c[a];
      if (s[a] != 0.0 && h > 0) params["s" + std::to_string(h) + axes[a]] = s[a];
    }
  }
  return {"harmonic", std::move(params), std::move(harmonics), allow_gapless};
}

namespace {

struct FamilySpec {
  std::string_view name;
  std::vector<std::string_view> required;
  std::vector<std::pair<std::string_view, double>> optional;
};

const std::vector<FamilySpec>& family_specs() {
  static const std::vector<FamilySpec> specs = {
      {"constant", {"beta", "alpha"}, {{"J", 1.0}}},
      {"constant_vector", {}, {{"x", 0.0}, {"y", 0.0}, {"z", 0.0}}},
      {"ssh_circle", {"J_x"}, {}},
      {"rice_mele", {"alpha"}, {{"J", 1.0}}},
      {"dispersive", {"delta", "alpha"}, {{"J", 1.0}}},
      {"kitaev", {"U"}, {{"J", 1.0}}},
      {"x_cos_z", {"J_x", "J_z"}, {}},
      {"interacting_ssh", {}, {{"J", 1.0}, {"J_prime", 0.0}}},
  };
  return specs;
}

// Parses keys of the form c<h><axis> / s<h><axis>, e.g. "c0z", "s1y".
BlochFunction harmonic_from_params(const ParamMap& params) {
  std::vector<Harmonic> harmonics(1);
  bool allow_gapless = false;
  for (const auto& [key, value] : params) {
    if (key == "allow_gapless") {
      allow_gapless = value != 0.0;
      continue;
    }
    const bool ok = key.size() >= 3 && (key[0] == 'c' || key[0] == 's') &&
                    std::all_of(key.begin() + 1, key.end() - 1, [](char ch) { return std::isdigit(ch); }) &&
                    (key.back() == 'x' || key.back() == 'y' || key.back() == 'z');
    if (!ok) throw ConfigError("harmonic family: unrecognised coefficient key '" + key + "'");
    const int h = std::stoi(key.substr(1, key.size() - 2));
    if (h > BlochFunction::kMaxOrder) {
      throw ConfigError("harmonic family: order " + std::to_string(h) + " exceeds cap " +
                        std::to_string(BlochFunction::kMaxOrder));
    }
    if (key[0] == 's' && h == 0) throw ConfigError("harmonic family: s0* coefficients are meaningless");
    if (static_cast<int>(harmonics.size()) <= h) harmonics.resize(h + 1);
    BlochVector3& v = key[0] == 'c' ? harmonics[h].cos_part : harmonics[h].sin_part;
    (key.back() == 'x' ? v.x : key.back() == 'y' ? v.y : v.z) = value;
  }
  return BlochFunction::from_harmonics(std::move(harmonics), allow_gapless);
}

}  // namespace

BlochFunction BlochFunction::from_family(std::string_view family, const ParamMap& params) {
  if (family == "harmonic") return harmonic_from_params(params);
  const auto& specs = family_specs();
  const auto it = std::find_if(specs.begin(), specs.end(), [&](const FamilySpec& s) { return s.name == family; });
  if (it == specs.end()) throw ConfigError("unknown Bloch function family '" + std::string(family) + "'");

  ParamMap p;
  for (auto key : it->required) {
    const auto found = params.find(key);
    if (found == params.end()) {
      throw ConfigError("family '" + std::string(family) + "' requires parameter '" + std::string(key) + "'");
    }
    p.emplace(std::string(key), found->second);
  }
  for (auto [key, fallback] : it->optional) {
    const auto found = params.find(key);
    p.emplace(std::string(key), found == params.end() ? fallback : found->second);
  }
  for (const auto& [key, value] : params) {
    if (!p.contains(key)) {
      throw ConfigError("family '" + std::string(family) + "' has no parameter '" + key + "'");
    }
  }

  if (family == "constant") return constant(p["beta"], p["alpha"], p["J"]);
  if (family == "constant_vector") return constant_vector({p["x"], p["y"], p["z"]});
  if (family == "ssh_circle") return ssh_circle(p["J_x"]);
  if (family == "rice_mele") return rice_mele(p["alpha"], p["J"]);
  if (family == "dispersive") return dispersive(p["delta"], p["alpha"], p["J"]);
  if (family == "kitaev") return kitaev(p["J"], p["U"]);
  if (family == "interacting_ssh") return interacting_ssh(p["J"], p["J_prime"]);
  return x_cos_z(p["J_x"], p["J_z"]);
}

BlochVector3 BlochFunction::operator()(double k) const {
  BlochVector3 d = harmonics_.front().cos_part;
  for (std::size_t h = 1; h < harmonics_.size(); ++h) {
    const double c = std::cos(static_cast<double>(h) * k);
    const double s = std::sin(static_cast<double>(h) * k);
    d += c * harmonics_[h].cos_part + s * harmonics_[h].sin_part;
  }
  return d;
}

BlochVector3 BlochFunction::derivative(double k) const {
  BlochVector3 d;
  for (std::size_t h = 1; h < harmonics_.size(); ++h) {
    const double hh = static_cast<double>(h);
    d += (-hh * std::sin(hh * k)) * harmonics_[h].cos_part + (hh * std::cos(hh * k)) * harmonics_[h].sin_part;
  }
  return d;
}

double BlochFunction::min_norm(int n_k) const {
  double best = std::numeric_limits<double>::infinity();
  for (double k : momentum_grid(n_k)) best = std::min(best, (*this)(k).norm());
  return best;
}

std::optional<double> BlochFunction::flat_norm(int n_k, double tol) const {
  const auto grid = momentum_grid(n_k);
  const double first = (*this)(grid.front()).norm();
  for (double k : grid) {
    if (std::abs((*this)(k).norm() - first) > tol * std::max(1.0, first)) return std::nullopt;
  }
  return first;
}

void BlochFunction::require_gapped(int n_k) const {
  if (allow_gapless_) return;
  const double m = min_norm(n_k);
  if (!(m > 0.0)) throw GaplessError("Bloch function '" + family_ + "' closes its gap on the momentum grid");
}

std::vector<double> momentum_grid(int n_k) {
  if (n_k < 1) throw ConfigError("momentum grid needs at least one point");
  std::vector<double> k(n_k);
  for (int n = 0; n < n_k; ++n) k[n] = -kPi + 2.0 * kPi * n / n_k;
  return k;
}

Decomposition decompose(const BlochVector3& d, const BlochVector3& dp) {
  const double dp_norm = dp.norm();
  if (!(dp_norm > 0.0)) throw GaplessError("post-quench Bloch vector vanishes");
  Decomposition out;
  out.par = (d.dot(dp) / (dp_norm * dp_norm)) * dp;
  out.perp = d - out.par;
  out.ortho = -(d.cross(dp) / dp_norm);
  return out;
}

BlochVector3 parent_bloch(const QuenchProtocol& q, double k, double t) {
  const BlochVector3 d = q.pre(k);
  const BlochVector3 dp = q.post(k);
  const auto parts = decompose(d, dp);
  if (t == 0.0) return d;  // par + perp rounds; the initial condition is exact
  const double phase = 2.0 * dp.norm() * t;
  return parts.par + std::cos(phase) * parts.perp + std::sin(phase) * parts.ortho;
}

BlochVector3 parent_bloch_dt(const QuenchProtocol& q, double k, double t) {
  const BlochVector3 d = q.pre(k);
  const BlochVector3 dp = q.post(k);
  const auto parts = decompose(d, dp);
  const double w = 2.0 * dp.norm();
  return (-w * std::sin(w * t)) * parts.perp + (w * std::cos(w * t)) * parts.ortho;
}

double period_at(const QuenchProtocol& q, double k) {
  const double dp = q.post(k).norm();
  if (!(dp > 0.0)) throw GaplessError("post-quench gap closes at k = " + std::to_string(k));
  return kPi / dp;
}

std::optional<double> parent_period(const QuenchProtocol& q) {
  const auto flat = q.post.flat_norm();
  if (!flat || !(*flat > 0.0)) return std::nullopt;
  return kPi / *flat;
}

BlochVector3 ParentCoefficients::bloch(double k) const {
  const cplx hop = delta + epsilon * std::polar(1.0, -k) + eta * std::polar(1.0, -2.0 * k);
  return {hop.real(), -hop.imag(), m + m_c * std::cos(k) + m_s * std::sin(k)};
}

ParentCoefficients parent_coefficients(double alpha, double beta, double J, double t) {
  if (!(J > 0.0)) throw ConfigError("parent_coefficients requires J > 0");
  const double a2 = 1.0 + alpha * alpha;
  const double root = std::sqrt(a2);
  const double s = root * J * t;
  const double sin_sq = std::sin(s) * std::sin(s);
  const double c2 = std::cos(2.0 * s);
  const double s2 = std::sin(2.0 * s);

  ParentCoefficients pc;
  pc.eta = beta * J / a2 * sin_sq;
  pc.epsilon = alpha * J / a2 * cplx(alpha * (1.0 - c2), root * s2);
  pc.delta = beta * J / (2.0 * a2) * cplx(1.0 + (1.0 + 2.0 * alpha * alpha) * c2, -2.0 * alpha * root * s2);
  pc.m = alpha * J / a2 * (alpha * alpha + c2);
  pc.m_c = 2.0 * J * alpha * beta / a2 * sin_sq;
  pc.m_s = -beta * J / root * s2;
  return pc;
}

}  // namespace quenchsig
