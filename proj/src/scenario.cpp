#include "quenchsig/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

#include "quenchsig/free_fermion.hpp"
#include "quenchsig/interacting.hpp"
#include "quenchsig/parallel.hpp"

namespace quenchsig {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError(where + ": malformed number '" + text + "'");
  if (!std::isfinite(v)) throw ConfigError(where + ": non-finite number '" + text + "'");
  return v;
}

int parse_int(const std::string& text, const std::string& where) {
  const double v = parse_number(text, where);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(where + ": expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& text, const std::string& where) {
  const std::string t = lower(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ConfigError(where + ": expected a boolean, got '" + text + "'");
}

Boundary parse_boundary(const std::string& text, const std::string& where) {
  const std::string t = lower(text);
  if (t == "periodic" || t == "pbc") return Boundary::periodic;
  if (t == "open" || t == "obc") return Boundary::open;
  throw ConfigError(where + ": boundary must be periodic or open, got '" + text + "'");
}

// Reads typed values out of one section and tracks which keys were used.
class SectionReader {
 public:
  SectionReader(const IniDocument& doc, std::string name) : name_(std::move(name)) {
    const auto it = doc.sections.find(name_);
    if (it != doc.sections.end()) values_ = &it->second;
  }

  bool present() const { return values_ != nullptr; }
  bool has(const std::string& key) const { return values_ && values_->contains(key); }

  std::optional<std::string> text(const std::string& key) {
    if (!values_) return std::nullopt;
    const auto it = values_->find(key);
    if (it == values_->end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }
  std::optional<double> number(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_number(*t, where(key));
  }
  std::optional<int> integer(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_int(*t, where(key));
  }
  void mark(const std::string& key) { used_.insert(key); }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    if (!values_) return out;
    for (const auto& [k, v] : *values_) {
      if (!used_.contains(k)) out.push_back("[" + name_ + "] " + k);
    }
    return out;
  }
  const std::map<std::string, std::string>* values() const { return values_; }
  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

 private:
  std::string name_;
  const std::map<std::string, std::string>* values_ = nullptr;
  std::set<std::string> used_;
};

BlochFunction xz_circle(double Jx, double Jz) {
  return {"xz_circle", {{"J_x", Jx}, {"J_z", Jz}}, {{{0.0, 0.0, Jz}, {}}, {{Jx, 0.0, 0.0}, {0.0, Jx, 0.0}}}};
}

double get(const ParamMap& p, const std::string& key, std::optional<double> fallback = std::nullopt) {
  const auto it = p.find(key);
  if (it != p.end()) return it->second;
  if (fallback) return *fallback;
  throw ConfigError("missing protocol parameter '" + key + "'");
}

std::string time_stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

IniDocument IniDocument::parse(std::istream& in, const std::string& source) {
  IniDocument doc;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": malformed section header");
      section = lower(trim(std::string_view(t).substr(1, t.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      doc.sections[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    auto& sec = doc.sections[section];
    if (sec.contains(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    sec[key] = value;
  }
  return doc;
}

IniDocument IniDocument::parse_text(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  return parse(in, source);
}

const std::vector<ProtocolFamily>& protocol_catalog() {
  static const std::vector<ProtocolFamily> catalog = {
      {"ssh_quench", {"J_x"},
       "trivial dimer limit (J_x,0,0) -> flat-band SSH circle J_x(cos k, sin k, 0)",
       "ESC + DQPT + DCN = +-1; four boundary modes of the flat next-nearest-neighbour parent"},
      {"xz_quench", {"J_x", "J_z"},
       "(J_x,0,J_z cos k) -> (J_x cos k, J_x sin k, J_z)",
       "DQPT + DCN = +-1 without ESC (no chiral protection of the parent)"},
      {"alpha_beta", {"alpha", "beta", "J"},
       "constant J(beta,0,alpha) -> Rice-Mele J(cos k, sin k, alpha)",
       "DCN = 0 everywhere; DQPT iff alpha^2 < beta; ESC on a separate region of the (alpha,beta) plane"},
      {"dispersive", {"alpha", "beta", "delta", "J"},
       "constant J(beta,0,alpha) -> dispersive J(delta + cos k, sin k, alpha)",
       "aperiodic parent; full ES degeneracy at crossings survives the dispersion"},
      {"kitaev_quench", {"J", "U", "U_post"},
       "interacting SSH interaction quench U -> U_post at J' = 0, via its Kitaev image "
       "(0, -U/2 sin k, 2J - U/2 cos k); ED and Slater tasks use the fermionic chain",
       "DCN = 1 and DQPT at t = pi/4 + n pi/2 for U > 4J > U_post (periodic); open-chain cat states vanish at pi/2"},
      {"custom", {"pre.family", "post.family", "pre.*", "post.*"},
       "any pair of Bloch families: constant, constant_vector, ssh_circle, rice_mele, dispersive, kitaev, "
       "x_cos_z, interacting_ssh, harmonic (keys c<h><axis>, s<h><axis>, h <= 8)",
       "user defined"},
  };
  return catalog;
}

QuenchProtocol make_protocol(std::string_view family, const ParamMap& p, bool allow_gapless) {
  QuenchProtocol q;
  q.label = std::string(family);
  if (family == "ssh_quench") {
    const double Jx = get(p, "J_x");
    q.pre = BlochFunction::constant_vector({Jx, 0.0, 0.0});
    q.post = BlochFunction::ssh_circle(Jx);
  } else if (family == "xz_quench") {
    const double Jx = get(p, "J_x");
    const double Jz = get(p, "J_z");
    q.pre = BlochFunction::x_cos_z(Jx, Jz);
    q.post = xz_circle(Jx, Jz);
  } else if (family == "alpha_beta") {
    const double J = get(p, "J", 1.0);
    q.pre = BlochFunction::constant(get(p, "beta"), get(p, "alpha"), J);
    q.post = BlochFunction::rice_mele(get(p, "alpha"), J);
  } else if (family == "dispersive") {
    const double J = get(p, "J", 1.0);
    q.pre = BlochFunction::constant(get(p, "beta"), get(p, "alpha"), J);
    q.post = BlochFunction::dispersive(get(p, "delta"), get(p, "alpha"), J);
  } else if (family == "kitaev_quench") {
    const double J = get(p, "J", 1.0);
    q.pre = BlochFunction::kitaev(J, get(p, "U"));
    q.post = BlochFunction::kitaev(J, get(p, "U_post"));
  } else if (family == "custom") {
    throw ConfigError("the custom family is built from pre.family / post.family entries");
  } else {
    throw ConfigError("unknown protocol family '" + std::string(family) + "'");
  }
  if (!allow_gapless) {
    q.pre.require_gapped();
    q.post.require_gapped();
  }
  return q;
}

bool Scenario::has_task(std::string_view t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

std::vector<double> Scenario::times() const { return time_grid(t_max, n_t); }

namespace {

std::vector<std::string> family_keys(const std::string& family) {
  for (const auto& f : protocol_catalog()) {
    if (f.name == family && family != "custom") return f.params;
  }
  return {};
}

void validate(Scenario& s) {
  const std::set<std::string> known(kKnownTasks.begin(), kKnownTasks.end());
  if (s.tasks.empty()) throw ConfigError("[tasks] enabled lists no tasks");
  for (const auto& t : s.tasks) {
    if (!known.contains(t)) throw ConfigError("unknown task '" + t + "'");
  }
  const bool only_scan = s.tasks.size() == 1 && s.tasks.front() == "phase-diagram";
  if (!only_scan && s.family.empty()) throw ConfigError("[protocol] family is required");

  const bool timed = s.has_task("rate") || s.has_task("es") || s.has_task("zak") || s.has_task("parent-spectrum") ||
                     s.has_task("z2") || s.has_task("ed") || s.has_task("slater");
  if (timed) {
    if (!(s.t_max > 0.0)) throw ConfigError("time-resolved tasks require [grid] t_max > 0");
    if (s.n_t < 2) throw ConfigError("time-resolved tasks require [grid] n_t >= 2");
  }
  if (s.n_k < 8) throw ConfigError("[grid] n_k must be at least 8");
  if (s.has_task("es")) {
    if (s.L < 2) throw ConfigError("task 'es' requires [grid] L >= 2");
    if (s.cut < 1 || s.cut >= s.L) throw ConfigError("task 'es' requires 1 <= cut < L");
    if (s.n_lambda < 1) throw ConfigError("[grid] n_lambda must be positive");
  }
  if (s.has_task("parent-spectrum") && s.parent_L < 2) throw ConfigError("[grid] parent_L must be >= 2");
  if (s.has_task("dcn") && (s.dcn_n_k < 1 || s.dcn_n_t < 1)) throw ConfigError("DCN grids must be positive");
  if (s.has_task("ed")) {
    if (!s.interaction) throw ConfigError("task 'ed' requires an [interaction] section");
    const auto& ic = *s.interaction;
    if (ic.L < 2 || ic.L > 12) throw ConfigError("[interaction] L must lie in 2..12");
    if (ic.pre.order() > kMaxHoppingRange || ic.post.order() > kMaxHoppingRange) {
      throw ConfigError("task 'ed' needs protocols with hopping range <= 2");
    }
    if (ic.L < 2 || ic.n_lambda < 1) throw ConfigError("[interaction] n_lambda must be positive");
  }
  if (s.has_task("slater")) {
    if (s.family != "kitaev_quench") throw ConfigError("task 'slater' needs family = kitaev_quench");
    if (get(s.params, "U_post") != 0.0) throw ConfigError("task 'slater' needs U_post = 0");
    if (s.L < 2 || s.L % 2) throw ConfigError("task 'slater' needs an even L >= 2");
  }
  if (s.has_task("phase-diagram")) {
    const auto& c = *s.scan;
    if (!(c.alpha_min > 0.0 && c.beta_min > 0.0 && c.alpha_max >= c.alpha_min && c.beta_max >= c.beta_min)) {
      throw ConfigError("[scan] ranges must be positive and ordered");
    }
    if (c.n_alpha < 1 || c.n_beta < 1 || c.points_per_period < 4 || c.L < 4) {
      throw ConfigError("[scan] grid sizes are too small");
    }
  }
}

}  // namespace

Scenario parse_scenario_text(std::string_view text, bool strict, const std::string& name) {
  Scenario s;
  s.name = name;
  s.source = IniDocument::parse_text(text, name);
  const std::set<std::string> known_sections = {"protocol", "grid", "tasks", "interaction", "output", "scan"};
  for (const auto& [sec, vals] : s.source.sections) {
    if (!known_sections.contains(sec)) {
      const std::string msg = "unknown section [" + sec + "]";
      if (strict) throw ConfigError(msg);
      s.warnings.push_back(msg);
    }
  }

  SectionReader protocol(s.source, "protocol");
  SectionReader grid(s.source, "grid");
  SectionReader tasks(s.source, "tasks");
  SectionReader inter(s.source, "interaction");
  SectionReader output(s.source, "output");
  SectionReader scan(s.source, "scan");

  if (auto t = tasks.text("enabled")) s.tasks = split_list(*t);

  bool allow_gapless = false;
  if (auto v = protocol.text("allow_gapless")) allow_gapless = parse_bool(*v, protocol.where("allow_gapless"));
  if (auto f = protocol.text("family")) s.family = trim(*f);
  if (auto l = protocol.text("label")) s.protocol.label = *l;

  if (s.family == "custom") {
    auto pre_family = protocol.text("pre.family");
    auto post_family = protocol.text("post.family");
    if (!pre_family || !post_family) throw ConfigError("custom protocols need pre.family and post.family");
    ParamMap pre, post;
    for (const auto& [k, v] : *protocol.values()) {
      if (k == "pre.family" || k == "post.family") continue;
      if (k.rfind("pre.", 0) == 0) {
        pre[k.substr(4)] = parse_number(v, protocol.where(k));
        protocol.mark(k);
      } else if (k.rfind("post.", 0) == 0) {
        post[k.substr(5)] = parse_number(v, protocol.where(k));
        protocol.mark(k);
      }
    }
    for (const auto& [k, v] : pre) s.params["pre." + k] = v;
    for (const auto& [k, v] : post) s.params["post." + k] = v;
    s.protocol.pre = BlochFunction::from_family(trim(*pre_family), pre);
    s.protocol.post = BlochFunction::from_family(trim(*post_family), post);
    if (!allow_gapless) {
      try {
        s.protocol.pre.require_gapped();
        s.protocol.post.require_gapped();
      } catch (const GaplessError& e) {
        throw ConfigError(std::string("protocol is gapless: ") + e.what());
      }
    }
    if (s.protocol.label.empty()) s.protocol.label = "custom";
  } else if (!s.family.empty()) {
    const auto keys = family_keys(s.family);
    if (keys.empty()) throw ConfigError("unknown protocol family '" + s.family + "'");
    for (const auto& k : keys) {
      if (auto v = protocol.number(k)) s.params[k] = *v;
    }
    const std::string label = s.protocol.label;
    try {
      s.protocol = make_protocol(s.family, s.params, allow_gapless);
    } catch (const GaplessError& e) {
      throw ConfigError(std::string("protocol is gapless: ") + e.what());
    }
    s.protocol.label = label.empty() ? s.family : label;
  }

  if (auto v = grid.integer("L")) s.L = *v;
  s.cut = s.L / 2;
  if (auto v = grid.text("bc")) s.bc = parse_boundary(*v, grid.where("bc"));
  if (auto v = grid.integer("cut")) s.cut = *v;
  if (auto v = grid.text("t_max")) {
    const std::string t = trim(*v);
    const auto parts = split_list(t);
    if (parts.size() == 2 && (parts[1] == "period" || parts[1] == "periods")) {
      const auto T = parent_period(s.protocol);
      if (!T) throw ConfigError("[grid] t_max in periods needs a flat post-quench band");
      s.t_max = parse_number(parts[0], grid.where("t_max")) * *T;
    } else {
      s.t_max = parse_number(t, grid.where("t_max"));
    }
  }
  if (auto v = grid.integer("n_t")) s.n_t = *v;
  if (auto v = grid.integer("n_k")) s.n_k = *v;
  if (auto v = grid.integer("n_lambda")) s.n_lambda = *v;
  if (auto v = grid.number("tol_esc")) s.tol_esc = *v;
  if (auto v = grid.integer("parent_L")) s.parent_L = *v;
  if (auto v = grid.integer("parent_n_t")) s.parent_n_t = *v;
  if (auto v = grid.integer("dcn_n_k")) s.dcn_n_k = *v;
  if (auto v = grid.integer("dcn_n_t")) s.dcn_n_t = *v;
  if (s.parent_n_t == 0) s.parent_n_t = s.n_t;

  if (inter.present()) {
    InteractionConfig ic;
    if (s.family == "kitaev_quench") {
      if (inter.has("U") || inter.has("U_pre")) {
        throw ConfigError("kitaev_quench takes its interactions from [protocol] U and U_post");
      }
      ic.U_pre = get(s.params, "U");
      ic.U_post = get(s.params, "U_post");
      ic.pre = ic.post = BlochFunction::interacting_ssh(get(s.params, "J", 1.0), 0.0);
    } else {
      if (auto v = inter.number("U")) ic.U_post = *v;
      if (auto v = inter.number("U_pre")) ic.U_pre = *v;
      ic.pre = s.protocol.pre;
      ic.post = s.protocol.post;
    }
    if (auto v = inter.integer("L")) ic.L = *v;
    if (auto v = inter.text("bc")) ic.bc = parse_boundary(*v, inter.where("bc"));
    if (auto v = inter.text("cat")) {
      const std::string c = lower(trim(*v));
      if (c == "plus" || c == "+") {
        ic.cat = 1;
      } else if (c == "minus" || c == "-") {
        ic.cat = -1;
      } else if (c == "none" || c == "no") {
        ic.cat = 0;
      } else {
        throw ConfigError(inter.where("cat") + ": expected plus, minus or none");
      }
    }
    if (auto v = inter.integer("n_lambda")) ic.n_lambda = *v;
    if (auto v = inter.integer("n_t")) ic.n_t = *v;
    if (auto v = inter.number("tol")) ic.tol = *v;
    if (ic.n_t == 0) ic.n_t = s.n_t;
    s.interaction = ic;
  }

  ScanConfig sc;
  if (auto v = protocol.number("J"); v && s.family == "alpha_beta") sc.J = *v;
  if (auto v = scan.number("alpha_min")) sc.alpha_min = *v;
  if (auto v = scan.number("alpha_max")) sc.alpha_max = *v;
  if (auto v = scan.number("beta_min")) sc.beta_min = *v;
  if (auto v = scan.number("beta_max")) sc.beta_max = *v;
  if (auto v = scan.integer("n_alpha")) sc.n_alpha = *v;
  if (auto v = scan.integer("n_beta")) sc.n_beta = *v;
  if (auto v = scan.integer("L")) sc.L = *v;
  if (auto v = scan.integer("points_per_period")) sc.points_per_period = *v;
  if (auto v = scan.integer("n_k")) sc.n_k = *v;
  sc.tol_esc = s.tol_esc;
  if (auto v = scan.number("tol_esc")) sc.tol_esc = *v;
  s.scan = sc;

  if (auto v = output.text("dir")) s.out_dir = *v;

  std::vector<std::string> unused;
  for (const SectionReader* r : {&protocol, &grid, &tasks, &inter, &output, &scan}) {
    const auto u = r->unused();
    unused.insert(unused.end(), u.begin(), u.end());
  }
  for (const auto& u : unused) {
    if (strict) throw ConfigError("unknown key " + u);
    s.warnings.push_back("unknown key " + u);
  }
  validate(s);
  return s;
}

Scenario parse_scenario(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), strict, path.stem().string());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("float formatting failed");
  return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell == "nan" ? std::nan("") : std::stod(cell));
    table.rows.push_back(std::move(row));
  }
  return table;
}

PhaseCell classify_alpha_beta(double alpha, double beta, const ScanConfig& cfg) {
  PhaseCell cell;
  cell.alpha = alpha;
  cell.beta = beta;
  const QuenchProtocol q = make_protocol("alpha_beta", {{"alpha", alpha}, {"beta", beta}, {"J", cfg.J}});
  cell.dqpt = !critical_momenta(q, cfg.n_k).empty();

  const double T = kPi / (cfg.J * std::sqrt(1.0 + alpha * alpha));
  const auto times = time_grid(T, cfg.points_per_period + 1);
  auto spread = [&](double t) {
    const auto es = momentum_entanglement_spectrum(q, cfg.L, cfg.L / 2, t, 1);
    return std::pair{es.relative_spread, es.degeneracy_order(cfg.tol_esc)};
  };
  cell.esc = !detect_esc(spread, times, cfg.tol_esc).empty();

  for (const auto& seg : dcn_analytic(q).segments) cell.dcn_max_abs = std::max(cell.dcn_max_abs, std::abs(seg.analytic));
  return cell;
}

std::vector<PhaseCell> phase_diagram(const ScanConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(cfg.n_alpha) * cfg.n_beta;
  std::vector<PhaseCell> cells(n);
  auto axis = [](double lo, double hi, int count, int i) {
    return count == 1 ? hi : lo + (hi - lo) * i / (count - 1);
  };
  parallel_for(n, [&](std::size_t idx) {
    const int ia = static_cast<int>(idx) / cfg.n_beta;
    const int ib = static_cast<int>(idx) % cfg.n_beta;
    const double a = axis(cfg.alpha_min, cfg.alpha_max, cfg.n_alpha, ia);
    const double b = axis(cfg.beta_min, cfg.beta_max, cfg.n_beta, ib);
    try {
      cells[idx] = classify_alpha_beta(a, b, cfg);
    } catch (const std::exception& e) {
      cells[idx] = PhaseCell{a, b, false, false, std::nan(""), false, e.what()};
    }
  });
  return cells;
}

namespace {

json scenario_echo(const Scenario& s) {
  json j = json::object();
  for (const auto& [sec, vals] : s.source.sections) {
    for (const auto& [k, v] : vals) j[sec][k] = v;
  }
  return j;
}

std::vector<double> padded(std::vector<double> v, int n) {
  v.resize(static_cast<std::size_t>(n), 0.0);
  return v;
}

std::vector<std::string> lambda_header(int n) {
  std::vector<std::string> h{"t"};
  for (int i = 1; i <= n; ++i) h.push_back("lambda_" + std::to_string(i));
  return h;
}

}  // namespace

RunReport run(const Scenario& s, const RunOptions& opts) {
  const auto wall_start = std::chrono::steady_clock::now();
  RunReport rep;
  const std::filesystem::path out = opts.out_dir.value_or(s.out_dir);
  const double tol_esc = opts.tol_esc.value_or(s.tol_esc);
  if (opts.write_files) std::filesystem::create_directories(out);

  json j;
  j["scenario"] = scenario_echo(s);
  j["scenario_name"] = s.name;
  j["warnings"] = s.warnings;
  json tasks_json = json::array();
  json extra = json::object();

  const QuenchProtocol& q = s.protocol;
  std::vector<double> times;
  if (s.t_max > 0.0 && s.n_t >= 2) times = s.times();

  auto run_task = [&](const std::string& name, auto&& body) {
    TaskStatus st{name, true, {}, 0};
    try {
      body();
    } catch (const ConfigError& e) {
      st = {name, false, e.what(), 2};
    } catch (const NumericalError& e) {
      st = {name, false, e.what(), 3};
    } catch (const std::exception& e) {
      st = {name, false, e.what(), 3};
    }
    rep.tasks.push_back(st);
    tasks_json.push_back({{"task", name}, {"status", st.ok ? "ok" : "failed"}, {"message", st.message}});
  };

  for (const auto& task : s.tasks) {
    if (task == "rate") {
      run_task(task, [&] {
        const auto curve = rate_curve(q, times, s.n_k);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < times.size(); ++i) rows.push_back({times[i], curve.values[i]});
        if (opts.write_files) write_csv(out / "rate.csv", {"t", "f"}, rows);
        rep.dqpts = dqpt_times(q, s.t_max, s.n_k);
        extra["rate_grid_points_excluded"] = curve.excluded_points;
      });
    } else if (task == "es") {
      run_task(task, [&] {
        std::vector<std::vector<double>> rows(times.size());
        std::function<EntanglementData(double)> spectrum;
        std::optional<CorrelationEvolver> evolver;
        if (s.bc == Boundary::periodic) {
          spectrum = [&](double t) { return momentum_entanglement_spectrum(q, s.L, s.cut, t, s.n_lambda); };
        } else {
          const auto H0 = build_lattice(q.pre, s.L, Boundary::open);
          evolver.emplace(ground_correlation(H0), build_lattice(q.post, s.L, Boundary::open));
          spectrum = [&](double t) { return entanglement_spectrum(evolver->at(t), s.cut, s.n_lambda); };
        }
        parallel_for(times.size(), [&](std::size_t i) {
          const auto es = spectrum(times[i]);
          std::vector<double> row{times[i]};
          const auto l = padded(es.lambdas, s.n_lambda);
          row.insert(row.end(), l.begin(), l.end());
          rows[i] = std::move(row);
        });
        if (opts.write_files) write_csv(out / "es.csv", lambda_header(s.n_lambda), rows);
        auto spread = [&](double t) {
          const auto es = spectrum(t);
          return std::pair{es.relative_spread, es.degeneracy_order(tol_esc)};
        };
        rep.escs = detect_esc(spread, times, tol_esc);
        json esc = json::array();
        for (const auto& e : rep.escs) {
          json item = {{"t", e.t}, {"degeneracy_order", e.order}, {"relative_spread", e.spread}};
          try {
            const auto series = parent_obc_spectrum(q, s.parent_L, {e.t});
            item["parent_zero_modes"] = series.zero_mode_count(0, 1e-6);
          } catch (const std::exception&) {
            item["parent_zero_modes"] = nullptr;
          }
          try {
            item["zak_phase"] = zak_phase(q, e.t, s.n_k);
          } catch (const std::exception&) {
            item["zak_phase"] = nullptr;
          }
          esc.push_back(item);
        }
        extra["esc"] = esc;
      });
    } else if (task == "dcn") {
      run_task(task, [&] {
        std::vector<double> near;
        fixed_momenta(q, 2048, &near);
        for (double k : near) extra["dcn_near_miss_momenta"].push_back(k);
        rep.dcn = dcn(q, s.dcn_n_k, s.dcn_n_t);
        std::vector<std::vector<double>> rows;
        for (std::size_t m = 0; m < rep.dcn.segments.size(); ++m) {
          const auto& seg = rep.dcn.segments[m];
          rows.push_back({static_cast<double>(m), seg.k_lo, seg.k_hi, seg.numeric, seg.analytic});
        }
        if (opts.write_files) write_csv(out / "dcn.csv", {"segment", "k_lo", "k_hi", "numeric", "analytic"}, rows);
      });
    } else if (task == "zak") {
      run_task(task, [&] {
        const auto z = zak_series(q, times, s.n_k);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < times.size(); ++i) rows.push_back({times[i], z.phases[i]});
        if (opts.write_files) write_csv(out / "zak.csv", {"t", "phase"}, rows);
      });
    } else if (task == "parent-spectrum") {
      run_task(task, [&] {
        const auto pt = time_grid(s.t_max, s.parent_n_t);
        std::vector<ParentSpectrumSeries> parts(pt.size());
        parallel_for(pt.size(), [&](std::size_t i) { parts[i] = parent_obc_spectrum(q, s.parent_L, {pt[i]}); });
        std::vector<std::vector<double>> rows;
        json zero = json::array();
        for (std::size_t i = 0; i < pt.size(); ++i) {
          std::vector<double> row{pt[i]};
          const auto& E = parts[i].energies.front();
          row.insert(row.end(), E.begin(), E.end());
          rows.push_back(std::move(row));
          zero.push_back(parts[i].zero_mode_count(0, 1e-6));
        }
        std::vector<std::string> header{"t"};
        for (int n = 1; n <= 2 * s.parent_L; ++n) header.push_back("E_" + std::to_string(n));
        if (opts.write_files) write_csv(out / "parent.csv", header, rows);
        extra["parent_zero_mode_counts"] = zero;
      });
    } else if (task == "z2") {
      run_task(task, [&] {
        std::vector<std::vector<double>> rows;
        int undefined = 0;
        for (double t : times) {
          double nu = std::nan("");
          try {
            nu = z2_invariant(q, t);
          } catch (const NumericalError&) {
            ++undefined;
          }
          rows.push_back({t, nu});
        }
        if (opts.write_files) write_csv(out / "z2.csv", {"t", "nu"}, rows);
        extra["z2_undefined_points"] = undefined;
      });
    } else if (task == "phase-diagram") {
      run_task(task, [&] {
        rep.phase = phase_diagram(*s.scan);
        std::vector<std::vector<double>> rows;
        int failed = 0;
        for (const auto& c : rep.phase) {
          if (!c.ok) ++failed;
          const double nan = std::nan("");
          rows.push_back({c.alpha, c.beta, c.ok ? double(c.dqpt) : nan, c.ok ? double(c.esc) : nan, c.dcn_max_abs});
        }
        if (opts.write_files) write_csv(out / "phase.csv", {"alpha", "beta", "dqpt", "esc", "dcn_max_abs"}, rows);
        json combos = json::object();
        for (const auto& c : rep.phase) {
          if (!c.ok) continue;
          const std::string key = std::string(c.esc ? "esc" : "no_esc") + "+" + (c.dqpt ? "dqpt" : "no_dqpt");
          combos[key] = combos.value(key, 0) + 1;
        }
        extra["phase_combinations"] = combos;
        extra["phase_failed_cells"] = failed;
        if (failed > 0) {
          rep.tasks.push_back({"phase-diagram-cells", false, std::to_string(failed) + " cells failed", 4});
        }
      });
    } else if (task == "ed") {
      run_task(task, [&] {
        const auto& ic = *s.interaction;
        const auto Hpre = build_hubbard(ic.pre, ic.U_pre, ic.L, ic.bc);
        const auto Hpost = build_hubbard(ic.post, ic.U_post, ic.L, ic.bc);
        const auto g = ground_state(Hpre, ic.cat != 0 ? 2 : 1);
        FockState psi0 = g.states.front();
        if (ic.cat != 0) {
          const auto cats = inversion_eigenstates(g.states);
          psi0 = ic.cat > 0 ? cats.front() : cats.back();
        }
        const StateEvolver evolver(Hpost);
        const auto et = time_grid(s.t_max, ic.n_t);
        std::vector<FockState> states;
        FockState cur = psi0;
        for (std::size_t i = 0; i < et.size(); ++i) {
          if (i > 0) cur = evolver.dense() ? evolver.evolve(psi0, et[i]) : evolver.evolve(cur, et[i] - et[i - 1]);
          states.push_back(cur);
        }
        std::vector<std::vector<double>> rate_rows(et.size()), es_rows(et.size());
        std::vector<double> spread(et.size());
        bool saturated = false;
        const int cut = ic.L / 2;
        for (std::size_t i = 0; i < et.size(); ++i) {
          const auto lr = loschmidt_rate(psi0, states[i], ic.L);
          saturated = saturated || lr.saturated;
          rate_rows[i] = {et[i], lr.rate};
          const auto lam = many_body_es(states[i], cut, std::max(ic.n_lambda, 2));
          std::vector<double> row{et[i]};
          const auto l = padded(lam, ic.n_lambda);
          row.insert(row.end(), l.begin(), l.end());
          es_rows[i] = std::move(row);
          spread[i] = lam.size() > 1 ? (lam[0] - lam[1]) / lam[0] : 1.0;
        }
        if (opts.write_files) {
          write_csv(out / "ed_rate.csv", {"t", "f"}, rate_rows);
          write_csv(out / "ed_es.csv", lambda_header(ic.n_lambda), es_rows);
        }
        // top-pair crossings, refined from the neighbouring grid state
        for (std::size_t i = 1; i + 1 < et.size(); ++i) {
          if (!(spread[i] < spread[i - 1] && spread[i] <= spread[i + 1])) continue;
          if (spread[i] > 0.1) continue;  // shallow dips of a well separated pair
          // a pair degenerate on both neighbours is held together by symmetry, not crossing
          if (std::max(spread[i - 1], spread[i + 1]) < ic.tol) continue;
          auto f = [&](double t) {
            const auto st = evolver.dense() ? evolver.evolve(psi0, t) : evolver.evolve(states[i - 1], t - et[i - 1]);
            const auto lam = many_body_es(st, cut, std::max(ic.n_lambda, 3));
            return std::pair{(lam[0] - lam[1]) / lam[0], static_cast<double>(degenerate_prefix(lam, ic.tol))};
          };
          const auto ev = detect_esc(f, {et[i - 1], et[i], et[i + 1]}, ic.tol);
          rep.ed_crossings.insert(rep.ed_crossings.end(), ev.begin(), ev.end());
        }
        json ed = {{"L", ic.L},
                   {"bc", to_string(ic.bc)},
                   {"U_pre", ic.U_pre},
                   {"U_post", ic.U_post},
                   {"basis_dim", Hpre.basis->dim()},
                   {"ground_multiplet", g.energies},
                   {"rate_saturated", saturated},
                   {"rate_normalization", "per unit cell"},
                   {"sign_convention", FockBasis::sign_convention()}};
        const auto held = std::count_if(spread.begin(), spread.end(), [&](double x) { return x < ic.tol; });
        ed["top_pair_degenerate_fraction"] = static_cast<double>(held) / static_cast<double>(spread.size());
        json cr = json::array();
        for (const auto& e : rep.ed_crossings) cr.push_back({{"t", e.t}, {"relative_gap", e.spread}, {"degenerate_prefix", e.order}});
        ed["top_pair_crossings"] = cr;
        extra["ed"] = ed;
      });
    } else if (task == "slater") {
      run_task(task, [&] {
        const double J = get(s.params, "J", 1.0);
        std::vector<std::vector<double>> rows(times.size());
        parallel_for(times.size(), [&](std::size_t i) {
          const cplx p = cat_overlap(s.L, s.bc, +1, times[i], J);
          const cplx m = cat_overlap(s.L, s.bc, -1, times[i], J);
          rows[i] = {times[i], p.real(), p.imag(), m.real(), m.imag()};
        });
        if (opts.write_files) write_csv(out / "slater.csv", {"t", "re_plus", "im_plus", "re_minus", "im_minus"}, rows);
        const cplx p = cat_overlap(s.L, s.bc, +1, kPi / 2.0, J);
        const cplx m = cat_overlap(s.L, s.bc, -1, kPi / 2.0, J);
        extra["slater_at_half_pi"] = {{"plus", {p.real(), p.imag()}}, {"minus", {m.real(), m.imag()}}};
      });
    }
  }

  // flags comparable with a phase-diagram cell
  if (s.family == "alpha_beta" || s.family == "dispersive") {
    try {
      extra["flags"] = {{"dqpt", !critical_momenta(q, s.n_k).empty()}, {"esc", !rep.escs.empty()}};
    } catch (const std::exception&) {
    }
  }

  json dq = json::array();
  for (const auto& d : rep.dqpts) dq.push_back({{"k", d.k_star}, {"t", d.t_star}});
  json dc = json::array();
  for (const auto& seg : rep.dcn.segments) {
    dc.push_back({{"k_lo", seg.k_lo}, {"k_hi", seg.k_hi}, {"numeric", seg.numeric}, {"analytic", seg.analytic}});
  }
  json fm = json::array();
  for (const auto& f : rep.dcn.fixed) fm.push_back({{"k", f.k}, {"parallel", f.parallel}});

  for (const auto& st : rep.tasks) rep.exit_code = std::max(rep.exit_code, st.ok ? 0 : st.exit_code);
  // config errors outrank numerical failures, which outrank partial scans
  {
    bool cfg = false, num = false, part = false;
    for (const auto& st : rep.tasks) {
      cfg = cfg || st.exit_code == 2;
      num = num || st.exit_code == 3;
      part = part || st.exit_code == 4;
    }
    rep.exit_code = cfg ? 2 : num ? 3 : part ? 4 : 0;
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  j["tasks"] = tasks_json;
  j["dqpt_times"] = dq;
  j["dcn_segments"] = dc;
  j["fixed_momenta"] = fm;
  j["results"] = extra;
  j["exit_code"] = rep.exit_code;
  j["metadata"] = {{"generated_at", time_stamp()},
                   {"wall_clock_seconds", wall},
                   {"threads", thread_count()},
                   {"L", s.L},
                   {"bc", to_string(s.bc)},
                   {"cut", s.cut},
                   {"n_k", s.n_k},
                   {"t_max", s.t_max},
                   {"n_t", s.n_t},
                   {"time_step", s.n_t > 1 ? s.t_max / (s.n_t - 1) : 0.0},
                   {"tol_esc", tol_esc},
                   {"parent_L", s.parent_L},
                   {"dcn_grid", {s.dcn_n_k, s.dcn_n_t}},
                   {"dqpt_time_convention", "t* = (2n+1) pi / (2 |d'(k*)|)"},
                   {"rate_normalization", "per unit cell"},
                   {"correlation_convention", "P(i,j) = <c^dag_j c_i>, flattened parent Q = I - 2P"}};
  rep.json = j.dump(2);
  if (opts.write_files) {
    std::ofstream f(out / "report.json");
    f << rep.json << '\n';
  }
  return rep;
}

}  // namespace quenchsig
