#include <CLI11.hpp>
#include <cstdint>
#include <iomanip>
#include <iostream>

#include "quenchsig/parallel.hpp"
#include "quenchsig/scenario.hpp"
#include "quenchsig/selftest.hpp"

using namespace quenchsig;

namespace {

int execute(const std::string& cfg, bool strict, const RunOptions& opts, bool scan_only) {
  Scenario s;
  try {
    s = parse_scenario(cfg, strict);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  if (scan_only) {
    if (!s.scan) s.scan = ScanConfig{};
    s.tasks = {"phase-diagram"};
  }
  const RunReport rep = run(s, opts);
  for (const auto& t : rep.tasks) {
    std::cout << std::left << std::setw(18) << t.task << (t.ok ? "ok" : "FAILED");
    if (!t.ok) std::cout << "  " << t.message;
    std::cout << '\n';
  }
  for (const auto& d : rep.dqpts) std::cout << "dqpt  t=" << format_double(d.t_star) << " k=" << format_double(d.k_star) << '\n';
  for (const auto& e : rep.escs) std::cout << "esc   t=" << format_double(e.t) << " order=" << e.order << '\n';
  for (const auto& seg : rep.dcn.segments) {
    std::cout << "dcn   [" << format_double(seg.k_lo) << ", " << format_double(seg.k_hi)
              << "] numeric=" << format_double(seg.numeric) << " analytic=" << format_double(seg.analytic) << '\n';
  }
  for (const auto& e : rep.ed_crossings) std::cout << "ed    t=" << format_double(e.t) << " prefix=" << e.order << '\n';
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quench dynamics and topology diagnostics of two-band chains"};
  app.fallthrough();
  app.require_subcommand(1);

  int threads = 0;
  std::string out;
  bool strict = false;
  double tol_esc = 0.0;
  std::uint64_t seed = 20240607;
  app.add_option("--threads", threads, "worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out, "output directory (overrides [output] dir)");
  app.add_flag("--strict", strict, "treat unknown configuration keys as errors");
  app.add_option("--tol-esc", tol_esc, "relative spread below which the spectrum counts as degenerate")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed of the randomized selftest draws");

  std::string cfg;
  auto* run_cmd = app.add_subcommand("run", "run every task of a scenario file");
  run_cmd->add_option("cfg", cfg, "scenario file")->required()->check(CLI::ExistingFile);
  auto* scan_cmd = app.add_subcommand("scan", "run the (alpha, beta) phase-diagram scan of a scenario file");
  scan_cmd->add_option("cfg", cfg, "scenario file")->required()->check(CLI::ExistingFile);
  auto* catalog_cmd = app.add_subcommand("catalog", "list the built-in protocol families");
  auto* self_cmd = app.add_subcommand("selftest", "oracle-equivalence checks");
  int draws = 4;
  self_cmd->add_option("--draws", draws, "random protocols per check")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  RunOptions opts;
  if (!out.empty()) opts.out_dir = out;
  if (tol_esc > 0.0) opts.tol_esc = tol_esc;

  try {
    if (*run_cmd) return execute(cfg, strict, opts, false);
    if (*scan_cmd) return execute(cfg, strict, opts, true);
    if (*catalog_cmd) {
      for (const auto& f : protocol_catalog()) {
        std::cout << f.name << "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) std::cout << (i ? ", " : "") << f.params[i];
        std::cout << ")\n  " << f.description << "\n  expected: " << f.signatures << "\n";
      }
      return 0;
    }
    if (*self_cmd) {
      std::cout << "seed " << seed << '\n';
      bool ok = true;
      for (const auto& c : run_selftest(seed, draws)) {
        ok = ok && c.passed();
        std::cout << (c.passed() ? "PASS " : "FAIL ") << std::left << std::setw(24) << c.name
                  << " max_error=" << format_double(c.max_error) << " tol=" << format_double(c.tol) << '\n';
      }
      return ok ? 0 : 3;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
