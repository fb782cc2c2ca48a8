#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quenchsig/scenario.hpp"

using namespace quenchsig;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("quenchsig_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

const char* kSsh = R"(
[protocol]
family = ssh_quench
J_x = 1

[grid]
L = 1000
t_max = 5
n_t = 401

[tasks]
enabled = rate, es
)";

}  // namespace

TEST_SUITE("scenario_cli") {
  TEST_CASE("INI parsing") {
    const auto doc = IniDocument::parse_text("# c\n[A]\nx = 1 ; trailing\n\n[b]\ny=two words\n");
    CHECK(doc.sections.at("a").at("x") == "1");
    CHECK(doc.sections.at("b").at("y") == "two words");
    CHECK_THROWS_AS(IniDocument::parse_text("x = 1\n"), ConfigError);
    CHECK_THROWS_AS(IniDocument::parse_text("[a]\nnovalue\n"), ConfigError);
    CHECK_THROWS_AS(IniDocument::parse_text("[a]\nx=1\nx=2\n"), ConfigError);
    CHECK_THROWS_AS(IniDocument::parse_text("[a\n"), ConfigError);
  }

  TEST_CASE("flat-band SSH scenario") {
    const auto s = parse_scenario_text(kSsh);
    CHECK(s.family == "ssh_quench");
    CHECK(s.params.at("J_x") == 1.0);
    CHECK(s.L == 1000);
    CHECK(s.cut == 500);
    CHECK(s.bc == Boundary::periodic);
    CHECK(s.tasks == std::vector<std::string>{"rate", "es"});
    CHECK((s.protocol.post(0.3) - BlochFunction::ssh_circle(1)(0.3)).norm() < 1e-15);
  }

  TEST_CASE("alpha-beta scenario with periods") {
    const auto s = parse_scenario_text(R"(
[protocol]
family = alpha_beta
alpha = 0.5
beta = 0.5
J = 1
[grid]
L = 200
t_max = 2 periods
n_t = 801
[tasks]
enabled = es, rate, parent-spectrum, zak
)");
    CHECK(s.t_max == doctest::Approx(2 * kPi / std::sqrt(1.25)));
    CHECK(s.parent_n_t == 801);
    CHECK(s.has_task("zak"));
    CHECK_FALSE(s.has_task("dcn"));
  }

  TEST_CASE("validation errors") {
    CHECK_THROWS_AS(parse_scenario_text("[protocol]\nfamily = ssh_quench\nJ_x = 1\n[tasks]\nenabled =\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_text("[protocol]\nfamily = ssh_quench\nJ_x = 1\n[tasks]\nenabled = dcn, bogus\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenario_text("[protocol]\nfamily = nope\n[tasks]\nenabled = dcn\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_text("[protocol]\nfamily = ssh_quench\nJ_x = 1x\n[tasks]\nenabled = dcn\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenario_text("[protocol]\nfamily = ssh_quench\n[tasks]\nenabled = dcn\n"), ConfigError);
    // time-resolved task without a time grid
    CHECK_THROWS_AS(parse_scenario_text("[protocol]\nfamily = ssh_quench\nJ_x = 1\n[tasks]\nenabled = rate\n"),
                    ConfigError);
    // ed without an interaction block
    CHECK_THROWS_AS(parse_scenario_text(
                        "[protocol]\nfamily = alpha_beta\nalpha=0.5\nbeta=0.5\n[grid]\nt_max=1\nn_t=3\n[tasks]\nenabled = ed\n"),
                    ConfigError);
    // gapless protocols need an explicit flag
    const char* gapless = "[protocol]\nfamily = kitaev_quench\nU = 4\nU_post = 0\n%s[tasks]\nenabled = dcn\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, gapless, "");
    CHECK_THROWS_AS(parse_scenario_text(buf), ConfigError);
    std::snprintf(buf, sizeof buf, gapless, "allow_gapless = true\n");
    CHECK_NOTHROW(parse_scenario_text(buf));
  }

  TEST_CASE("strict and lax unknown keys") {
    const std::string text = std::string(kSsh) + "\n[output]\ndir = x\ncolour = blue\n";
    CHECK_THROWS_AS(parse_scenario_text(text, true), ConfigError);
    const auto s = parse_scenario_text(text, false);
    REQUIRE(s.warnings.size() == 1);
    CHECK(s.warnings[0].find("colour") != std::string::npos);
    CHECK(s.out_dir == "x");
  }

  TEST_CASE("custom protocol") {
    const auto s = parse_scenario_text(R"(
[protocol]
family = custom
pre.family = constant
pre.beta = 0.5
pre.alpha = 0.5
post.family = harmonic
post.c0z = 0.5
post.c1x = 1
post.s1y = 1
[tasks]
enabled = dcn
)");
    CHECK((s.protocol.post(1.2) - BlochFunction::rice_mele(0.5)(1.2)).norm() < 1e-15);
    CHECK((s.protocol.pre(1.2) - BlochFunction::constant(0.5, 0.5)(1.2)).norm() < 1e-15);
  }

  TEST_CASE("run writes the CSV schemas and a report") {
    const fs::path out = scratch("run");
    auto s = parse_scenario_text(R"(
[protocol]
family = ssh_quench
J_x = 1
[grid]
L = 40
t_max = 2
n_t = 21
n_k = 256
parent_L = 20
dcn_n_k = 64
dcn_n_t = 64
n_lambda = 4
[tasks]
enabled = rate, es, dcn, zak, parent-spectrum, z2
)");
    RunOptions opts;
    opts.out_dir = out;
    const auto rep = run(s, opts);
    CHECK(rep.exit_code == 0);
    CHECK(first_line(out / "rate.csv") == "t,f");
    CHECK(first_line(out / "es.csv") == "t,lambda_1,lambda_2,lambda_3,lambda_4");
    CHECK(first_line(out / "dcn.csv") == "segment,k_lo,k_hi,numeric,analytic");
    CHECK(first_line(out / "zak.csv") == "t,phase");
    CHECK(first_line(out / "z2.csv") == "t,nu");
    const auto parent = read_csv(out / "parent.csv");
    CHECK(parent.header.size() == 41);
    CHECK(parent.header.back() == "E_40");
    CHECK(parent.rows.size() == 21);
    CHECK(fs::exists(out / "report.json"));
    CHECK(rep.json.find("\"metadata\"") != std::string::npos);
    CHECK(rep.dqpts.size() == 2);
    REQUIRE(rep.escs.size() == 1);
    CHECK(rep.escs[0].t == doctest::Approx(kPi / 2).epsilon(1e-6));
    CHECK(rep.escs[0].order == 16.0);

    // bodies are byte-identical across runs
    const std::string first = slurp(out / "rate.csv") + slurp(out / "es.csv") + slurp(out / "dcn.csv");
    run(s, opts);
    CHECK(first == slurp(out / "rate.csv") + slurp(out / "es.csv") + slurp(out / "dcn.csv"));
    fs::remove_all(out);
  }

  TEST_CASE("pre = post gives flat outputs and no detections") {
    const fs::path out = scratch("trivial");
    auto s = parse_scenario_text(R"(
[protocol]
family = custom
pre.family = rice_mele
pre.alpha = 0.3
post.family = rice_mele
post.alpha = 0.3
[grid]
L = 40
t_max = 4
n_t = 41
[tasks]
enabled = rate, es, dcn
)");
    RunOptions opts;
    opts.out_dir = out;
    const auto rep = run(s, opts);
    CHECK(rep.exit_code == 0);
    CHECK(rep.dqpts.empty());
    CHECK(rep.escs.empty());
    for (const auto& seg : rep.dcn.segments) CHECK(std::abs(seg.analytic) < 1e-12);
    for (const auto& row : read_csv(out / "rate.csv").rows) CHECK(std::abs(row[1]) < 1e-14);
    fs::remove_all(out);
  }

  TEST_CASE("numerical failures map to exit code 3") {
    auto s = parse_scenario_text(R"(
[protocol]
family = dispersive
alpha = 0.5
beta = 0.5
delta = 0.2
[grid]
t_max = 2
n_t = 3
parent_L = 10
[tasks]
enabled = parent-spectrum
)");
    RunOptions opts;
    opts.write_files = false;
    const auto rep = run(s, opts);
    CHECK(rep.exit_code == 3);
    CHECK_FALSE(rep.tasks.front().ok);
  }

  TEST_CASE("scan cell equals a single run at the same parameters") {
    ScanConfig cfg;
    cfg.L = 64;
    cfg.points_per_period = 200;
    for (auto [a, b] : {std::pair{0.5, 0.5}, {1.2, 0.5}, {0.3, 1.2}}) {
      const auto cell = classify_alpha_beta(a, b, cfg);
      std::ostringstream text;
      text << "[protocol]\nfamily = alpha_beta\nalpha = " << a << "\nbeta = " << b
           << "\n[grid]\nL = 64\nt_max = 1 period\nn_t = 201\n[tasks]\nenabled = es\n";
      RunOptions opts;
      opts.write_files = false;
      const auto rep = run(parse_scenario_text(text.str()), opts);
      CHECK(cell.esc == !rep.escs.empty());
      CHECK(cell.dqpt == (a * a < b));
      CHECK(cell.dcn_max_abs < 1e-12);
    }
    CHECK(classify_alpha_beta(0.5, 0.5, cfg).esc);
    CHECK(classify_alpha_beta(0.5, 0.5, cfg).dqpt);
    CHECK_FALSE(classify_alpha_beta(1.2, 0.5, cfg).dqpt);
  }

  TEST_CASE("phase diagram marks failed cells and continues") {
    ScanConfig cfg;
    cfg.n_alpha = 2;
    cfg.n_beta = 2;
    cfg.L = 32;
    cfg.points_per_period = 40;
    const auto cells = phase_diagram(cfg);
    CHECK(cells.size() == 4);
    for (const auto& c : cells) CHECK(c.ok);
    cfg.J = 0.0;  // every cell is gapless
    for (const auto& c : phase_diagram(cfg)) CHECK_FALSE(c.ok);
  }

  TEST_CASE("number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(std::nan("")) == "nan");
  }

  TEST_CASE("catalog") {
    const auto& cat = protocol_catalog();
    CHECK(cat.size() >= 5);
    for (const auto& f : cat) {
      if (f.name == "custom") continue;
      ParamMap p;
      for (const auto& k : f.params) p[k] = 0.5;
      if (f.name == "kitaev_quench") p = {{"J", 1}, {"U", 10}, {"U_post", 0}};
      CHECK_NOTHROW(make_protocol(f.name, p));
    }
  }
}
