#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quenchsig/bloch.hpp"
#include "quenchsig/free_fermion.hpp"
#include "quenchsig/indicators.hpp"

namespace quenchsig {

/// key = value lines grouped under [section] headers; '#' and ';' start comments.
struct IniDocument {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniDocument parse(std::istream& in, const std::string& source = "<input>");
  static IniDocument parse_text(std::string_view text, const std::string& source = "<input>");
};

/// Named protocol families understood by scenario files.
struct ProtocolFamily {
  std::string name;
  std::vector<std::string> params;
  std::string description;
  std::string signatures;
};

const std::vector<ProtocolFamily>& protocol_catalog();

/// Builds a protocol from a family name. The "custom" family takes
/// pre.family / post.family plus prefixed parameters (pre.beta, post.c1x, ...).
QuenchProtocol make_protocol(std::string_view family, const ParamMap& params, bool allow_gapless = false);

inline const std::vector<std::string> kKnownTasks = {"rate", "es",           "dcn", "zak", "parent-spectrum",
                                                     "z2",   "phase-diagram", "ed",  "slater"};

struct ScanConfig {
  double alpha_min = 1.5 / 16.0;
  double alpha_max = 1.5;
  double beta_min = 1.5 / 16.0;
  double beta_max = 1.5;
  int n_alpha = 16;
  int n_beta = 16;
  double J = 1.0;
  int L = 128;
  int points_per_period = 400;
  int n_k = 1024;
  double tol_esc = 1e-6;
};

struct InteractionConfig {
  double U_pre = 0.0;
  double U_post = 0.0;
  int L = 8;
  Boundary bc = Boundary::open;
  /// 0 plain ground state, +1 / -1 inversion-even / odd combination of the
  /// ground doublet.
  int cat = 0;
  int n_lambda = 4;
  int n_t = 0;
  double tol = 5e-3;
  BlochFunction pre;
  BlochFunction post;
};

struct Scenario {
  std::string name;
  std::string family;
  ParamMap params;
  QuenchProtocol protocol;

  int L = 1000;
  Boundary bc = Boundary::periodic;
  int cut = 500;
  double t_max = 0.0;
  int n_t = 0;
  int n_k = 1024;
  int n_lambda = 16;
  double tol_esc = 1e-6;
  int parent_L = 200;
  int parent_n_t = 0;
  int dcn_n_k = 512;
  int dcn_n_t = 512;

  std::vector<std::string> tasks;
  std::optional<InteractionConfig> interaction;
  std::optional<ScanConfig> scan;
  std::filesystem::path out_dir = "out";

  IniDocument source;
  std::vector<std::string> warnings;

  bool has_task(std::string_view t) const;
  std::vector<double> times() const;
};

/// Validates every task's parameters before anything runs. Unknown keys
/// throw ConfigError when strict, otherwise they are collected as warnings.
Scenario parse_scenario(const std::filesystem::path& path, bool strict = true);
Scenario parse_scenario_text(std::string_view text, bool strict = true, const std::string& name = "scenario");

struct PhaseCell {
  double alpha = 0.0;
  double beta = 0.0;
  bool dqpt = false;
  bool esc = false;
  double dcn_max_abs = 0.0;
  bool ok = true;
  std::string error;
};

/// DQPT / ESC / DCN classification of one constant -> Rice-Mele quench.
PhaseCell classify_alpha_beta(double alpha, double beta, const ScanConfig& cfg);

std::vector<PhaseCell> phase_diagram(const ScanConfig& cfg);

struct TaskStatus {
  std::string task;
  bool ok = true;
  std::string message;
  int exit_code = 0;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<double> tol_esc;
  bool write_files = true;
};

struct RunReport {
  std::vector<TaskStatus> tasks;
  std::vector<DqptEvent> dqpts;
  std::vector<EscEvent> escs;
  std::vector<EscEvent> ed_crossings;
  DcnResult dcn;
  std::vector<PhaseCell> phase;
  std::string json;  // rendered report.json
  int exit_code = 0;
};

RunReport run(const Scenario& scenario, const RunOptions& opts = {});

/// Shortest round-trip text for CSVs: 17 significant digits.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace quenchsig
