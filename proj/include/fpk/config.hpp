#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpk/error.hpp"
#include "fpk/fredholm.hpp"
#include "fpk/report.hpp"
#include "fpk/space.hpp"

namespace fpk {

enum class Command { Check, Solve, Vi, Kkm, Selftest };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Check: return "check";
    case Command::Solve: return "solve";
    case Command::Vi: return "vi";
    case Command::Kkm: return "kkm";
    case Command::Selftest: return "selftest";
  }
  return "unknown";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Sections of `key = value` lines; `#` and `;` start comments.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }
  std::string get(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end() || !s->second.count(key))
      throw ConfigError("missing required key '" + key + "' in section [" +
                        section + "]");
    return s->second.at(key);
  }
};

inline IniFile parse_ini(std::istream& in) {
  IniFile ini;
  std::string current;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unterminated section header");
      current = detail::trim(line.substr(1, line.size() - 2));
      if (current.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      ini.sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    if (current.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ": key outside of any [section]");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    ini.sections[current][key] = value;
  }
  return ini;
}

inline IniFile parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_ini(in);
}

namespace detail {

inline double parse_finite(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
    throw ConfigError(where + ": expected a finite real, got '" + raw + "'");
  return v;
}

inline std::size_t parse_count(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError(where + ": expected a non-negative integer, got '" + raw + "'");
  return v;
}

/// One real per line; blank lines and # comments are skipped.
inline std::vector<double> read_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open value file '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find('#');
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;
    out.push_back(parse_finite(line, path + ":" + std::to_string(lineno)));
  }
  return out;
}

}  // namespace detail

/// Everything a single run needs, resolved from the config file plus flags.
struct RunConfig {
  Command command = Command::Check;

  // [problem]
  double a = 0.0;
  double b = 1.0;
  double lambda = 0.0;
  std::optional<std::string> kernel_expr;
  std::optional<std::string> kernel_file;  // n*n reals, row-major
  std::optional<std::string> f_expr;
  std::optional<std::string> f_file;       // n reals

  // [grid]
  QuadRule rule = QuadRule::GaussLegendre;
  std::size_t n = 64;

  // [solver]
  SolveMethod method = SolveMethod::Auto;
  double alpha = 0.5;
  double tol = 1e-10;
  std::size_t max_iters = 10000;
  std::optional<double> radius;

  // [vi]
  std::string vi_scenario;   // identity-ball | constant-box | rotation-ball
  double vi_angle = M_PI / 2.0;

  // [kkm]
  std::string kkm_scenario;  // canonical | threshold | rotation-p
  // 30 divides evenly for 2-, 3-, and 5-point anchor sets, so canonical
  // barycenter witnesses land exactly on the scan grid.
  std::size_t kkm_m = 30;
  double kkm_tol = 1e-9;
  double kkm_threshold = 0.99;
  double kkm_angle = M_PI / 2.0;

  // [output] and flags
  std::string output_path;   // empty: stdout
  ReportFormat format = ReportFormat::Table;
  std::uint64_t seed = 0;
  bool override_conditions = false;
};

namespace detail {

inline void reject_unknown_keys(const IniFile& ini, const std::string& section,
                                const std::vector<std::string>& known) {
  const auto s = ini.sections.find(section);
  if (s == ini.sections.end()) return;
  for (const auto& [key, value] : s->second) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok)
      throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
}

}  // namespace detail

/// Resolve the config file for one command. Unknown sections or keys are
/// rejected outright: a typo must not silently fall back to a default.
inline RunConfig load_run_config(Command command, const IniFile& ini) {
  RunConfig cfg;
  cfg.command = command;

  for (const auto& [name, kv] : ini.sections)
    if (name != "problem" && name != "grid" && name != "solver" &&
        name != "output" && name != "vi" && name != "kkm")
      throw ConfigError("unknown section [" + name + "]");
  detail::reject_unknown_keys(ini, "problem", {"a", "b", "lambda", "kernel",
                                               "kernel_file", "f", "f_file"});
  detail::reject_unknown_keys(ini, "grid", {"rule", "n"});
  detail::reject_unknown_keys(
      ini, "solver", {"method", "alpha", "tol", "max_iters", "radius"});
  detail::reject_unknown_keys(ini, "output", {"path", "format"});
  detail::reject_unknown_keys(ini, "vi", {"scenario", "angle"});
  detail::reject_unknown_keys(ini, "kkm",
                              {"scenario", "m", "tol", "threshold", "angle"});

  if (command == Command::Check || command == Command::Solve) {
    cfg.a = detail::parse_finite(ini.get("problem", "a"), "problem.a");
    cfg.b = detail::parse_finite(ini.get("problem", "b"), "problem.b");
    cfg.lambda = detail::parse_finite(ini.get("problem", "lambda"), "problem.lambda");
    if (ini.has("problem", "kernel")) cfg.kernel_expr = ini.get("problem", "kernel");
    if (ini.has("problem", "kernel_file"))
      cfg.kernel_file = ini.get("problem", "kernel_file");
    if (!cfg.kernel_expr == !cfg.kernel_file)
      throw ConfigError("exactly one of problem.kernel / problem.kernel_file required");
    if (ini.has("problem", "f")) cfg.f_expr = ini.get("problem", "f");
    if (ini.has("problem", "f_file")) cfg.f_file = ini.get("problem", "f_file");
    if (!cfg.f_expr == !cfg.f_file)
      throw ConfigError("exactly one of problem.f / problem.f_file required");
  }

  if (ini.has("grid", "rule")) {
    const std::string r = ini.get("grid", "rule");
    if (r == "gauss-legendre") cfg.rule = QuadRule::GaussLegendre;
    else if (r == "trapezoid") cfg.rule = QuadRule::Trapezoid;
    else throw ConfigError("grid.rule must be 'gauss-legendre' or 'trapezoid'");
  }
  if (ini.has("grid", "n")) cfg.n = detail::parse_count(ini.get("grid", "n"), "grid.n");

  if (ini.has("solver", "method")) {
    const std::string m = ini.get("solver", "method");
    if (m == "auto") cfg.method = SolveMethod::Auto;
    else if (m == "picard") cfg.method = SolveMethod::Picard;
    else if (m == "km") cfg.method = SolveMethod::KM;
    else throw ConfigError("solver.method must be 'auto', 'picard' or 'km'");
  }
  if (ini.has("solver", "alpha"))
    cfg.alpha = detail::parse_finite(ini.get("solver", "alpha"), "solver.alpha");
  if (ini.has("solver", "tol"))
    cfg.tol = detail::parse_finite(ini.get("solver", "tol"), "solver.tol");
  if (ini.has("solver", "max_iters"))
    cfg.max_iters = detail::parse_count(ini.get("solver", "max_iters"),
                                        "solver.max_iters");
  if (ini.has("solver", "radius"))
    cfg.radius = detail::parse_finite(ini.get("solver", "radius"), "solver.radius");

  if (command == Command::Vi) {
    cfg.vi_scenario = ini.get("vi", "scenario");
    if (ini.has("vi", "angle"))
      cfg.vi_angle = detail::parse_finite(ini.get("vi", "angle"), "vi.angle");
  }
  if (command == Command::Kkm) {
    cfg.kkm_scenario = ini.get("kkm", "scenario");
    if (ini.has("kkm", "m"))
      cfg.kkm_m = detail::parse_count(ini.get("kkm", "m"), "kkm.m");
    if (ini.has("kkm", "tol"))
      cfg.kkm_tol = detail::parse_finite(ini.get("kkm", "tol"), "kkm.tol");
    if (ini.has("kkm", "threshold"))
      cfg.kkm_threshold =
          detail::parse_finite(ini.get("kkm", "threshold"), "kkm.threshold");
    if (ini.has("kkm", "angle"))
      cfg.kkm_angle = detail::parse_finite(ini.get("kkm", "angle"), "kkm.angle");
  }

  if (ini.has("output", "path")) cfg.output_path = ini.get("output", "path");
  if (ini.has("output", "format"))
    cfg.format = parse_report_format(ini.get("output", "format"));
  return cfg;
}

/// Assemble the discretized problem named by a check/solve config.
inline IntegralProblem build_problem(const RunConfig& cfg) {
  QuadratureGrid grid = make_grid(cfg.a, cfg.b, cfg.n, cfg.rule);

  Kernel kernel = [&] {
    if (cfg.kernel_expr) return Kernel::expression(*cfg.kernel_expr);
    const auto vals = detail::read_value_file(*cfg.kernel_file);
    if (vals.size() != cfg.n * cfg.n)
      throw ConfigError("kernel_file: expected " + std::to_string(cfg.n * cfg.n) +
                        " values (n*n, row-major), got " +
                        std::to_string(vals.size()));
    Eigen::MatrixXd m(static_cast<Eigen::Index>(cfg.n),
                      static_cast<Eigen::Index>(cfg.n));
    for (std::size_t i = 0; i < cfg.n; ++i)
      for (std::size_t j = 0; j < cfg.n; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            vals[i * cfg.n + j];
    return Kernel::grid_samples(std::move(m));
  }();

  SourceTerm f = [&] {
    if (cfg.f_expr) return SourceTerm::expression(*cfg.f_expr);
    auto vals = detail::read_value_file(*cfg.f_file);
    if (vals.size() != cfg.n)
      throw ConfigError("f_file: expected " + std::to_string(cfg.n) +
                        " values (one per node), got " + std::to_string(vals.size()));
    return SourceTerm::node_values(std::move(vals));
  }();

  return make_integral_problem(cfg.a, cfg.b, cfg.lambda, std::move(kernel),
                               std::move(f), std::move(grid));
}

}  // namespace fpk
