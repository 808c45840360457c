#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fpk/config.hpp"
#include "fpk/convex.hpp"
#include "fpk/error.hpp"
#include "fpk/fixpoint.hpp"
#include "fpk/fredholm.hpp"
#include "fpk/kkm.hpp"
#include "fpk/operators.hpp"
#include "fpk/report.hpp"
#include "fpk/selftest.hpp"
#include "fpk/space.hpp"
#include "fpk/vi.hpp"

namespace fpk {
namespace cli_detail {

inline void emit(const Report& report, const RunConfig& cfg) {
  const std::string text = report.render(cfg.format);
  if (cfg.output_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + cfg.output_path + "'");
  out << text;
}

inline void add_problem_echo(Report& r, const RunConfig& cfg) {
  r.add("problem.a", cfg.a);
  r.add("problem.b", cfg.b);
  r.add("problem.lambda", cfg.lambda);
  r.add("problem.kernel", cfg.kernel_expr ? *cfg.kernel_expr
                                          : "file:" + *cfg.kernel_file);
  r.add("problem.f", cfg.f_expr ? *cfg.f_expr : "file:" + *cfg.f_file);
  r.add("grid.rule", to_string(cfg.rule));
  r.add("grid.n", cfg.n);
}

inline void add_conditions(Report& r, const ConditionReport& c) {
  r.add("conditions.gamma", c.gamma);
  r.add("conditions.kernel_l2", c.kernel_l2);
  r.add("conditions.f_norm", c.f_norm);
  r.add("conditions.f_zero", c.f_zero);
  r.add("conditions.banach_product", c.banach_product);
  r.add("conditions.banach_ok", c.banach_ok);
  r.add("conditions.banach_marginal", c.banach_marginal);
  r.add("conditions.l2_product", c.l2_product);
  r.add("conditions.l2_ok", c.l2_ok);
  if (c.r_min) r.add("conditions.r_min", *c.r_min);
}

inline IterationConfig iteration_config(const RunConfig& cfg) {
  IterationConfig icfg;
  icfg.alpha = cfg.alpha;
  icfg.tol_residual = cfg.tol;
  icfg.max_iters = cfg.max_iters;
  return icfg;
}

inline int cmd_check(const RunConfig& cfg) {
  auto p = build_problem(cfg);
  auto cond = check_conditions(p);
  Report r;
  r.add("command", "check");
  add_problem_echo(r, cfg);
  add_conditions(r, cond);
  const bool any = cond.banach_ok || cond.l2_ok;
  r.add("result.solvable", any);
  emit(r, cfg);
  return any ? 0 : 2;
}

inline int cmd_solve(const RunConfig& cfg) {
  auto p = build_problem(cfg);
  FredholmSolveOptions opts;
  opts.method = cfg.method;
  opts.radius = cfg.radius;
  opts.override_conditions = cfg.override_conditions;
  auto sol = solve_fredholm(p, opts, iteration_config(cfg));

  Report r;
  r.add("command", "solve");
  add_problem_echo(r, cfg);
  add_conditions(r, sol.conditions);
  r.add("solve.method", to_string(sol.method_used));
  r.add("solve.status", to_string(sol.report.status));
  r.add("solve.iterations", sol.report.iterations);
  r.add("solve.final_residual", sol.report.final_residual);
  if (sol.report.error_bound) r.add("solve.error_bound", *sol.report.error_bound);
  r.add("solve.overridden", sol.overridden);
  r.add("solution.norm", norm(sol.u));
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    const std::string idx = std::to_string(i);
    r.add("solution.node." + idx, p.grid.nodes[i]);
    r.add("solution.value." + idx, sol.u.coords[i]);
  }
  for (std::size_t i = 0; i < sol.report.residual_history.size(); ++i)
    r.add("history." + std::to_string(i), sol.report.residual_history[i]);
  emit(r, cfg);
  return sol.report.status == SolveStatus::Converged ? 0 : 3;
}

inline int cmd_vi(const RunConfig& cfg) {
  const Space e2 = Space::euclidean(2);
  VIProblem prob = [&]() -> VIProblem {
    if (cfg.vi_scenario == "identity-ball")
      return {ResidualOperator::custom(e2, "identity",
                                       [](const Element& x) { return x; }),
              ConvexSet::ball(zero(e2), 1.0), 1.0};
    if (cfg.vi_scenario == "constant-box")
      return {ResidualOperator::custom(
                  e2, "constant-load",
                  [e2](const Element&) { return Element(e2, {1.0, 1.0}); }),
              ConvexSet::box(Element(e2, {0.0, 0.0}), Element(e2, {1.0, 1.0})),
              1.0};
    if (cfg.vi_scenario == "rotation-ball")
      return {ResidualOperator(OperatorSpec::rotation(e2, cfg.vi_angle)),
              ConvexSet::ball(zero(e2), 1.0), 2.0};
    throw ConfigError("vi.scenario must be one of identity-ball, constant-box, "
                      "rotation-ball; got '" + cfg.vi_scenario + "'");
  }();

  const Element x0 = cfg.vi_scenario == "constant-box"
                         ? Element(e2, {0.5, 0.5})
                         : Element(e2, {0.3, 0.4});
  auto sol = solve_vi_extragradient(prob, x0, iteration_config(cfg));
  auto minty = minty_residuals(prob, sol.x_hat, 500, cfg.seed);

  Report r;
  r.add("command", "vi");
  r.add("vi.scenario", cfg.vi_scenario);
  r.add("solve.status", to_string(sol.report.status));
  r.add("solve.iterations", sol.report.iterations);
  r.add("solve.final_gap", sol.report.final_residual);
  r.add("post_hoc.primal", sol.post_hoc_primal);
  r.add("post_hoc.threshold", sol.post_hoc_threshold);
  r.add("post_hoc.ok", sol.post_hoc_ok);
  r.add("minty.primal", minty.primal);
  r.add("minty.dual", minty.dual);
  r.add("minty.dominance_gap", minty.max_dominance_gap);
  r.add("minty.samples", minty.samples);
  r.add("minty.seed", std::to_string(minty.seed));
  for (std::size_t i = 0; i < sol.x_hat.coords.size(); ++i)
    r.add("solution.x." + std::to_string(i), sol.x_hat.coords[i]);
  emit(r, cfg);
  return sol.report.status == SolveStatus::Converged && sol.post_hoc_ok ? 0 : 3;
}

inline int cmd_kkm(const RunConfig& cfg) {
  SetValuedMap map = [&] {
    if (cfg.kkm_scenario == "canonical") return scenarios::canonical_cover(2);
    if (cfg.kkm_scenario == "threshold")
      return scenarios::threshold_cover(cfg.kkm_threshold);
    if (cfg.kkm_scenario == "rotation-p")
      return scenarios::rotation_p_mapping(cfg.kkm_angle);
    throw ConfigError("kkm.scenario must be one of canonical, threshold, "
                      "rotation-p; got '" + cfg.kkm_scenario + "'");
  }();

  auto rep = run_kkm(map, cfg.kkm_m, cfg.kkm_tol);
  Report r;
  r.add("command", "kkm");
  r.add("kkm.scenario", cfg.kkm_scenario);
  r.add("kkm.m", cfg.kkm_m);
  r.add("kkm.tol", cfg.kkm_tol);
  r.add("kkm.covering_ok", rep.covering_ok);
  r.add("kkm.violations", rep.violations.size());
  if (!rep.violations.empty()) {
    const auto& v = rep.violations.front();
    std::string subset;
    for (const std::size_t i : v.subset)
      subset += (subset.empty() ? "" : ",") + std::to_string(i);
    r.add("kkm.first_violation.subset", subset);
    for (std::size_t i = 0; i < v.point.coords.size(); ++i)
      r.add("kkm.first_violation.point." + std::to_string(i), v.point.coords[i]);
  }
  bool witness_ok = false;
  if (rep.intersection_witness) {
    const auto& w = *rep.intersection_witness;
    witness_ok = w.within_tol;
    r.add("witness.max_defect", w.max_defect);
    r.add("witness.within_tol", w.within_tol);
    for (std::size_t i = 0; i < w.point.coords.size(); ++i)
      r.add("witness.point." + std::to_string(i), w.point.coords[i]);
  }
  emit(r, cfg);
  return rep.covering_ok && witness_ok ? 0 : 3;
}

inline int cmd_selftest(const RunConfig& cfg) {
  const auto results = run_acceptance();
  Report r;
  r.add("command", "selftest");
  std::size_t passed = 0;
  for (const auto& c : results) {
    r.add("selftest." + c.name, c.pass ? "pass" : "fail");
    if (c.pass) ++passed;
  }
  r.add("selftest.passed", passed);
  r.add("selftest.total", results.size());
  emit(r, cfg);
  return passed == results.size() ? 0 : 3;
}

inline int dispatch(Command command, const std::string& config_path,
                    const RunConfig& flag_overrides, bool config_given,
                    bool format_given) {
  RunConfig cfg;
  if (command == Command::Selftest) {
    if (config_given) cfg = load_run_config(command, parse_ini_file(config_path));
    cfg.command = command;
  } else {
    if (!config_given)
      throw ConfigError("--config <path> is required for this command");
    cfg = load_run_config(command, parse_ini_file(config_path));
  }
  // command-line flags win over the config file
  if (!flag_overrides.output_path.empty())
    cfg.output_path = flag_overrides.output_path;
  if (format_given) cfg.format = flag_overrides.format;
  cfg.seed = flag_overrides.seed;
  cfg.override_conditions = flag_overrides.override_conditions;

  switch (command) {
    case Command::Check: return cmd_check(cfg);
    case Command::Solve: return cmd_solve(cfg);
    case Command::Vi: return cmd_vi(cfg);
    case Command::Kkm: return cmd_kkm(cfg);
    case Command::Selftest: return cmd_selftest(cfg);
  }
  throw ConfigError("unknown command");
}

}  // namespace cli_detail

/// Entry point: `fpk <check|solve|vi|kkm|selftest> [--config path]
/// [--seed n] [--output path] [--format table|keyvalue]
/// [--override-conditions]`. Exit codes: 0 success/converged, 2 conditions
/// violated, 3 non-convergence or failed scan, 4 config/parse error.
inline int run_cli(int argc, char** argv) {
  CLI::App app{"Constructive fixed-point toolkit: integral-equation solvers, "
               "variational-inequality and covering checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_path;
  std::string format_str = "table";
  std::uint64_t seed = 0;
  bool override_conditions = false;

  const std::vector<std::pair<Command, const char*>> commands = {
      {Command::Check, "verify solvability conditions of an integral equation"},
      {Command::Solve, "solve an integral equation by fixed-point iteration"},
      {Command::Vi, "solve a variational-inequality scenario"},
      {Command::Kkm, "run a covering scan scenario"},
      {Command::Selftest, "run the built-in acceptance battery"}};
  std::vector<CLI::App*> subs;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(to_string(cmd), help);
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--seed", seed, "sampling seed recorded in reports");
    sub->add_option("--output", output_path, "write the report here (default stdout)");
    sub->add_option("--format", format_str, "table|keyvalue")
        ->check(CLI::IsMember({"table", "keyvalue"}));
    sub->add_flag("--override-conditions", override_conditions,
                  "attempt a solve even when no condition set holds");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  Command command = Command::Selftest;
  const bool config_given = !config_path.empty();
  bool format_given = false;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) {
      command = commands[i].first;
      format_given = subs[i]->count("--format") > 0;
    }

  RunConfig flags;
  flags.output_path = output_path;
  flags.format = parse_report_format(format_str);
  flags.seed = seed;
  flags.override_conditions = override_conditions;

  try {
    return cli_detail::dispatch(command, config_path, flags, config_given,
                                format_given);
  } catch (const ConditionsViolatedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const OracleUnavailableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ProjectionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace fpk
