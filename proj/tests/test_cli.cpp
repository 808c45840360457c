// End-to-end checks of the installed command-line binary: exit codes,
// report contents, and byte-level determinism.
#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << content;
}

RunResult run_cli(const std::string& args, const std::string& tag) {
  fs::create_directories("cli_work");
  const fs::path out = fs::path("cli_work") / ("stdout_" + tag + ".txt");
  const fs::path err = fs::path("cli_work") / ("stderr_" + tag + ".txt");
  const std::string cmd = std::string("\"") + FPK_CLI_PATH + "\" " + args +
                          " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

std::map<std::string, std::string> parse_keyvalue(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto sep = line.find(" = ");
    if (sep == std::string::npos) continue;
    kv[line.substr(0, sep)] = line.substr(sep + 3);
  }
  return kv;
}

double as_double(const std::map<std::string, std::string>& kv,
                 const std::string& key) {
  REQUIRE(kv.count(key) == 1);
  return std::strtod(kv.at(key).c_str(), nullptr);
}

const char* kSeparableUnit = R"([problem]
a = 0
b = 1
lambda = 1
kernel = x*y
f = x
[grid]
rule = gauss-legendre
n = 64
)";

fs::path config_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::path("cli_work") / name;
  write_file(p, content);
  return p;
}

}  // namespace

TEST_CASE("check reports solvability with exit 0 or 2") {
  const auto cfg = config_file("check_unit.ini", kSeparableUnit);
  auto res = run_cli("check --config " + cfg.string() +
                         " --format keyvalue --output cli_work/check_unit.out",
                     "check_unit");
  CHECK(res.code == 0);
  auto kv = parse_keyvalue(slurp("cli_work/check_unit.out"));
  CHECK(kv.at("conditions.banach_ok") == "false");
  CHECK(kv.at("conditions.l2_ok") == "true");
  CHECK(kv.at("result.solvable") == "true");
  CHECK(std::abs(as_double(kv, "conditions.r_min") - 0.8660254037844386) <= 1e-6);

  const auto bad = config_file("check_bad.ini",
                               "[problem]\na = 0\nb = 1\nlambda = 4\n"
                               "kernel = x*y\nf = x\n");
  auto res2 = run_cli("check --config " + bad.string() +
                          " --format keyvalue --output cli_work/check_bad.out",
                      "check_bad");
  CHECK(res2.code == 2);
  auto kv2 = parse_keyvalue(slurp("cli_work/check_bad.out"));
  CHECK(kv2.at("result.solvable") == "false");
}

TEST_CASE("missing fields and bad usage exit 4") {
  const auto cfg = config_file("check_nolambda.ini",
                               "[problem]\na = 0\nb = 1\nkernel = x*y\nf = x\n");
  auto res = run_cli("check --config " + cfg.string(), "nolambda");
  CHECK(res.code == 4);
  CHECK(res.err.find("lambda") != std::string::npos);

  CHECK(run_cli("check --config cli_work/does_not_exist.ini", "noconfig").code == 4);
  CHECK(run_cli("check", "configless").code == 4);
  CHECK(run_cli("", "nocommand").code == 4);
  CHECK(run_cli("frobnicate", "badcommand").code == 4);
  CHECK(run_cli("--help", "help").code == 0);

  const auto badexpr = config_file("check_badexpr.ini",
                                   "[problem]\na = 0\nb = 1\nlambda = 1\n"
                                   "kernel = x*(y\nf = x\n");
  CHECK(run_cli("check --config " + badexpr.string(), "badexpr").code == 4);
}

TEST_CASE("solve emits the discrete solution with residual history") {
  const auto cfg = config_file("solve_unit.ini", kSeparableUnit);
  auto res = run_cli("solve --config " + cfg.string() +
                         " --format keyvalue --output cli_work/solve_unit.out",
                     "solve_unit");
  CHECK(res.code == 0);
  auto kv = parse_keyvalue(slurp("cli_work/solve_unit.out"));
  CHECK(kv.at("solve.method") == "picard");
  CHECK(kv.at("solve.status") == "converged");
  CHECK(kv.at("solve.overridden") == "false");

  // node values match u(x) = 1.5 x
  for (int i = 0; i < 64; ++i) {
    const std::string idx = std::to_string(i);
    const double x = as_double(kv, "solution.node." + idx);
    const double u = as_double(kv, "solution.value." + idx);
    CHECK(std::abs(u - 1.5 * x) <= 1e-6);
  }
  CHECK(kv.count("history.0") == 1);
  CHECK(as_double(kv, "solve.final_residual") <= 1e-10);

  // every numeric-looking field parses back as a finite real
  for (const auto& [key, value] : kv) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() + value.size() && !value.empty())
      CHECK(std::isfinite(v));
  }
}

TEST_CASE("radius-free homogeneous boundary problem exits 4 under km") {
  const auto cfg = config_file("solve_km_noradius.ini",
                               "[problem]\na = 0\nb = 1\nlambda = 1\n"
                               "kernel = 1\nf = 0\n[solver]\nmethod = km\n");
  auto res = run_cli("solve --config " + cfg.string(), "km_noradius");
  CHECK(res.code == 4);

  // supplying the radius makes the same problem solvable
  const auto cfg2 = config_file("solve_km_radius.ini",
                                "[problem]\na = 0\nb = 1\nlambda = 1\n"
                                "kernel = 1\nf = 0\n[solver]\nmethod = km\n"
                                "radius = 2\n");
  auto res2 = run_cli("solve --config " + cfg2.string() +
                          " --format keyvalue --output cli_work/km_radius.out",
                      "km_radius");
  CHECK(res2.code == 0);
  auto kv = parse_keyvalue(slurp("cli_work/km_radius.out"));
  CHECK(kv.at("solve.method") == "km");
}

TEST_CASE("violated conditions refuse unless overridden") {
  const auto cfg = config_file("solve_violated.ini",
                               "[problem]\na = 0\nb = 1\nlambda = 4\n"
                               "kernel = x*y\nf = x\n[solver]\nmax_iters = 80\n"
                               "method = picard\n");
  CHECK(run_cli("solve --config " + cfg.string(), "violated").code == 2);

  // overriding with method auto still cannot conjure an invariant ball:
  // the radius requirement surfaces as a config-level error
  const auto auto_cfg = config_file("solve_violated_auto.ini",
                                    "[problem]\na = 0\nb = 1\nlambda = 4\n"
                                    "kernel = x*y\nf = x\n");
  CHECK(run_cli("solve --config " + auto_cfg.string() + " --override-conditions",
                "violated_auto").code == 4);

  auto res = run_cli("solve --config " + cfg.string() +
                         " --override-conditions --format keyvalue --output "
                         "cli_work/override.out",
                     "override");
  CHECK(res.code == 3);  // best effort runs but cannot converge
  auto kv = parse_keyvalue(slurp("cli_work/override.out"));
  CHECK(kv.at("solve.overridden") == "true");
  CHECK(kv.at("solve.status") != "converged");
}

TEST_CASE("identical config and seed give byte-identical keyvalue reports") {
  const auto cfg = config_file("det.ini", kSeparableUnit);
  for (const char* cmd : {"check", "solve"}) {
    const std::string base = std::string(cmd) + " --config " + cfg.string() +
                             " --seed 7 --format keyvalue --output cli_work/det_";
    run_cli(base + cmd + "_a.out", std::string("det_a_") + cmd);
    run_cli(base + cmd + "_b.out", std::string("det_b_") + cmd);
    const std::string a = slurp("cli_work/det_" + std::string(cmd) + "_a.out");
    const std::string b = slurp("cli_work/det_" + std::string(cmd) + "_b.out");
    CHECK(!a.empty());
    CHECK(a == b);
  }
}

TEST_CASE("vi scenarios solve and certify") {
  const auto cfg = config_file("vi_rot.ini", "[vi]\nscenario = rotation-ball\n");
  auto res = run_cli("vi --config " + cfg.string() +
                         " --seed 3 --format keyvalue --output cli_work/vi_rot.out",
                     "vi_rot");
  CHECK(res.code == 0);
  auto kv = parse_keyvalue(slurp("cli_work/vi_rot.out"));
  CHECK(kv.at("post_hoc.ok") == "true");
  CHECK(std::abs(as_double(kv, "solution.x.0")) <= 1e-5);
  CHECK(std::abs(as_double(kv, "solution.x.1")) <= 1e-5);
  CHECK(as_double(kv, "minty.dominance_gap") <= 1e-12);
  CHECK(kv.at("minty.samples") == "500");  // balls contribute no extreme points

  const auto cbox = config_file("vi_box.ini", "[vi]\nscenario = constant-box\n");
  CHECK(run_cli("vi --config " + cbox.string(), "vi_box").code == 0);

  const auto bad = config_file("vi_bad.ini", "[vi]\nscenario = warp-core\n");
  CHECK(run_cli("vi --config " + bad.string(), "vi_bad").code == 4);
}

TEST_CASE("kkm scenarios scan coverings") {
  const auto canon = config_file("kkm_canon.ini",
                                 "[kkm]\nscenario = canonical\nm = 30\n");
  auto res = run_cli("kkm --config " + canon.string() +
                         " --format keyvalue --output cli_work/kkm_canon.out",
                     "kkm_canon");
  CHECK(res.code == 0);
  auto kv = parse_keyvalue(slurp("cli_work/kkm_canon.out"));
  CHECK(kv.at("kkm.covering_ok") == "true");
  CHECK(kv.at("witness.within_tol") == "true");

  const auto thr = config_file("kkm_thr.ini",
                               "[kkm]\nscenario = threshold\nm = 10\n"
                               "threshold = 0.99\n");
  auto res2 = run_cli("kkm --config " + thr.string() +
                          " --format keyvalue --output cli_work/kkm_thr.out",
                      "kkm_thr");
  CHECK(res2.code == 3);
  auto kv2 = parse_keyvalue(slurp("cli_work/kkm_thr.out"));
  CHECK(kv2.at("kkm.covering_ok") == "false");
  CHECK(std::abs(as_double(kv2, "witness.max_defect") - 0.49) <= 1e-12);

  const auto rot = config_file("kkm_rot.ini",
                               "[kkm]\nscenario = rotation-p\nm = 20\n");
  CHECK(run_cli("kkm --config " + rot.string(), "kkm_rot").code == 0);
}

TEST_CASE("selftest runs the acceptance battery") {
  auto res = run_cli("selftest --format keyvalue --output cli_work/selftest.out",
                     "selftest");
  CHECK(res.code == 0);
  auto kv = parse_keyvalue(slurp("cli_work/selftest.out"));
  CHECK(kv.at("selftest.passed") == "10");
  CHECK(kv.at("selftest.total") == "10");
}

TEST_CASE("table format renders human-readable output to stdout") {
  const auto cfg = config_file("table.ini", kSeparableUnit);
  auto res = run_cli("check --config " + cfg.string(), "table");
  CHECK(res.code == 0);
  CHECK(res.out.find("conditions.l2_ok") != std::string::npos);
  CHECK(res.out.find("true") != std::string::npos);

  CHECK(run_cli("check --config " + cfg.string() + " --format yaml",
                "badformat").code == 4);
}
