#include "support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "wcsk/cli.hpp"

using namespace wcsk;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wcsk_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

const char* kSmallVerify = R"(
command = "verify"
seed = 7
[[roster]]
name = "one"
v = "1"
w = "1"
rank = 1
[verify]
charts = ["sphere"]
potentials = 2
points = 5
checks = ["I1", "I3", "C1"]
)";

const char* kRoundSolve = R"(
command = "solve"
[[roster]]
name = "one"
v = "1"
w = "0"
rank = 1
)";

int run_binary(const std::string& args) {
  const int rc = std::system((std::string(WCSK_BINARY) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config parsing", "[cli][config]") {
  SECTION("defaults") {
    const RunConfig c = parse_config("command = \"verify\"\nseed = 1\n");
    CHECK(c.command == Command::Verify);
    CHECK(*c.seed == 1);
    CHECK(c.verify.potentials == 10);
    CHECK(c.verify.charts.size() == 3);
    CHECK(c.tol.identity == 1e-7);
    CHECK(c.solver.nodes == 129);
  }
  SECTION("roster entries") {
    const RunConfig c = parse_config(kSmallVerify);
    REQUIRE(c.roster.size() == 1);
    CHECK(c.roster[0].pair.v.is_const(1.0));
    CHECK(c.verify.checks.size() == 3);
  }
  SECTION("invalid configurations") {
    CHECK_THROWS_WITH(parse_config("command = \"verify\"\n"), ContainsSubstring("seed"));
    CHECK_THROWS_AS(parse_config("command = \"verify\"\nseed = 1\nbogus = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = \"solve\"\n[tolerances]\noracle = -1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = \"solve\"\n[solver]\nnodes = 128\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = \"verify\"\nseed = 1\n[verify]\nchecks = [\"Z1\"]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = \"launch\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = \"solve\"\n", "c", Command::Audit), ConfigError);
    CHECK_THROWS_AS(parse_config("command = \n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = \"solve\"\n[[roster]]\nname = \"b\"\nv = \"(add 1\"\nw = \"0\"\n"),
                    ConfigError);
    CHECK_THROWS_WITH(parse_config("command = \"solve\"\n[[roster]]\nname = \"lin\"\nv = \"x0\"\nw = \"0\"\n"),
                      ContainsSubstring("nonpositive weight"));
  }
}

TEST_CASE("verify with v = 1", "[cli]") {
  const fs::path out = scratch("verify");
  const RunResult r = run(parse_config(kSmallVerify), out, 1);
  CHECK(r.code == kExitPass);
  const Json j = read_json(out / "verify.json");
  const Json& checks = j["reports"][0]["checks"];
  bool saw_collapse = false;
  for (const auto& c : checks)
    if (c["id"] == "C1") {
      saw_collapse = true;
      CHECK(c["pass"].get<bool>());
      CHECK(c["samples"].get<int>() == 10);
    }
  CHECK(saw_collapse);
  CHECK(read_json(out / "summary.json")["status"] == "pass");
}

TEST_CASE("solve with v = 1 gives the round sphere", "[cli]") {
  const fs::path out = scratch("solve");
  const RunResult r = run(parse_config(kRoundSolve), out, 1);
  REQUIRE(r.code == kExitPass);
  const Json j = read_json(out / "solve.json");
  CHECK(std::abs(j["pairs"][0]["adjusted"]["a"].get<double>() - 8 * kPi) <= 1e-6);
  std::istringstream csv(slurp(out / "solution_one.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,theta,phi,F,mu,Scal_v,w");
  int rows = 0;
  while (std::getline(csv, line)) {
    double x, theta, phi, F, mu, scal, w;
    char c;
    std::istringstream ls(line);
    ls >> x >> c >> theta >> c >> phi >> c >> F >> c >> mu >> c >> scal >> c >> w;
    CHECK(std::abs(theta - (1 - x * x)) <= 1e-8);
    CHECK(std::abs(scal - 8 * kPi) <= 1e-6);
    ++rows;
  }
  CHECK(rows == 129);
}

TEST_CASE("reruns are byte-identical", "[cli][determinism]") {
  const RunConfig c = parse_config(kSmallVerify);
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  run(c, a, 1);
  run(c, b, 2);
  for (const auto& e : fs::directory_iterator(a)) {
    INFO(e.path().filename());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
}

TEST_CASE("command line exit codes", "[cli][e2e]") {
  const fs::path dir = scratch("e2e");
  std::ofstream(dir / "bad.toml") << "command = \"solve\"\n[[roster]]\nname = \"lin\"\nv = \"x0\"\nw = \"0\"\nrank = 1\n";
  std::ofstream(dir / "ok.toml") << kSmallVerify;
  CHECK(run_binary("solve --config " + (dir / "bad.toml").string() + " --out " + (dir / "bad").string()) == 2);
  const Json s = read_json(dir / "bad" / "summary.json");
  CHECK(s["exit_code"] == 2);
  CHECK_THAT(s["failures"][0].get<std::string>(), ContainsSubstring("nonpositive weight"));
  CHECK(run_binary("verify --config " + (dir / "ok.toml").string() + " --out " + (dir / "ok").string()) == 0);
  CHECK(run_binary("audit --config " + (dir / "ok.toml").string() + " --out " + (dir / "mismatch").string()) == 2);
  CHECK(run_binary("verify --config " + (dir / "missing.toml").string() + " --out " + (dir / "m").string()) == 2);
  CHECK(run_binary("frobnicate") == 2);
  CHECK(run_binary("--help") == 0);
}
