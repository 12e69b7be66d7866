#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string bin() {
  const char* b = std::getenv("EMSCHED_BIN");
  REQUIRE(b != nullptr);
  return b;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  std::string cmd = bin() + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  RunResult r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0)
    r.output.append(buf.data(), n);
  int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kTmp = "/tmp/emsched_cli_test";

/// Small scenario shared by the solve tests, generated once.
const std::string& tiny_scenario() {
  static std::string path = [] {
    std::string p = kTmp + "_tiny.json";
    RunResult g = run("generate --scenario " + p +
                      " --evs 5 --stations 2 --retailers 1 --seed 2");
    REQUIRE(g.exit_code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("help lists every flag with its default") {
  RunResult top = run("--help");
  CHECK(top.exit_code == 0);
  for (const char* cmd :
       {"generate", "solve", "sweep", "validate", "report"})
    CHECK(top.output.find(cmd) != std::string::npos);

  RunResult h = run("solve --help");
  CHECK(h.exit_code == 0);
  // flags and documented defaults; the help text is the source of truth
  for (const char* needle :
       {"--scenario", "--out", "--nu-ev", "--nu-cs", "--nu-re",
        "--double-mode", "--ev-strategy", "--damping", "--seed", "--samples",
        "--kind", "--threads", "[0.95]", "[0.9]", "[exact]", "[sequential]",
        "[0.5]", "[1000]", "[normal]"})
    CHECK(h.output.find(needle) != std::string::npos);

  RunResult sw = run("sweep --help");
  CHECK(sw.output.find("--grid") != std::string::npos);
  CHECK(sw.output.find("[0.5:0.95:0.05]") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("").exit_code == 1);
  CHECK(run("--no-such-flag").exit_code == 1);
  CHECK(run("solve").exit_code == 1);  // --scenario is required
  RunResult r = run("solve --scenario /nonexistent.json --out " + kTmp);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("generate writes a loadable scenario") {
  RunResult g = run("generate --scenario " + kTmp + "_gen.json --evs 3 " +
                    "--stations 2 --retailers 1 --seed 5");
  CHECK(g.exit_code == 0);
  std::string body = slurp(kTmp + "_gen.json");
  CHECK(body.find("\"evs\"") != std::string::npos);
  std::remove((kTmp + "_gen.json").c_str());
}

TEST_CASE("solve writes schedule and trace, exit 0 on convergence") {
  std::string out = kTmp + "_solve";
  RunResult r = run("solve --scenario " + tiny_scenario() + " --out " + out +
                    " --nu-ev 0.9 --nu-cs 0.9 --nu-re 0.9");
  CHECK(r.exit_code == 0);
  std::string sched = slurp(out + "/schedule.json");
  CHECK(sched.find("\"converged\": true") != std::string::npos);
  CHECK(sched.find("\"evs\"") != std::string::npos);
  CHECK(sched.find("\"stations\"") != std::string::npos);
  std::string trace = slurp(out + "/trace.csv");
  CHECK(trace.rfind("iteration,layer,objective,delta", 0) == 0);
}

TEST_CASE("runs are byte-identical at fixed seed and one thread") {
  std::string a = kTmp + "_det_a", b = kTmp + "_det_b";
  std::string common = "validate --scenario " + tiny_scenario() +
                       " --nu-ev 0.9 --nu-cs 0.9 --nu-re 0.9 --grid " +
                       "0.9:0.9:0.05 --samples 100 --seed 3 --threads 1 ";
  CHECK(run(common + "--out " + a).exit_code == 0);
  CHECK(run(common + "--out " + b).exit_code == 0);
  CHECK(slurp(a + "/confidence.csv") == slurp(b + "/confidence.csv"));
  CHECK(slurp(a + "/failed_trips.csv") == slurp(b + "/failed_trips.csv"));
}

TEST_CASE("infeasible configurations exit 2") {
  // the retailer band cannot support nu-re ~ 1 on synthetic histories
  RunResult r = run("solve --scenario " + tiny_scenario() + " --out " + kTmp +
                    "_inf --nu-re 0.999");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("infeasible") != std::string::npos);
}
