// End-to-end tests for the command-line front end.  Each case spawns the
// real binary, captures stdout and the exit code, and checks the JSON
// against the documented contract.  Together the cases exercise every exit
// code: 0, 1, 2, 3, 64, 65, and 70.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

const std::string& temp_dir() {
  static const std::string dir = [] {
    std::string tmpl = "/tmp/blsos_cli_XXXXXX";
    char* made = mkdtemp(tmpl.data());
    REQUIRE(made != nullptr);
    return std::string(made);
  }();
  return dir;
}

std::string data_path(const std::string& name) {
  return std::string(BLSOS_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Runs `blsos <args>` through the shell; stderr is discarded, stdout is
/// captured.  `env_prefix` may hold VAR=value assignments.
RunResult run(const std::string& args, const std::string& env_prefix = {}) {
  const std::string out_path = temp_dir() + "/stdout.txt";
  std::string cmd = env_prefix.empty() ? "" : env_prefix + " ";
  cmd += std::string(BLSOS_CLI_PATH) + " " + args + " > " + out_path +
         " 2> /dev/null";
  const int raw = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = slurp(out_path);
  return result;
}

json parse(const RunResult& r) {
  CAPTURE(r.out);
  REQUIRE_FALSE(r.out.empty());
  return json::parse(r.out);
}

/// Instance with 11 ambient dimensions: the candidate family is truncated,
/// so feasibility comes back UNKNOWN and prove requires --force.
std::string unknown_instance() {
  static const std::string path = [] {
    json maps = json::array();
    json rows = json::array();
    for (int r = 0; r < 11; ++r) {
      json row = json::array();
      for (int c = 0; c < 11; ++c) row.push_back(r == c ? 1 : 0);
      rows.push_back(row);
    }
    maps.push_back(rows);
    json pts = json::array();
    pts.push_back(json::array());
    for (int c = 0; c < 11; ++c) pts.back().push_back(0);
    pts.push_back(pts.back());
    pts.back()[0] = 1;
    const json instance{
        {"n", 11}, {"maps", maps}, {"p", {1}}, {"domain", {{"points", pts}}}};
    const std::string p = temp_dir() + "/unknown.json";
    spit(p, instance.dump());
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("validate reports the parsed instance") {
  const RunResult r = run("validate " + data_path("hoelder.json"));
  CHECK(r.exit_code == 0);
  const json out = parse(r);
  CHECK(out["valid"] == true);
  CHECK(out["n"] == 1);
  CHECK(out["m"] == 2);
  CHECK(out["s"] == 2);
  CHECK(out["p"] == json({"1/2", "1/2"}));
  CHECK(out["domain_points"] == 2);
  CHECK(out["digest"].get<std::string>().size() == 64);
}

TEST_CASE("feasibility distinguishes the three verdicts") {
  const RunResult feasible = run("feasibility " + data_path("lw.json"));
  CHECK(feasible.exit_code == 0);
  CHECK(parse(feasible)["status"] == "FEASIBLE");

  const RunResult infeasible =
      run("feasibility " + data_path("lw_quarter.json"));
  CHECK(infeasible.exit_code == 0);
  const json bad = parse(infeasible);
  CHECK(bad["status"] == "INFEASIBLE");
  CHECK(bad["witness"]["dim"] == 3);

  const RunResult unknown = run("feasibility " + unknown_instance());
  CHECK(unknown.exit_code == 0);
  const json u = parse(unknown);
  CHECK(u["status"] == "UNKNOWN");
  CHECK(u["truncated"] == true);
}

TEST_CASE("vertices lists the exponent polytope extreme points") {
  const RunResult r = run("vertices " + data_path("lw.json"));
  CHECK(r.exit_code == 0);
  const json out = parse(r);
  CHECK(out["count"] == 5);
  int non_binary = 0;
  for (const auto& v : out["vertices"]) {
    if (!v["binary"].get<bool>()) {
      ++non_binary;
      CHECK(v["p"] == json({"1/2", "1/2", "1/2"}));
    }
  }
  CHECK(non_binary == 1);
}

TEST_CASE("prove and verify round-trip through certificate files") {
  const std::string cert = temp_dir() + "/hoelder.cert";
  const RunResult proved =
      run("prove " + data_path("hoelder.json") + " -o " + cert);
  CHECK(proved.exit_code == 0);
  const json summary = parse(proved);
  CHECK(summary["certificate"] == cert);
  CHECK(summary["steps"] == 1);

  const RunResult verified =
      run("verify " + cert + " --datum " + data_path("hoelder.json"));
  CHECK(verified.exit_code == 0);
  const json report = parse(verified);
  CHECK(report["verdict"] == "ACCEPT");
  CHECK(report["degree"]["within_bound"] == true);
  CHECK(report["degree"]["theorem_bound"] == 6);
}

TEST_CASE("prove output is byte-identical across runs") {
  const RunResult a = run("prove " + data_path("lw.json"));
  const RunResult b = run("prove " + data_path("lw.json"));
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.size() > 1000);
}

TEST_CASE("a tightened slack factor fails the degree check") {
  const std::string cert = temp_dir() + "/lw.cert";
  REQUIRE(run("prove " + data_path("lw.json") + " -o " + cert).exit_code == 0);
  // max_degree 48 against bound 147: slack 1 keeps it, slack 1/4 rejects.
  const RunResult loose = run("verify " + cert + " --datum " +
                              data_path("lw.json") + " --slack-factor 1");
  CHECK(loose.exit_code == 0);
  CHECK(parse(loose)["degree"]["within_bound"] == true);
  const RunResult tight = run("verify " + cert + " --datum " +
                              data_path("lw.json") + " --slack-factor 1/4");
  CHECK(tight.exit_code == 1);
  const json rejected = parse(tight);
  CHECK(rejected["verdict"] == "REJECT");
  CHECK(rejected["reason"].get<std::string>().find("degree") !=
        std::string::npos);
}

TEST_CASE("verify rejects a certificate bound to a different instance") {
  const std::string cert = temp_dir() + "/hoelder2.cert";
  REQUIRE(run("prove " + data_path("hoelder.json") + " -o " + cert)
              .exit_code == 0);
  const RunResult r =
      run("verify " + cert + " --datum " + data_path("lw.json"));
  CHECK(r.exit_code == 1);
  CHECK(parse(r)["verdict"] == "REJECT");
}

TEST_CASE("prove reports infeasibility with the witness subspace") {
  const RunResult r = run("prove " + data_path("lw_quarter.json"));
  CHECK(r.exit_code == 2);
  const json out = parse(r);
  CHECK(out["error"] == "infeasible");
  CHECK(out["witness"]["dim"] == 3);
}

TEST_CASE("prove refuses undecided feasibility unless forced") {
  const RunResult refused = run("prove " + unknown_instance());
  CHECK(refused.exit_code == 3);
  CHECK(parse(refused)["error"] == "unknown-feasibility");

  const std::string cert = temp_dir() + "/unknown.cert";
  const RunResult forced =
      run("prove " + unknown_instance() + " --force -o " + cert);
  CHECK(forced.exit_code == 0);
  const RunResult verified =
      run("verify " + cert + " --datum " + unknown_instance());
  CHECK(verified.exit_code == 0);
  CHECK(parse(verified)["verdict"] == "ACCEPT");
}

TEST_CASE("refute finds an exact violation for false inequalities") {
  const RunResult r = run("refute " + data_path("lw_quarter.json") +
                          " --trials 25 --seed 7");
  CHECK(r.exit_code == 0);
  const json out = parse(r);
  CHECK(out["random_check"]["trials"] == 25);
  CHECK(out["random_check"]["violations"].get<long>() > 0);
  REQUIRE_FALSE(out["violation"].is_null());
  CHECK(out["violation"]["tables"].size() == 3);
  CHECK(out["violation"]["gap"].get<std::string>().front() == '-');

  const RunResult none = run("refute " + data_path("lw.json"));
  CHECK(none.exit_code == 0);
  CHECK(parse(none)["violation"].is_null());
}

TEST_CASE("pseudocheck validates moment tables") {
  const RunResult pass = run("pseudocheck " + data_path("moment_uniform.json"));
  CHECK(pass.exit_code == 0);
  const json ok = parse(pass);
  CHECK(ok["verdict"] == "PASS");
  CHECK(ok["degree"] == 6);

  const RunResult fail = run("pseudocheck " + data_path("moment_bad.json"));
  CHECK(fail.exit_code == 1);
  const json bad = parse(fail);
  CHECK(bad["verdict"] == "FAIL");
  CHECK(bad["axiom"] == "positivity");
  CHECK(bad["pivot_index"] == 2);
  CHECK(bad["pivot"] == "-3");
}

TEST_CASE("blconstant reports convergence and divergence") {
  const RunResult ok = run("blconstant " + data_path("hoelder.json"));
  CHECK(ok.exit_code == 0);
  const json conv = parse(ok);
  CHECK(conv["converged"] == true);
  CHECK(std::abs(conv["C"].get<double>() - 1.0) < 1e-6);
  CHECK(conv["iterations"].get<int>() < 1000);
  CHECK_FALSE(conv.contains("divergent"));

  const RunResult div = run("blconstant " + data_path("lw_quarter.json") +
                            " --max-iters 200");
  CHECK(div.exit_code == 0);
  const json d = parse(div);
  CHECK(d["converged"] == false);
  CHECK(d["divergent"] == true);
  CHECK(d["iterations"].get<int>() < 200);
}

TEST_CASE("usage errors exit with code 64") {
  CHECK(run("").exit_code == 64);
  CHECK(run("frobnicate x").exit_code == 64);
  CHECK(run("validate").exit_code == 64);
  CHECK(run("validate --no-such-flag x").exit_code == 64);
  CHECK(run("validate " + data_path("hoelder.json"), "BLSOS_THREADS=abc")
            .exit_code == 64);
  CHECK(run("validate " + data_path("hoelder.json"), "BLSOS_THREADS=0")
            .exit_code == 64);
  CHECK(run("validate " + data_path("hoelder.json"), "BLSOS_THREADS=2")
            .exit_code == 0);
}

TEST_CASE("input errors exit with code 65") {
  const std::string garbage = temp_dir() + "/garbage.json";
  spit(garbage, "{not json");
  CHECK(run("validate " + garbage).exit_code == 65);
  CHECK(run("validate /nonexistent/instance.json").exit_code == 65);

  const std::string missing_field = temp_dir() + "/missing.json";
  spit(missing_field, R"({"n": 1, "maps": [[[1]]], "p": [1]})");
  const RunResult r = run("validate " + missing_field);
  CHECK(r.exit_code == 65);
  CHECK(parse(r)["error"] == "parse");

  const std::string bad_key = temp_dir() + "/badkey.json";
  spit(bad_key, R"({"degree": 2, "values": {"not a var!": 1}})");
  CHECK(run("pseudocheck " + bad_key).exit_code == 65);

  // An instance certificate cannot be replayed without its datum.
  const std::string cert = temp_dir() + "/h3.cert";
  REQUIRE(run("prove " + data_path("hoelder.json") + " -o " + cert)
              .exit_code == 0);
  CHECK(run("verify " + cert).exit_code == 65);
  const std::string broken_cert = temp_dir() + "/broken.cert";
  spit(broken_cert, "this is not a certificate");
  CHECK(run("verify " + broken_cert).exit_code == 65);
}

TEST_CASE("internal invariant breaches exit with code 70") {
  // Feasible binary instance whose leftover product grid exceeds the
  // emitter's hard cap: the planner guard trips after the feasibility
  // gate passes.
  const std::string grid = temp_dir() + "/grid.json";
  spit(grid,
       R"({"n": 1, "maps": [[[1]], [[1]]], "p": [1, 1],)"
       R"( "domain": {"box": 500}})");
  const RunResult r = run("prove " + grid);
  CHECK(r.exit_code == 70);
  CHECK(parse(r)["error"] == "internal");
}
