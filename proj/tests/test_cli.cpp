#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wsb/manifolds.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "wsb_lab_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(WSB_LAB_EXE) + " " + args + " 2> " + (kRoot / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

struct Clean {
  Clean() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

}  // namespace

TEST_CASE("lagrange table") {
  Clean c;
  REQUIRE(run("lagrange --out " + (kRoot / "a").string()) == 0);
  const json t = load(kRoot / "a" / "lagrange.json");
  CHECK(t["energy_chain_holds"] == true);
  CHECK(t["points"].size() == 5);
  CHECK(t["x_plus"].get<double>() == doctest::Approx(0.1509342886).epsilon(1e-10));
  const json m = load(kRoot / "a" / "manifest.json");
  CHECK(m["command"] == "lagrange");
  CHECK(m["validation"] == "pass");

  REQUIRE(run("lagrange --mu 0.5 --out " + (kRoot / "b").string()) == 0);
  CHECK(load(kRoot / "b" / "lagrange.json")["x_plus"].get<double>() == 0.5);
}

TEST_CASE("out-of-range energy exits with code 2 and an error document") {
  Clean c;
  CHECK(run("lyapunov --energy -1.5 --out " + (kRoot / "e").string()) == 2);
  const json e = json::parse(slurp(kRoot / "stderr.txt"));
  CHECK(e["error"] == "OutOfRange");
  CHECK(load(kRoot / "e" / "error.json")["error"] == "OutOfRange");
  CHECK(run("wsb --order 0 --out " + (kRoot / "f").string()) == 2);
  CHECK(run("frobnicate") != 0);
}

TEST_CASE("lyapunov record and zero-velocity curve") {
  Clean c;
  REQUIRE(run("lyapunov --out " + (kRoot / "l").string()) == 0);
  CHECK(load(kRoot / "l" / "lyapunov.json")["residual"].get<double>() < 1e-10);
  REQUIRE(run("zvc --energy -1.598 --out " + (kRoot / "z").string()) == 0);
  const std::string csv = slurp(kRoot / "z" / "zvc.csv");
  CHECK(csv.rfind("component,x0,y0,x1,y1\n", 0) == 0);
}

TEST_CASE("cut CSV reloads as a closed curve") {
  Clean c;
  REQUIRE(run("cut --index 1 --out " + (kRoot / "c").string()) == 0);
  std::ifstream is(kRoot / "c" / "cut.csv");
  const wsb::LoadedCut lc = wsb::read_cut_csv(is);
  CHECK(lc.cut.closed);
  CHECK(lc.cut.index == 1);
  CHECK(lc.cut.points.size() > 100);
}

TEST_CASE("wsb rerun from its manifest is bit-identical") {
  Clean c;
  const std::string a = (kRoot / "w1").string(), b = (kRoot / "w2").string();
  REQUIRE(run("wsb --threads 1 --out " + a) == 0);
  REQUIRE(run("wsb --config " + a + "/manifest.json --out " + b) == 0);
  CHECK(slurp(kRoot / "w1" / "wsb.csv") == slurp(kRoot / "w2" / "wsb.csv"));
  const std::string csv = slurp(kRoot / "w1" / "wsb.csv");
  CHECK(csv.rfind("mu,theta0,rdot0,e0,n\n", 0) == 0);
  CHECK(load(kRoot / "w1" / "manifest.json")["config"]["threads"] == 1);
}

TEST_CASE("flags override the config file") {
  Clean c;
  const fs::path cfg = kRoot / "cfg.json";
  std::ofstream(cfg) << R"({"mu": 0.0121505856, "energy": -1.5999, "out": "ignored"})";
  REQUIRE(run("lyapunov --config " + cfg.string() + " --energy -1.5998 --out " + (kRoot / "o").string()) == 0);
  CHECK(load(kRoot / "o" / "lyapunov.json")["energy"].get<double>() == doctest::Approx(-1.5998).epsilon(1e-12));
  CHECK(load(kRoot / "o" / "manifest.json")["config"]["energy"].get<double>() == -1.5998);
}
