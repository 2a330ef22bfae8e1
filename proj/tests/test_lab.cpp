#include <doctest.h>

#include "wsb/lab.hpp"

using namespace wsb;
using nlohmann::json;

TEST_CASE("config JSON roundtrip") {
  RunConfig c;
  c.mu = 0.01;
  c.block_a = -0.95;
  c.block_b = -0.8;
  c.e0 = 0.3;
  c.n = 3;
  c.r_lo = 0.2;
  c.energy = -1.58;
  c.threads = 1;
  const RunConfig d = RunConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  CHECK(d.block_a.value() == -0.95);
  CHECK_FALSE(d.r_hi.has_value());
  CHECK(RunConfig::from_json(json::object()).to_json() == RunConfig{}.to_json());
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(RunConfig::from_json(json{{"mu", 0.01}, {"colour", 1}}), Error);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"query", {{"order", 2}}}}), Error);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"mu", "heavy"}}), Error);
  CHECK_THROWS_AS(RunConfig::from_json(json::array()), Error);
  const auto bad = [](auto edit) {
    RunConfig c;
    edit(c);
    try {
      c.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidArgument;
    }
    return false;
  };
  CHECK(bad([](RunConfig& c) { c.mu = 0.7; }));
  CHECK(bad([](RunConfig& c) { c.block_a = -0.9; }));
  CHECK(bad([](RunConfig& c) { c.n = 0; }));
  CHECK(bad([](RunConfig& c) { c.e0 = 1.0; }));
  CHECK(bad([](RunConfig& c) { c.threads = -1; }));
  CHECK(bad([](RunConfig& c) { c.profile_d_max = c.profile_d_min; }));
}

TEST_CASE("default lab and manifest") {
  RunConfig c;
  const Lab lab = setup_lab(c);
  CHECK(lab.block.validated);
  CHECK(lab.tightenings == 0);
  CHECK(lab.geom.H_star == default_energy_cap(lab.params));
  const json m = manifest_json(c, lab, "wsb");
  for (const char* k : {"mu", "a", "b", "H_star", "D1", "y_b", "theta1", "validation", "samples", "config", "version"}) {
    CHECK(m.contains(k));
  }
  CHECK(m["validation"] == "pass");
  CHECK(m["config"] == c.to_json());
  CHECK(m["theta1"].get<double>() == doctest::Approx(0.187851).epsilon(1e-5));
}

TEST_CASE("explicit H_star outside the band is refused") {
  RunConfig c;
  c.H_star = -1.5;
  CHECK_THROWS_AS(setup_lab(c), Error);
}

TEST_CASE("a block that does not isolate is reported") {
  RunConfig c;
  c.block_a = -0.95;
  c.block_b = -0.3;
  try {
    setup_lab(c);
    FAIL("expected NotIsolating");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotIsolating);
  }
}

TEST_CASE("query from config") {
  RunConfig c;
  c.e0 = 0.41;
  const Lab lab = setup_lab(c);
  const WsbQuery q = make_query(c, lab);
  CHECK(q.e0 == 0.41);
  CHECK(q.n == 2);
  CHECK(std::isnan(q.r_lo));
  c.threads = 1;
  CHECK_FALSE(make_query(c, lab).parallel);
}
