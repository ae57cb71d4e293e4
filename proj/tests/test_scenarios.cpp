#include <doctest.h>

#include "satqic/scenarios.hpp"

using namespace satqic;

TEST_CASE("builtin TERR parameters") {
  const auto s = builtin_scenario("TERR");
  CHECK(s.name == "TERR");
  CHECK(s.forward.data_rate_bps == 20e6);
  CHECK(s.reverse.data_rate_bps == 20e6);
  CHECK(s.one_way_delay_s == 0.015);
  CHECK(s.forward.queue_capacity == 25);
  CHECK(s.reverse.queue_capacity == 25);
  CHECK(s.forward.plr == 0.0);
  CHECK(s.reverse.plr == 0.0);
  CHECK(s.file_size == 10485760);
  CHECK(s.iterations == 10);
  CHECK(s.timeout_s == 120.0);
}

TEST_CASE("builtin SAT parameters") {
  const auto s = builtin_scenario("SAT");
  CHECK(s.forward.data_rate_bps == 20e6);
  CHECK(s.reverse.data_rate_bps == 2e6);
  CHECK(s.one_way_delay_s == 0.3);
  CHECK(s.forward.plr == 0.0);
  CHECK(s.reverse.plr == 0.0);
  // ceil(BDP / 1500) with BDP = 1.5 MB.
  CHECK(s.forward.queue_capacity == 1000);
  CHECK(s.reverse.queue_capacity == 1000);
  CHECK(s.file_size == 10485760);
}

TEST_CASE("SATL differs from SAT only in plr") {
  auto sat = builtin_scenario("SAT");
  const auto satl = builtin_scenario("SATL");
  CHECK(satl.forward.plr == 0.01);
  CHECK(satl.reverse.plr == 0.01);
  sat.name = satl.name;
  sat.forward.plr = satl.forward.plr;
  sat.reverse.plr = satl.reverse.plr;
  CHECK(serialize_scenario(sat) == serialize_scenario(satl));
}

TEST_CASE("unknown builtin name throws") {
  CHECK_THROWS_AS(builtin_scenario("MARS"), ConfigError);
  CHECK(is_builtin_scenario("SAT"));
  CHECK(!is_builtin_scenario("MARS"));
}

TEST_CASE("bdp arithmetic") {
  CHECK(bdp_bytes(builtin_scenario("SAT")) == 1500000);
  CHECK(bdp_bytes(builtin_scenario("TERR")) == 75000);
  auto s = builtin_scenario("SAT");
  s.one_way_delay_s = 0.0;
  CHECK(bdp_bytes(s) == 0);
}

TEST_CASE("parse: rate suffixes and SAT defaults for the rest") {
  const auto s = parse_scenario("forward.rate = 50M\nreverse.rate = 5M\n");
  CHECK(s.forward.data_rate_bps == 50e6);
  CHECK(s.reverse.data_rate_bps == 5e6);
  // Everything else is the SAT default.
  CHECK(s.one_way_delay_s == 0.3);
  CHECK(s.file_size == 10485760);
  CHECK(s.iterations == 10);
  CHECK(s.timeout_s == 120.0);
}

TEST_CASE("parse: empty text gives SAT defaults") {
  const auto s = parse_scenario("");
  const auto sat = builtin_scenario("SAT");
  CHECK(s.forward.data_rate_bps == sat.forward.data_rate_bps);
  CHECK(s.reverse.data_rate_bps == sat.reverse.data_rate_bps);
  CHECK(s.one_way_delay_s == sat.one_way_delay_s);
  CHECK(s.forward.queue_capacity == sat.forward.queue_capacity);
}

TEST_CASE("parse: comments, blank lines and K suffix") {
  const auto s = parse_scenario(
      "# a comment\n"
      "name = mylink\n"
      "\n"
      "forward.rate = 750K  # trailing comment\n"
      "delay_ms = 25\n"
      "file_size = 1048576\n"
      "iterations = 3\n"
      "timeout_s = 40\n"
      "forward.queue = 17\n"
      "forward.plr = 0.005\n");
  CHECK(s.name == "mylink");
  CHECK(s.forward.data_rate_bps == 750e3);
  CHECK(s.one_way_delay_s == 0.025);
  CHECK(s.file_size == 1048576);
  CHECK(s.iterations == 3);
  CHECK(s.timeout_s == 40.0);
  CHECK(s.forward.queue_capacity == 17);
  CHECK(s.forward.plr == 0.005);
}

TEST_CASE("parse: out-of-range plr is an error") {
  CHECK_THROWS_AS(parse_scenario("forward.plr = 1.5\n"), ConfigError);
}

TEST_CASE("parse: malformed lines and unknown keys report errors") {
  CHECK_THROWS_AS(parse_scenario("this is not a pair\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("bogus.key = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("iterations = zero\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("iterations = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("file_size = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("timeout_s = -1\n"), ConfigError);
}

TEST_CASE("parse errors carry the line number") {
  try {
    parse_scenario("name = ok\nnot a pair\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("builtin scenarios survive a serialize/parse round-trip") {
  for (const char* name : {"TERR", "SAT", "SATL"}) {
    const auto original = builtin_scenario(name);
    const auto reparsed = parse_scenario(serialize_scenario(original));
    CHECK(reparsed.name == original.name);
    CHECK(reparsed.forward.data_rate_bps == original.forward.data_rate_bps);
    CHECK(reparsed.reverse.data_rate_bps == original.reverse.data_rate_bps);
    CHECK(reparsed.forward.queue_capacity == original.forward.queue_capacity);
    CHECK(reparsed.reverse.queue_capacity == original.reverse.queue_capacity);
    CHECK(reparsed.forward.plr == original.forward.plr);
    CHECK(reparsed.reverse.plr == original.reverse.plr);
    CHECK(reparsed.one_way_delay_s == original.one_way_delay_s);
    CHECK(reparsed.file_size == original.file_size);
    CHECK(reparsed.iterations == original.iterations);
    CHECK(reparsed.timeout_s == original.timeout_s);
  }
}
