#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "lqueue/errors.hpp"
#include "lqueue/model_io.hpp"

using namespace lq;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("parse a two-sided model") {
  const auto m = parse_model(
      "# comment line\n"
      "drift = -0.5   # trailing comment\n"
      "gauss_var = 0.8\n"
      "\n"
      "up.rate = 0.7\n"
      "up.phases = [(0.4, 1.5), (0.6, 3)]\n"
      "down.rate = 0.9\n"
      "down.phases = [ ( 0.3 , 0.8 ) ,(0.7,2.5) ]\n");
  CHECK(m.drift == -0.5);
  CHECK(m.gauss_var == 0.8);
  CHECK(m.up.rate == 0.7);
  REQUIRE(m.up.phases.size() == 2);
  CHECK(m.up.phases[1].weight == 0.6);
  CHECK(m.up.phases[1].decay == 3.0);
  REQUIRE(m.down.phases.size() == 2);
  CHECK(m.down.phases[0].decay == 0.8);
}

TEST_CASE("parse diagnostics carry line and field") {
  CHECK(parse_error("drift = -1\nsigma = 2\n") == "line 2, field 'sigma': unknown key");
  CHECK(parse_error("drift = -1\ndrift = -2\n").find("line 2, field 'drift': duplicate key") == 0);
  CHECK(parse_error("drift = abc\n").find("line 1, field 'drift'") == 0);
  CHECK(parse_error("drift = -1\nup.phases = (1, 2)\n").find("line 2, field 'up.phases'") == 0);
  CHECK(parse_error("drift = -1\nup.phases = [(1 2)]\n").find("line 2") == 0);
  CHECK(parse_error("drift = -1\nup.phases = [(1, 2),]\n").find("trailing") != std::string::npos);
  CHECK(parse_error("drift -1\n").find("line 1") == 0);
  CHECK(parse_error("gauss_var = 1\n").find("'drift': missing required key") != std::string::npos);
}

TEST_CASE("format and parse round trip") {
  const auto m = parse_model("drift = -0.1\ngauss_var = 0.3\ndown.rate = 1.25\ndown.phases = [(0.25, 0.1), (0.75, 7)]\n");
  const auto again = parse_model(format_model(m));
  CHECK(again.drift == m.drift);
  CHECK(again.gauss_var == m.gauss_var);
  CHECK(again.down.rate == m.down.rate);
  REQUIRE(again.down.phases.size() == 2);
  CHECK(again.down.phases[1].decay == 7.0);
  CHECK(again.up.phases.empty());
}

TEST_CASE("load from file") {
  const std::string path = "lqueue_test_model.tmp";
  {
    std::ofstream f(path);
    f << "drift = -2\nup.rate = 1\nup.phases = [(1, 4)]\n";
  }
  const auto m = load_model(path);
  CHECK(m.drift == -2.0);
  std::remove(path.c_str());

  try {
    load_model("no/such/model.file");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}
