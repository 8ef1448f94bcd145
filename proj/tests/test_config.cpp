#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "tree_sobolev/config.hpp"
#include "tree_sobolev/runner.hpp"
#include "tree_sobolev/walk.hpp"

using namespace tsob;

namespace {

RunConfig sample_config() {
  RunConfig c;
  c.command = "report";
  c.n = 8;
  c.p = {1.25, 1.5, 2.0, 3.0, 4.0};
  c.weights = parse_weight_spec("geometric:0.3333333333333333:2.5");
  c.families = {parse_weight_spec("dyadic"), parse_weight_spec("unit"), parse_weight_spec("explicit:1,0.1,1e-3")};
  c.seed = 18446744073709551615ULL;
  c.trials = 123;
  c.samples = 7;
  c.leaf_values = "random:4";
  c.matrices = {"L0", "K"};
  c.output = "out.csv";
  c.format = OutputFormat::csv;
  return c;
}

int code_of(const std::string& json_text) {
  try {
    parse_config(json_text);
  } catch (const Error& e) {
    return static_cast<int>(e.code());
  }
  return 0;
}

}  // namespace

TEST_CASE("weight specs") {
  CHECK(parse_weight_spec("unit").build(3).values() == std::vector<double>{1, 1, 1});
  CHECK(parse_weight_spec("dyadic").build(3).values() == std::vector<double>{0.5, 0.25, 0.125});
  CHECK(parse_weight_spec("dyadic:4").build(2).values() == std::vector<double>{2.0, 1.0});
  CHECK(parse_weight_spec("geometric:3").build(2).values() == std::vector<double>{3.0, 9.0});
  CHECK(parse_weight_spec("geometric:3:2").build(2).values() == std::vector<double>{6.0, 18.0});
  CHECK(parse_weight_spec("explicit:1,2.5").build(2).values() == std::vector<double>{1.0, 2.5});
  CHECK(parse_weight_spec("geometric:3").label() == "geometric:3");
  CHECK_THROWS_AS(parse_weight_spec("explicit:1,2").build(3), Error);
  for (const char* bad : {"", "bogus", "dyadic:x", "geometric:", "geometric:1:2:3", "explicit:1,,2", "dyadic:-1",
                          "unit:2"}) {
    CHECK_THROWS_AS(parse_weight_spec(bad), Error);
  }
  try {
    parse_weight_spec("file:/nonexistent/weights.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}

TEST_CASE("weights file") {
  const std::string path = "weights_test_file.json";
  {
    std::ofstream os(path);
    os << R"({"N": 3, "W": [1.0, 0.5, 0.25]})";
  }
  const auto w = parse_weight_spec("file:" + path);
  CHECK(w.kind == WeightKind::explicit_values);
  CHECK(w.build(3).values() == std::vector<double>{1.0, 0.5, 0.25});
  {
    std::ofstream os(path);
    os << R"({"N": 4, "W": [1.0, 0.5, 0.25]})";
  }
  CHECK_THROWS_AS(parse_weight_spec("file:" + path), Error);
  std::remove(path.c_str());
}

TEST_CASE("config round trip is byte identical") {
  const RunConfig c = sample_config();
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
  CHECK(config_digest(back) == config_digest(c));

  // Minimal input fills defaults and then round-trips canonically.
  const RunConfig minimal = parse_config(R"({"command": "verify", "weights": "dyadic", "p": 2})");
  CHECK(minimal.n == 4);
  CHECK(minimal.p == std::vector<double>{2.0});
  CHECK(!minimal.seed.has_value());
  const std::string canon = serialize_config(minimal);
  CHECK(serialize_config(parse_config(canon)) == canon);

  RunConfig other = c;
  other.samples += 1;
  CHECK(config_digest(other) != config_digest(c));
  CHECK(hex_digest(0x1234) == "0000000000001234");
}

TEST_CASE("malformed configs") {
  const int bad = static_cast<int>(ErrorCode::invalid_argument);
  CHECK(code_of("not json") == bad);
  CHECK(code_of("[1, 2]") == bad);
  CHECK(code_of(R"({"command": "nope"})") == bad);
  CHECK(code_of(R"({"command": "verify", "N": 0})") == bad);
  CHECK(code_of(R"({"command": "verify", "N": 500})") == static_cast<int>(ErrorCode::limit_exceeded));
  CHECK(code_of(R"({"command": "verify", "p": 1.0})") == bad);
  CHECK(code_of(R"({"command": "verify", "p": []})") == bad);
  CHECK(code_of(R"({"command": "verify", "seed": -1})") == bad);
  CHECK(code_of(R"({"command": "verify", "N": "four"})") == bad);
  CHECK(code_of(R"({"command": "verify", "format": "xml"})") == bad);
  CHECK(code_of(R"({"command": "verify", "colour": 1})") == bad);
  CHECK(code_of(R"({"command": "verify", "N": 3, "start_depth": 4})") == bad);
  CHECK(code_of(R"({"command": "verify", "weights": {"kind": "geometric"}})") == bad);
  CHECK(code_of(R"({"command": "verify", "weights": {"kind": "dyadic", "scale": 0}})") == bad);
  CHECK(code_of(R"({"command": "verify", "N": 4})") == 0);
}

TEST_CASE("runner exit codes and reproducibility") {
  SUBCASE("verify passes on the identity regime") {
    const auto r = run_config_text(R"({"command": "verify", "N": 4, "p": 2, "weights": "dyadic"})");
    CHECK(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.output);
    CHECK(j["passed"] == true);
    CHECK(j["checks"].size() > 15);
  }
  SUBCASE("a failed check is exit 1") {
    const auto r = run_config_text(R"({"command": "verify", "N": 3, "p": 3, "weights": "unit"})");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::ordered_json::parse(r.output);
    CHECK(verify_exit_code(j.dump()) == 0);
    j["checks"][2]["passed"] = false;
    CHECK(verify_exit_code(j.dump()) == 1);
    CHECK(verify_exit_code(R"({"checks": []})") == 0);
    CHECK(verify_exit_code("{}") == 2);
    CHECK(verify_exit_code("garbage") == 2);
  }
  SUBCASE("malformed input is exit 2") {
    CHECK(run_config_text("{").exit_code == 2);
    CHECK(run_config_text(R"({"command": "simulate", "trials": 10})").exit_code == 2);  // no seed
    CHECK(run_config_text(R"({"command": "kernels", "N": 11, "matrices": ["K"]})").exit_code == 2);
    CHECK(run_config_text(R"({"command": "extend", "N": 3, "leaf_values": "delta:8"})").exit_code == 2);
    CHECK(run_config_text(R"({"command": "extend", "N": 3, "leaf_values": "/nonexistent.json"})").exit_code == 2);
    CHECK(run_config_text(R"({"command": "extend", "p": [2, 3], "seed": 1})").exit_code == 2);
  }
  SUBCASE("non-convergence is exit 3 with a diagnostic") {
    const auto r = run_config_text(R"({"command": "extend", "N": 6, "p": 4, "seed": 3, "max_iterations": 1})");
    CHECK(r.exit_code == 3);
    const auto j = nlohmann::json::parse(r.output);
    CHECK(j["error"] == "not_converged");
    CHECK(j["seed"] == 3);
    CHECK(j["config_digest"].get<std::string>().size() == 16);
  }
  SUBCASE("outputs embed digest and seed") {
    RunConfig c;
    c.command = "opnorm";
    c.n = 5;
    c.p = {3.0};
    c.seed = 11;
    c.samples = 2;
    const auto r = run(c);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.output);
    CHECK(j["config_digest"] == hex_digest(config_digest(c)));
    CHECK(j["seed"] == 11);
    CHECK(run(c).output == r.output);

    c.command = "kernels";
    c.seed.reset();
    c.format = OutputFormat::csv;
    const auto k = run(c);
    REQUIRE(k.exit_code == 0);
    CHECK(k.output.rfind("# {\"command\":\"kernels\",\"config_digest\":\"" + hex_digest(config_digest(c)), 0) == 0);
    CHECK(k.output.find("# matrix K0 62x62") != std::string::npos);
  }
  SUBCASE("output file") {
    RunConfig c;
    c.command = "kernels";
    c.n = 3;
    c.matrices = {"P"};
    c.output = "kernels_test_out.csv";
    const auto r = run(c);
    REQUIRE(r.exit_code == 0);
    std::ifstream in(c.output);
    const std::string disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(disk == r.output);
    std::remove(c.output.c_str());
    c.output = "/nonexistent/dir/out.csv";
    CHECK(run(c).exit_code == 2);
  }
}

TEST_CASE("sharded simulation does not depend on the thread count") {
  const auto prof = WalkProfile::from_weights(TreeWeights::dyadic(5), 1.5);
  const char* saved = std::getenv("TREE_SOBOLEV_THREADS");
  const std::string restore = saved ? saved : "";
  setenv("TREE_SOBOLEV_THREADS", "1", 1);
  CHECK(worker_threads() == 1);
  const auto serial = simulate_sharded(prof, 2, 5000, 9);
  setenv("TREE_SOBOLEV_THREADS", "8", 1);
  CHECK(worker_threads() == 8);
  const auto threaded = simulate_sharded(prof, 2, 5000, 9);
  if (saved) {
    setenv("TREE_SOBOLEV_THREADS", restore.c_str(), 1);
  } else {
    unsetenv("TREE_SOBOLEV_THREADS");
  }
  CHECK(threaded.trials == 5000);
  CHECK(serial.min_depth_counts == threaded.min_depth_counts);
  CHECK(serial.leaf_counts == threaded.leaf_counts);
  CHECK(simulate_sharded(prof, 2, 5000, 10).leaf_counts != threaded.leaf_counts);
}
