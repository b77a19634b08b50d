#include <doctest.h>

#include <filesystem>

#include "gd/io.hpp"
#include "gd/runner.hpp"

using namespace gd;

namespace {
std::string tmpdir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gdtest_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}
}  // namespace

TEST_CASE("config: valid minimal document") {
  RunConfig cfg = parse_config(R"({
    "version": 1, "command": "forward", "seed": 7, "hmax": 0.125,
    "problem": {"id": "lq_rect"}
  })");
  CHECK(cfg.command == "forward");
  CHECK(cfg.seed == 7);
  CHECK(cfg.hmax == doctest::Approx(0.125));
  BuiltinProblem bp = build_problem(cfg);
  CHECK(bp.spec.name == "lq_rect");
}

TEST_CASE("config: unknown keys are rejected everywhere") {
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"version":1,"command":"forward",
                      "problem":{"id":"lq_rect"},"bogus":3})"),
      doctest::Contains("unknown key"), GdError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"version":1,"command":"forward",
                      "problem":{"id":"lq_rect","oops":1}})"),
      doctest::Contains("unknown key"), GdError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"version":1,"command":"optimize",
                      "problem":{"id":"lq_rect"},
                      "optimize":{"tol":1e-5,"extra":2}})"),
      doctest::Contains("unknown key"), GdError);
}

TEST_CASE("config: validation names the offending field") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"version":1})"),
                       doctest::Contains("command"), GdError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"version":2,"command":"forward",
                      "problem":{"id":"lq_rect"}})"),
      doctest::Contains("version"), GdError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"version":1,"command":"forward",
                      "problem":{"id":"nope"}})"),
      doctest::Contains("problem id"), GdError);
  // tsunami without a depth profile
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"version":1,"command":"tsunami-twin",
                      "tsunami":{"r_range":[0,2],"t_range":[0,1]}})"),
      doctest::Contains("depth"), GdError);
}

TEST_CASE("config: custom domain block") {
  RunConfig cfg = parse_config(R"({
    "version": 1, "command": "forward", "hmax": 0.25,
    "problem": {"id": "lq_rect"},
    "domain": {"type": "custom", "a": 1, "b": 1,
               "arcs": [{"kind": "segment", "to": [1, 0.5]},
                        {"kind": "segment", "to": [0, 1]}]}
  })");
  BuiltinProblem bp = build_problem(cfg);
  CHECK(bp.domain.vertices.size() == 3);
  CHECK(bp.domain.arcs[1].kind == ArcKind::oblique);
}

TEST_CASE("runner: forward command writes artifacts") {
  std::string out = tmpdir("fwd");
  std::string err;
  int code = run_config_text(R"({
    "version":1,"command":"forward","seed":3,"hmax":0.125,
    "problem":{"id":"lq_rect"},"forward":{"control":0.5}
  })", out, &err);
  CAPTURE(err);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(out + "/state.csv"));
  CHECK(std::filesystem::exists(out + "/residuals.csv"));
  CHECK(std::filesystem::exists(out + "/domain.json"));
  CHECK(std::filesystem::exists(out + "/manifest.json"));
  std::string manifest = read_text_file(out + "/manifest.json");
  CHECK(manifest.find("\"seed\"") != std::string::npos);
  CHECK(manifest.find("\"wall_time_s\"") != std::string::npos);
}

TEST_CASE("runner: config error exit code and message") {
  std::string err;
  int code = run_config_text("{not json", "", &err);
  CHECK(code == 2);
  CHECK(!err.empty());
  code = run_config_text(R"({"version":1,"command":"forward",
                            "problem":{"id":"lq_rect"},"bad":1})", "", &err);
  CHECK(code == 2);
}

TEST_CASE("runner: adjoint-check on the quarter disk LQ problem") {
  std::string out = tmpdir("adjchk");
  std::string err;
  int code = run_config_text(R"({
    "version":1,"command":"adjoint-check","seed":11,"hmax":0.03125,
    "problem":{"id":"lq_disk"},
    "adjoint_check":{"checkpoints":8,"tol":0.01}
  })", out, &err);
  CAPTURE(err);
  CHECK(code == 0);
  std::string rep = read_text_file(out + "/report.json");
  CHECK(rep.find("\"pass\": true") != std::string::npos);
  CHECK(std::filesystem::exists(out + "/costate_sweep.csv"));
}

TEST_CASE("runner: gradient-check keystone report") {
  std::string out = tmpdir("gradchk");
  std::string err;
  int code = run_config_text(R"({
    "version":1,"command":"gradient-check","seed":5,"hmax":0.03125,
    "problem":{"id":"lq_rect"},
    "gradient_check":{"directions":3,"eps":1e-4,"tol":4e-3}
  })", out, &err);
  CAPTURE(err);
  CHECK(code == 0);
  std::string rep = read_text_file(out + "/report.json");
  CHECK(rep.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("runner: determinism of tsunami-twin CSV output") {
  std::string cfg = R"({
    "version":1,"command":"tsunami-twin","seed":99,"hmax":0.0625,
    "tsunami":{"omega":0.1,"g":9.81,"c":0.40774719673802,
               "depth":{"id":"constant","h0":1.0},
               "r_range":[0,2],"t_range":[0,1],
               "noise":0.01,
               "u_true":{"id":"gauss","amp":1.0,"rc":1.0,"tc":0.5,"wr":0.4,"wt":0.3}}
  })";
  std::string out1 = tmpdir("twin1"), out2 = tmpdir("twin2");
  std::string err;
  CHECK(run_config_text(cfg, out1, &err) == 0);
  CHECK(run_config_text(cfg, out2, &err) == 0);
  CHECK(read_text_file(out1 + "/observations.csv") ==
        read_text_file(out2 + "/observations.csv"));
  CHECK(read_text_file(out1 + "/u_true.csv") ==
        read_text_file(out2 + "/u_true.csv"));
}
