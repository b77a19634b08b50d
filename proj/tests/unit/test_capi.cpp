#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "goursat/goursat.h"

TEST_CASE("capi: domain lifecycle and queries") {
  gd_domain* dom = nullptr;
  CHECK(gd_domain_create(R"({"type":"quarter_disk","radius":1.0,"hmax":0.125})",
                         &dom) == GD_OK);
  REQUIRE(dom != nullptr);
  int nv = 0;
  CHECK(gd_domain_vertex_count(dom, &nv) == GD_OK);
  CHECK(nv == 2);
  int ns = 0, nt = 0;
  CHECK(gd_domain_grid_size(dom, &ns, &nt) == GD_OK);
  CHECK(ns == 9);
  char* js = nullptr;
  CHECK(gd_domain_to_json(dom, &js) == GD_OK);
  CHECK(std::strstr(js, "vertices") != nullptr);
  gd_string_free(js);
  gd_domain_destroy(dom);

  gd_domain* bad = nullptr;
  CHECK(gd_domain_create(R"({"type":"dodecahedron"})", &bad) == GD_ERR_CONFIG);
  CHECK(bad == nullptr);
  CHECK(std::strlen(gd_last_error()) > 0);
}

TEST_CASE("capi: state solve, cost, and co-state round trip") {
  gd_problem* prob = nullptr;
  REQUIRE(gd_problem_create_builtin("lq_rect", "{\"lambda\":0.1}", 1.0 / 16,
                                    &prob) == GD_OK);
  int n = 0, m = 0;
  CHECK(gd_problem_dims(prob, &n, &m) == GD_OK);
  CHECK(n == 1);
  CHECK(m == 1);
  const gd_domain* dom = nullptr;
  CHECK(gd_problem_domain(prob, &dom) == GD_OK);
  int ns = 0, nt = 0;
  CHECK(gd_domain_grid_size(dom, &ns, &nt) == GD_OK);

  std::vector<double> u(static_cast<size_t>(ns) * nt * m, 0.25);
  gd_state* st = nullptr;
  REQUIRE(gd_solve_state(prob, u.data(), u.size(), &st) == GD_OK);
  int iters = 0;
  CHECK(gd_state_iterations(st, &iters) == GD_OK);
  CHECK(iters > 0);
  double xv = -1;
  CHECK(gd_state_eval(st, 0.5, 0.5, &xv, 1) == GD_OK);
  CHECK(std::isfinite(xv));

  double total = 0, area = 0, arc = 0, vertex = 0;
  CHECK(gd_cost_eval(prob, st, u.data(), u.size(), &total, &area, &arc,
                     &vertex) == GD_OK);
  CHECK(total == doctest::Approx(area + arc + vertex));
  CHECK(total > 0);

  gd_costate* cs = nullptr;
  REQUIRE(gd_costate_sweep(prob, st, u.data(), u.size(), &cs) == GD_OK);
  double psi_sw = 0, psi_qd = 0;
  CHECK(gd_costate_eval(cs, 0.53125, 0.40625, &psi_sw, 1) == GD_OK);
  CHECK(gd_costate_quadrature(prob, st, u.data(), u.size(), 0.53125, 0.40625,
                              &psi_qd, 1) == GD_OK);
  CHECK(psi_sw == doctest::Approx(psi_qd).epsilon(5e-3));

  gd_costate_destroy(cs);
  gd_state_destroy(st);
  gd_problem_destroy(prob);
}

TEST_CASE("capi: argument validation") {
  CHECK(gd_solve_state(nullptr, nullptr, 0, nullptr) == GD_ERR_INVALID_ARGUMENT);
  gd_problem* prob = nullptr;
  REQUIRE(gd_problem_create_builtin("lq_rect", nullptr, 0.25, &prob) == GD_OK);
  gd_state* st = nullptr;
  std::vector<double> wrong(3, 0.0);
  CHECK(gd_solve_state(prob, wrong.data(), wrong.size(), &st) ==
        GD_ERR_INVALID_ARGUMENT);
  CHECK(gd_problem_create_builtin("unknown_problem", nullptr, 0.25, &prob) ==
        GD_ERR_CONFIG);
  gd_problem_destroy(prob);
}

TEST_CASE("capi: run driver executes a config end to end") {
  auto out = std::filesystem::temp_directory_path() / "gdtest_capi_run";
  std::filesystem::remove_all(out);
  int code = -1;
  gd_status st = gd_run(R"({
    "version":1,"command":"forward","seed":1,"hmax":0.25,
    "problem":{"id":"lq_rect"}
  })", out.string().c_str(), &code);
  CHECK(st == GD_OK);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(out / "state.csv"));

  code = -1;
  st = gd_run(R"({"version":1,"command":"forward"})", nullptr, &code);
  CHECK(st == GD_OK);
  CHECK(code == 2);  // missing problem block
  CHECK(gd_version() == std::string("0.1.0"));
}
