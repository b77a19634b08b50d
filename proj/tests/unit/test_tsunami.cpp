#include <doctest.h>

#include <cmath>

#include "gd/tsunami.hpp"

using namespace gd;

namespace {

BasinModel constant_basin() {
  // gc = 4, h = 1: beta(r) = r, A = t2 - t1 = 1, r-span 2
  BasinModel m;
  m.omega = 0.1;
  m.g = 9.81;
  m.c = 4.0 / 9.81;
  m.h = [](double) { return 1.0; };
  m.hp = [](double) { return 0.0; };
  m.hpp = [](double) { return 0.0; };
  m.r1 = 0;
  m.r2 = 2;
  m.t1 = 0;
  m.t2 = 1;
  return m;
}

BasinModel linear_basin() {
  // h = h0 + delta r with span chosen to satisfy (6.9):
  // beta(r) = 2 (sqrt(h0 + delta r) - sqrt(h0)) / delta
  BasinModel m;
  m.omega = 0.05;
  m.g = 9.81;
  m.c = 4.0 / 9.81;
  double h0 = 1.0, delta = 0.5;
  m.h = [h0, delta](double r) { return h0 + delta * r; };
  m.hp = [delta](double) { return delta; };
  m.hpp = [](double) { return 0.0; };
  m.r1 = 0;
  m.t1 = 0;
  m.t2 = 1;
  // solve beta(r2) = sqrt(gc) (t2 - t1) = 2 for r2
  double target = 2.0 * delta / 2.0 + std::sqrt(h0);  // sqrt(h0+delta r2)
  m.r2 = (target * target - h0) / delta;
  return m;
}

}  // namespace

TEST_CASE("characteristic map: constant depth") {
  CharacteristicMap map = build_characteristic_map(constant_basin());
  CHECK(map.A == doctest::Approx(1.0));
  CHECK(map.residual_eq4 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(map.beta(1.0) == doctest::Approx(1.0).epsilon(1e-12));

  // straight characteristics: corners of the observation rectangle map to
  // the diamond corners
  Point c00 = map.to_char(0, 0);
  CHECK(c00.s + c00.t == doctest::Approx(-map.A));
  Point c21 = map.to_char(2, 1);
  CHECK(c21.s + c21.t == doctest::Approx(map.A));
  Point c01 = map.to_char(0, 1);
  Point c20 = map.to_char(2, 0);
  CHECK(c01.s - c01.t == doctest::Approx(-map.A));
  CHECK(c20.s - c20.t == doctest::Approx(map.A));
}

TEST_CASE("characteristic map: round trip and image") {
  CharacteristicMap map = build_characteristic_map(linear_basin());
  for (double r : {0.0, 0.37 * map.model.r2, 0.81 * map.model.r2, map.model.r2})
    for (double t : {0.0, 0.33, 1.0}) {
      Point c = map.to_char(r, t);
      CHECK(std::fabs(c.s + c.t) <= map.A + 1e-9);
      CHECK(std::fabs(c.s - c.t) <= map.A + 1e-9);
      double rr, tt;
      map.from_char(c.s, c.t, &rr, &tt);
      CHECK(rr == doctest::Approx(r).epsilon(1e-9));
      CHECK(tt == doctest::Approx(t).epsilon(1e-12));
    }
}

TEST_CASE("characteristic map: compatibility violations") {
  BasinModel bad = constant_basin();
  bad.r2 = 1.7;  // breaks (6.9)
  CHECK_THROWS_AS(build_characteristic_map(bad), GdError);

  BasinModel deep = constant_basin();
  deep.h = [](double r) { return 1.0 - 0.6 * r; };  // goes negative on [0,2]
  CHECK_THROWS_AS(build_characteristic_map(deep), GdError);
}

TEST_CASE("goursat dynamics: constant depth reduces to forcing + rotation") {
  CharacteristicMap map = build_characteristic_map(constant_basin());
  Dynamics d = goursat_dynamics(map);
  double x = 0.7, p = 0.3, q = -0.2, u = 1.0;
  EvalArgs a{0.1, -0.2, &x, &p, &q, &u};
  double f;
  d.f(a, &f);
  CHECK(f == doctest::Approx(-map.model.omega * map.model.omega * x +
                             0.25 * map.model.g * u));
  double fp, fq;
  d.f_p(a, &fp);
  d.f_q(a, &fq);
  CHECK(fp == doctest::Approx(0.0));
  CHECK(fq == doctest::Approx(0.0));
}

TEST_CASE("goursat dynamics: linear depth coefficients at probe points") {
  CharacteristicMap map = build_characteristic_map(linear_basin());
  Dynamics d = goursat_dynamics(map);
  double gc = map.model.g * map.model.c;
  for (Point c : {Point{0.1, 0.2}, Point{-0.3, 0.1}, Point{0.0, -0.4},
                  Point{0.25, 0.25}, Point{-0.2, -0.2}}) {
    double r = map.r_of_char(c.s, c.t);
    double hv = map.model.h(r);
    double cp_want = -0.375 * std::sqrt(gc) * 0.5 / std::sqrt(hv);  // h' = 0.5
    double x = 1.0, p = 1.0, q = 0.0, u = 0.0;
    EvalArgs a{c.s, c.t, &x, &p, &q, &u};
    double f;
    d.f(a, &f);
    // f = cp (q - p) + (gc h''/4 - omega^2) x with h'' = 0
    double want = cp_want * (q - p) - map.model.omega * map.model.omega * x;
    CHECK(f == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("reduction chain: solver output satisfies (6.5) and closes (6.1)") {
  // solve (6.12) in characteristic coordinates for a known smooth u, map v
  // back to physical (r,t), and verify by finite differences that
  // v_tt + 4 w^2 v - gc (h v)_rr = g u  and that the eq-(6.1) fields close.
  BasinModel mb = constant_basin();
  CharacteristicMap map = build_characteristic_map(mb);
  TsunamiSetup setup = quadrant_decompose(map, 1.0 / 48, 1e-4);
  auto u_rt = [](double r, double t) {
    return std::exp(-((r - 1.0) * (r - 1.0) / 0.18 + (t - 0.5) * (t - 0.5) / 0.08));
  };
  synth_observations(setup, u_rt, 0.0, 1);

  // Physical-grid stencil aligned with characteristic nodes: for constant
  // depth, r on multiples of 2h and t on multiples of h keep every stencil
  // point on a grid node, so sampling is exact and second differences clean.
  auto v_at = [&](double r, double t) {
    Point c = map.to_char(r, t);
    for (const auto& q : setup.quads) {
      double ss = c.s * q.es, tt = c.t * q.et;
      if (ss >= -1e-12 && tt >= -1e-12 && q.dom.contains(std::max(0.0, ss), std::max(0.0, tt)))
        return q.obs.sample1(q.dom.grid, ss, tt);
    }
    REQUIRE(false);
    return 0.0;
  };
  double gc = mb.g * mb.c;
  double hch = 1.0 / 48;
  double hr = 2 * hch, ht = hch;
  double worst = 0, scale = 0;
  for (int jr = 19; jr <= 29; jr += 2)       // r in [0.79, 1.21]
    for (int kt = 16; kt <= 32; kt += 4) {   // t in [0.33, 0.67]
      double r = jr * hr, t = kt * ht;
      double vtt = (v_at(r, t + ht) - 2 * v_at(r, t) + v_at(r, t - ht)) / (ht * ht);
      double vrr = (v_at(r + hr, t) - 2 * v_at(r, t) + v_at(r - hr, t)) / (hr * hr);
      double lhs = vtt + 4 * mb.omega * mb.omega * v_at(r, t) - gc * vrr;
      double rhs = mb.g * u_rt(r, t);
      worst = std::max(worst, std::fabs(lhs - rhs));
      scale = std::max(scale, std::fabs(rhs));
    }
  CHECK(worst / scale < 0.02);
}

TEST_CASE("quadrant decomposition: four congruent triangles, symmetric costs") {
  CharacteristicMap map = build_characteristic_map(constant_basin());
  TsunamiSetup setup = quadrant_decompose(map, 1.0 / 32, 1e-4);
  for (const auto& q : setup.quads) {
    CHECK(q.dom.a == doctest::Approx(map.A));
    CHECK(q.dom.arcs.size() == 1);
    CHECK(q.dom.arcs[0].kind == ArcKind::oblique);
  }
  // symmetric observations (u_true symmetric about the diamond center in
  // characteristic coordinates) give equal sub-costs
  auto u_sym = [&](double r, double t) {
    Point c = map.to_char(r, t);
    return std::exp(-(c.s * c.s + c.t * c.t) / 0.1);
  };
  synth_observations(setup, u_sym, 0.0, 3);
  double J[4];
  for (int qi = 0; qi < 4; ++qi) {
    const auto& q = setup.quads[qi];
    StateSolution st = solve_state(q.dom, q.spec, q.u_true);
    J[qi] = cost(q.dom, q.spec, st, q.u_true).total;
  }
  for (int qi = 1; qi < 4; ++qi) CHECK(J[qi] == doctest::Approx(J[0]).epsilon(1e-9));
}

TEST_CASE("synthetic observations: deterministic, zero-noise equals forward") {
  CharacteristicMap map = build_characteristic_map(constant_basin());
  TsunamiSetup a = quadrant_decompose(map, 1.0 / 16, 1e-4);
  TsunamiSetup b = quadrant_decompose(map, 1.0 / 16, 1e-4);
  auto u_rt = [](double r, double t) { return r * (2 - r) * t; };
  synth_observations(a, u_rt, 0.01, 42);
  synth_observations(b, u_rt, 0.01, 42);
  for (int qi = 0; qi < 4; ++qi)
    for (size_t v = 0; v < a.quads[qi].obs.v.size(); ++v)
      CHECK(a.quads[qi].obs.v[v] == b.quads[qi].obs.v[v]);

  TsunamiSetup c = quadrant_decompose(map, 1.0 / 16, 1e-4);
  synth_observations(c, [](double, double) { return 0.0; }, 0.0, 1);
  for (int qi = 0; qi < 4; ++qi) CHECK(c.quads[qi].obs.max_abs() == 0.0);
}

TEST_CASE("keystone gradient oracle on a tsunami quadrant") {
  CharacteristicMap map = build_characteristic_map(constant_basin());
  TsunamiSetup setup = quadrant_decompose(map, 1.0 / 32, 1e-3);
  auto u_rt = [](double r, double t) {
    return std::exp(-((r - 1.0) * (r - 1.0) + (t - 0.5) * (t - 0.5)) / 0.1);
  };
  synth_observations(setup, u_rt, 0.0, 7);
  const auto& q = setup.quads[1];  // a reflected quadrant
  Field u = Field::full(q.dom.grid, 1);
  u.fill(0.1);
  StateSolution st = solve_state(q.dom, q.spec, u);
  FTerms ft = compute_F_terms(q.dom, q.spec, st, u);
  CostateSolution cs = sweep_costate(q.dom, q.spec, st, u, ft);
  Field du = Field::full(q.dom.grid, 1);
  for (int i = 0; i < q.dom.grid.ns(); ++i)
    for (int k = 0; k < q.dom.grid.nt(); ++k)
      du.at(i, k)[0] = std::cos(2 * q.dom.grid.s[i]) + q.dom.grid.t[k];
  double adj = pair_with_costate(q.dom, q.spec, st, cs, u, du);
  double fd = fd_cost_derivative(q.dom, q.spec, u, du, 1e-4);
  CHECK(std::fabs(adj - fd) / std::fabs(fd) < 4e-3);
}

TEST_CASE("inverse solve: zero truth recovers zero") {
  CharacteristicMap map = build_characteristic_map(constant_basin());
  TsunamiSetup setup = quadrant_decompose(map, 1.0 / 16, 1e-4);
  synth_observations(setup, [](double, double) { return 0.0; }, 0.0, 5);
  OptimizeOptions oo;
  oo.tol = 1e-9;
  oo.max_iter = 50;
  InverseResult res = inverse_solve(setup, oo);
  for (int qi = 0; qi < 4; ++qi) CHECK(res.u_est[qi].max_abs() < 1e-8);
  CHECK(res.J == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("inverse solve: noiseless twin recovery improves as lambda shrinks") {
  CharacteristicMap map = build_characteristic_map(constant_basin());
  auto u_rt = [](double r, double t) {
    return std::exp(-((r - 1.0) * (r - 1.0) / 0.18 + (t - 0.5) * (t - 0.5) / 0.08));
  };
  double prev = 2.0;
  for (double lambda : {1e-2, 1e-4}) {
    TsunamiSetup setup = quadrant_decompose(map, 1.0 / 24, lambda);
    synth_observations(setup, u_rt, 0.0, 11);
    OptimizeOptions oo;
    oo.tol = 1e-7;
    oo.max_iter = 600;
    InverseResult res = inverse_solve(setup, oo);
    CHECK(res.rel_l2_error >= 0);
    CHECK(res.rel_l2_error < prev);
    prev = res.rel_l2_error;
  }
  CHECK(prev < 0.45);
}
