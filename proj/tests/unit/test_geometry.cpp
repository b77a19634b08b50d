#include <doctest.h>

#include <cmath>
#include <random>

#include "gd/geometry.hpp"

using namespace gd;

TEST_CASE("rectangle domain basics") {
  Domain dom = make_rectangle(1.0, 1.0, 0.25);
  CHECK(dom.vertices.size() == 3);  // (1,0), (1,1), (0,1)
  CHECK(dom.vertices[1].s == doctest::Approx(1.0));
  CHECK(dom.vertices[1].t == doctest::Approx(1.0));
  CHECK(dom.arcs.size() == 2);
  CHECK(dom.arcs[0].kind == ArcKind::flat_t);
  CHECK(dom.arcs[1].kind == ArcKind::flat_s);
  CHECK(dom.total_length == doctest::Approx(2.0));

  Point A, B;
  dom.corner_points(0.3, 0.4, &A, &B);
  CHECK(A.s == doctest::Approx(1.0));
  CHECK(A.t == doctest::Approx(0.4));
  CHECK(B.s == doctest::Approx(0.3));
  CHECK(B.t == doctest::Approx(1.0));
}

TEST_CASE("quarter disk domain") {
  Domain dom = make_quarter_disk(1.0, 1.0 / 32);
  CHECK(dom.vertices.size() == 2);
  CHECK(dom.arcs.size() == 1);
  CHECK(dom.arcs[0].kind == ArcKind::oblique);

  // corner points on the 3-4-5 triangle
  Point A, B;
  dom.corner_points(0.6, 0.0, &A, &B);
  CHECK(A.s == doctest::Approx(1.0));
  CHECK(A.t == doctest::Approx(0.0));
  CHECK(B.s == doctest::Approx(0.6));
  CHECK(B.t == doctest::Approx(0.8));

  // outward normal is radial
  double n1, n2;
  dom.arcs[0].normal(0.6, 0.8, &n1, &n2);
  CHECK(n1 == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(n2 == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("staircase domain") {
  Domain dom = make_staircase(0.25);
  CHECK(dom.vertices.size() == 5);
  CHECK(dom.arcs.size() == 4);
  for (const auto& a : dom.arcs) CHECK(a.is_flat());

  Point A, B;
  dom.corner_points(1.5, 0.5, &A, &B);
  CHECK(A.s == doctest::Approx(2.0));
  CHECK(B.t == doctest::Approx(1.0));

  Zones z = dom.zone_decomposition();
  int degenerate = 0;
  for (const auto& tr : z.triangles) degenerate += tr.degenerate;
  CHECK(degenerate == 4);
  int nonempty = 0;
  for (const auto& q : z.rects) nonempty += !q.empty;
  CHECK(nonempty == 3);  // three unit squares tile the staircase
}

TEST_CASE("directional derivatives (2.4)") {
  double dmu, dn, dns;
  directional_derivatives(1, 0, 1, 0, &dmu, &dn, &dns);
  CHECK(dmu == doctest::Approx(0.0));
  CHECK(dn == doctest::Approx(1.0));
  CHECK(dns == doctest::Approx(0.0));
  directional_derivatives(0, 1, 0, 1, &dmu, &dn, &dns);
  CHECK(dmu == doctest::Approx(0.0));
  CHECK(dn == doctest::Approx(1.0));
  CHECK(dns == doctest::Approx(0.0));
  // phi_mu = -n2 phi_s + n1 phi_t per (2.4): -0.8 + 0.6 = -0.2
  directional_derivatives(1, 1, 0.6, 0.8, &dmu, &dn, &dns);
  CHECK(dmu == doctest::Approx(-0.2));
  CHECK(dn == doctest::Approx(1.4));
  CHECK(dns == doctest::Approx(1.4));
}

TEST_CASE("zone decomposition of quarter disk") {
  Domain plain = make_quarter_disk(1.0, 0.25);
  Zones z0 = plain.zone_decomposition();
  CHECK(z0.triangles.size() == 1);
  CHECK_FALSE(z0.triangles[0].degenerate);
  CHECK(z0.rects.empty());

  double c = std::sqrt(0.5);
  Domain split = make_quarter_disk(1.0, 0.25, {{c, c}});
  CHECK(split.vertices.size() == 3);
  Zones z1 = split.zone_decomposition();
  REQUIRE(z1.triangles.size() == 2);
  REQUIRE(z1.rects.size() == 1);
  CHECK_FALSE(z1.triangles[0].degenerate);
  CHECK_FALSE(z1.triangles[1].degenerate);
  // V_{0,1} = (s(P_1), t(P_0)) and the single rectangle fills [0,c]x[0,c]
  CHECK(z1.triangles[0].corner.s == doctest::Approx(c));
  CHECK(z1.triangles[0].corner.t == doctest::Approx(0.0));
  CHECK(z1.rects[0].s_hi == doctest::Approx(c));
  CHECK(z1.rects[0].t_hi == doctest::Approx(c));
  CHECK(z1.rects[0].s_lo == doctest::Approx(0.0));
  CHECK(z1.rects[0].t_lo == doctest::Approx(0.0));
  CHECK((z1.rects[0].k - z1.rects[0].j) == 1);
}

TEST_CASE("integrate_E oracle values") {
  Domain disk = make_quarter_disk(1.0, 1.0 / 64);
  auto one = [](double, double) { return 1.0; };
  double area = disk.integrate_E(one, 0.0, 0.0);
  CHECK(area == doctest::Approx(M_PI / 4).epsilon(5e-4));

  Domain rect = make_rectangle(1.0, 1.0, 1.0 / 16);
  CHECK(rect.integrate_E(one, 0.3, 0.4) == doctest::Approx(0.7 * 0.6));
  auto sigma = [](double s, double) { return s; };
  CHECK(rect.integrate_E(sigma, 0.0, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("integrate_E converges at O(h^2) on the quarter disk") {
  auto one = [](double, double) { return 1.0; };
  double e_prev = -1;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    Domain disk = make_quarter_disk(1.0, h);
    double err = std::fabs(disk.integrate_E(one, 0.0, 0.0) - M_PI / 4);
    if (e_prev > 0) CHECK(err < 0.45 * e_prev);  // better than first order
    e_prev = err;
  }
}

TEST_CASE("integrate_arc oracle values") {
  Domain disk = make_quarter_disk(1.0, 1.0 / 64);
  auto one = [](int, const BoundaryArc::Sample&) { return 1.0; };
  CHECK(disk.integrate_arc(one, 0.0, 0.0) == doctest::Approx(M_PI / 2).epsilon(1e-3));
  // target on the arc: empty sub-arc
  CHECK(disk.integrate_arc(one, 0.6, 0.8) == doctest::Approx(0.0).epsilon(1e-8));

  Domain rect = make_rectangle(1.0, 1.0, 1.0 / 16);
  CHECK(rect.integrate_arc(one, 0.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("Fubini identity (A.2)") {
  // for smooth phi: Int_G Int_W(s,t) phi dA dA = Int_G Int_E(s,t) phi~ dA dA
  Domain disk = make_quarter_disk(1.0, 1.0 / 24);
  auto phi = [](double s, double t, double sig, double tau) {
    return std::sin(s + 2 * tau) + sig * t;
  };
  // LHS: integrate over (s,t) in G of Int_{W(s,t)} phi(s,t,sig,tau)
  // using E-integrals only: Int_W f(sig,tau) = Int over G of indicator...
  // W(s,t) integral realized by integrate_E at (0,0) with clipped field.
  auto W_int = [&](double s, double t) {
    auto inner = [&](double sig, double tau) {
      return (sig <= s && tau <= t) ? phi(s, t, sig, tau) : 0.0;
    };
    // integrate over the rectangle [0,s]x[0,t] directly (W stays in G)
    int nq = 24;
    double acc = 0;
    for (int i = 0; i < nq; ++i)
      for (int k = 0; k < nq; ++k) {
        double w = (s / nq) * (t / nq);
        double sig = (i + 0.5) * s / nq, tau = (k + 0.5) * t / nq;
        acc += w * inner(sig, tau);
      }
    return acc;
  };
  auto E_int = [&](double s, double t) {
    auto inner = [&](double sig, double tau) { return phi(sig, tau, s, t); };
    return disk.integrate_E(inner, s, t);
  };
  double lhs = disk.integrate_E([&](double s, double t) { return W_int(s, t); }, 0, 0);
  double rhs = disk.integrate_E([&](double s, double t) { return E_int(s, t); }, 0, 0);
  CHECK(lhs == doctest::Approx(rhs).epsilon(2e-3));
}

TEST_CASE("differentiation formula (A.6)") {
  // d/ds Int_E(s,t) phi = -Int_t^{B_s} phi(s,tau) dtau + Int_E phi_s
  Domain disk = make_quarter_disk(1.0, 1.0 / 64);
  auto phi = [](double S, double T, double sig, double tau) {
    return std::cos(S) * (1 + sig * tau) + T * sig;
  };
  auto phis = [](double S, double T, double sig, double tau) {
    (void)T;
    return -std::sin(S) * (1 + sig * tau);
  };
  double s = 0.35, t = 0.4, h = 1e-5;
  auto Ie = [&](double S) {
    return disk.integrate_E(
        [&](double sig, double tau) { return phi(S, t, sig, tau); }, S, t);
  };
  double lhs = (Ie(s + h) - Ie(s - h)) / (2 * h);
  double topb = disk.theta2_env(s);
  int nq = 2000;
  double line = 0;
  for (int i = 0; i < nq; ++i) {
    double tau = t + (topb - t) * (i + 0.5) / nq;
    line += phi(s, t, s, tau) * (topb - t) / nq;
  }
  double rhs = -line + disk.integrate_E(
                           [&](double sig, double tau) { return phis(s, t, sig, tau); },
                           s, t);
  CHECK(lhs == doctest::Approx(rhs).epsilon(2e-3));
}

TEST_CASE("arc differentiation constant (A.18)") {
  // dmu_s/ds = -sqrt(1 + theta2'(s)^2) on the oblique arc
  Domain disk = make_quarter_disk(1.0, 1.0 / 128);
  double s = 0.5, h = 1e-5;
  double dmu = (disk.mu_of_s(s + h) - disk.mu_of_s(s - h)) / (2 * h);
  double th2p = disk.arcs[0].dtheta2(s);
  CHECK(dmu == doctest::Approx(-std::sqrt(1 + th2p * th2p)).epsilon(2e-3));
}

TEST_CASE("vertex sets: unit square hand enumeration") {
  // frozen hand enumeration of Def. 4.2 on the unit square
  Domain rect = make_rectangle(1.0, 1.0, 0.25);

  // P_0 = (1,0): the right side lies after it (vertical), nothing precedes
  VertexSets v0 = rect.vertex_sets({1.0, 0.0});
  REQUIRE(v0.L_t.has_value());
  CHECK(v0.L_t->second.t == doctest::Approx(1.0));
  CHECK(v0.T == std::vector<int>{1});
  CHECK_FALSE(v0.L_s.has_value());
  CHECK(v0.S.empty());

  // P_1 = (1,1): subsequent points are horizontal, preceding are vertical,
  // so all four sets are empty and V(P) = {P}, L(P) = {P}
  VertexSets v1 = rect.vertex_sets({1.0, 1.0});
  CHECK_FALSE(v1.L_t.has_value());
  CHECK_FALSE(v1.L_s.has_value());
  CHECK(v1.T.empty());
  CHECK(v1.S.empty());

  // P_2 = (0,1): the top side precedes it (horizontal)
  VertexSets v2 = rect.vertex_sets({0.0, 1.0});
  REQUIRE(v2.L_s.has_value());
  CHECK(v2.L_s->second.s == doctest::Approx(1.0));
  CHECK(v2.S == std::vector<int>{1});
  CHECK_FALSE(v2.L_t.has_value());
}

TEST_CASE("vertex sets: staircase at (1,1) and quarter disk") {
  Domain stair = make_staircase(0.25);
  VertexSets vs = stair.vertex_sets({1.0, 1.0});
  REQUIRE(vs.L_t.has_value());
  CHECK(vs.L_t->second.t == doctest::Approx(2.0));
  CHECK(vs.T == std::vector<int>{3});
  REQUIRE(vs.L_s.has_value());
  CHECK(vs.L_s->second.s == doctest::Approx(2.0));
  CHECK(vs.S == std::vector<int>{1});

  Domain disk = make_quarter_disk(1.0, 0.25);
  VertexSets vd = disk.vertex_sets({0.6, 0.8});
  CHECK_FALSE(vd.L_t.has_value());
  CHECK_FALSE(vd.L_s.has_value());
  CHECK(vd.T.empty());
  CHECK(vd.S.empty());
}

TEST_CASE("build_domain error paths") {
  // increasing theta2 -> NonMonotoneBoundary
  ArcSpec up{ArcSpec::Type::segment, {0.5, 0.2}, 0, {}};
  ArcSpec rest{ArcSpec::Type::segment, {0.0, 1.0}, 0, {}};
  CHECK_THROWS_AS(build_domain(1, 1, {ArcSpec{ArcSpec::Type::segment, {1.0, -0.5}, 0, {}}, up, rest},
                               {}, 0.25),
                  GdError);
  // disconnected curve
  ArcSpec a1{ArcSpec::Type::segment, {1.0, 0.5}, 0, {}};
  ArcSpec a2{ArcSpec::Type::segment, {0.0, 1.0}, 0, {}};
  Domain ok = build_domain(1, 1, {a1, a2}, {}, 0.25);
  CHECK(ok.vertices.size() == 3);
  ArcSpec bad_start{ArcSpec::Type::polyline, {}, 0, {{0.9, 0.5}, {0.0, 1.0}}};
  CHECK_THROWS_AS(build_domain(1, 1, {a1, bad_start}, {}, 0.25), GdError);
  // extra vertex off the curve
  CHECK_THROWS_AS(make_quarter_disk(1.0, 0.25, {{0.5, 0.5}}), GdError);
}

TEST_CASE("grid aligns vertex coordinates; zones tile G") {
  Domain stair = make_staircase(0.23);  // h that does not divide the spans
  for (const auto& p : stair.vertices) {
    CHECK_NOTHROW(stair.grid.index_s(p.s, 1e-10));
    CHECK_NOTHROW(stair.grid.index_t(p.t, 1e-10));
  }
  // region areas add to |G| = 3
  Zones z = stair.zone_decomposition();
  double area = 0;
  for (const auto& q : z.rects)
    if (!q.empty) area += (q.s_hi - q.s_lo) * (q.t_hi - q.t_lo);
  CHECK(area == doctest::Approx(3.0));
}

TEST_CASE("domain JSON export") {
  Domain disk = make_quarter_disk(1.0, 0.25);
  std::string js = disk.to_json();
  CHECK(js.find("\"vertices\"") != std::string::npos);
  CHECK(js.find("\"oblique\"") != std::string::npos);
  CHECK(js.find("\"grid\"") != std::string::npos);
}
