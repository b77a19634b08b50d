#include "tsunami.hpp"

#include <cmath>
#include <random>

namespace gd {

namespace {

// adaptive Simpson on [a,b]
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15 * tol)
    return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12) {
  if (near(a, b, 1e-15)) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

double CharacteristicMap::beta(double r) const {
  auto integrand = [&](double rho) {
    double hv = model.h(rho);
    require(hv > 0, ErrorCode::invalid_argument, "DepthNonPositive: h(r) <= 0");
    return 1.0 / std::sqrt(hv);
  };
  return integrate(integrand, 0.0, r);
}

double CharacteristicMap::beta_inv(double b) const {
  // monotone bisection + Newton (beta' = 1/sqrt(h) > 0)
  double lo = std::min(0.0, model.r1), hi = model.r2;
  double blo = beta(lo), bhi = beta(hi);
  while (b < blo) { lo -= 0.5 * (model.r2 - model.r1) + 1e-6; blo = beta(lo); }
  while (b > bhi) { hi += 0.5 * (model.r2 - model.r1) + 1e-6; bhi = beta(hi); }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    double br = beta(r);
    double err = br - b;
    if (std::fabs(err) < 1e-13) break;
    (err > 0 ? hi : lo) = r;
    double step = err * std::sqrt(model.h(r));  // Newton: beta' = h^{-1/2}
    double rn = r - step;
    r = (rn > lo && rn < hi) ? rn : 0.5 * (lo + hi);
  }
  return r;
}

Point CharacteristicMap::to_char(double r, double t) const {
  double b = beta(r) / sqrt_gc;
  return {s0 + t + b, t0p + t - b};
}

void CharacteristicMap::from_char(double s, double tp, double* r, double* t) const {
  *t = 0.5 * (s + tp - s0 - t0p);
  double b = sqrt_gc * 0.5 * (s - tp - s0 + t0p);
  *r = beta_inv(b);
}

double CharacteristicMap::r_of_char(double s, double tp) const {
  double r, t;
  from_char(s, tp, &r, &t);
  return r;
}

CharacteristicMap build_characteristic_map(const BasinModel& model,
                                           double tol_geom) {
  CharacteristicMap map;
  map.model = model;
  map.sqrt_gc = std::sqrt(model.g * model.c);
  map.beta_r1 = map.beta(model.r1);
  map.beta_r2 = map.beta(model.r2);
  double lhs = map.beta_r2 - map.beta_r1;
  double rhs = map.sqrt_gc * (model.t2 - model.t1);
  require(std::fabs(lhs - rhs) <= tol_geom * std::max(1.0, std::fabs(rhs)),
          ErrorCode::invalid_argument,
          "CompatibilityViolated: beta(r2)-beta(r1) != sqrt(gc)(t2-t1)");

  map.A = model.t2 - model.t1;
  double sum = -(model.t1 + model.t2);                      // s0 + t0'
  double dif = map.A - 2.0 / map.sqrt_gc * map.beta_r2;     // s0 - t0'
  map.s0 = 0.5 * (sum + dif);
  map.t0p = 0.5 * (sum - dif);
  map.residual_eq4 = map.A + dif + 2.0 / map.sqrt_gc * map.beta_r1;
  require(std::fabs(map.residual_eq4) <= 1e-8 * std::max(1.0, map.A),
          ErrorCode::invalid_argument, "(6.11) fourth-equation residual too large");
  return map;
}

Dynamics goursat_dynamics(const CharacteristicMap& map) {
  // Characteristic form of  v_tt + 4 w^2 v - gc (h v)_rr = g u  under (6.7):
  // with S = d/ds + d/dt', D = d/ds - d/dt' one has d/dt = S and
  // d/dr = D / sqrt(gc h), so gc (h v)_rr = D^2 v + (3/2) sqrt(gc) h'/sqrt(h)
  // D v + gc h'' v and S^2 - D^2 = 4 d^2/ds dt', giving
  //   v_st' = -(3/8) sqrt(gc) h'/sqrt(h) (v_t' - v_s)
  //           + (gc h''/4 - w^2) v + (g/4) u.
  Dynamics d;
  d.n = d.m = 1;
  double gc = map.model.g * map.model.c;
  double om2 = map.model.omega * map.model.omega;
  auto coef = [map, gc, om2](double s, double tp, double* cp, double* cx) {
    double r = map.r_of_char(s, tp);
    double hv = map.model.h(r);
    *cp = -0.375 * std::sqrt(gc) * map.model.hp(r) / std::sqrt(hv);
    *cx = 0.25 * gc * map.model.hpp(r) - om2;
  };
  double gq = 0.25 * map.model.g;
  d.f = [coef, gq](const EvalArgs& a, double* o) {
    double cp, cx;
    coef(a.s, a.t, &cp, &cx);
    o[0] = cp * (a.q[0] - a.p[0]) + cx * a.x[0] + gq * a.u[0];
  };
  d.f_x = [coef](const EvalArgs& a, double* o) {
    double cp, cx;
    coef(a.s, a.t, &cp, &cx);
    o[0] = cx;
  };
  d.f_p = [coef](const EvalArgs& a, double* o) {
    double cp, cx;
    coef(a.s, a.t, &cp, &cx);
    o[0] = -cp;
  };
  d.f_q = [coef](const EvalArgs& a, double* o) {
    double cp, cx;
    coef(a.s, a.t, &cp, &cx);
    o[0] = cp;
  };
  d.f_u = [gq](const EvalArgs&, double* o) { o[0] = gq; };
  d.lipschitz_hint = 2.0;
  return d;
}

TsunamiSetup quadrant_decompose(const CharacteristicMap& map, double h_max,
                                double lambda) {
  TsunamiSetup setup;
  setup.map = map;
  setup.lambda = lambda;
  Dynamics base = goursat_dynamics(map);
  const int sgn[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  for (int qi = 0; qi < 4; ++qi) {
    QuadrantProblem& q = setup.quads[qi];
    q.es = sgn[qi][0];
    q.et = sgn[qi][1];
    q.dom = make_triangle(map.A, h_max);
    double es = q.es, et = q.et;
    q.spec.name = "tsunami_quadrant_" + std::to_string(qi + 1);
    q.spec.dyn.n = q.spec.dyn.m = 1;
    q.spec.dyn.lipschitz_hint = base.lipschitz_hint;
    auto reflect = [es, et](const EvalArgs& a, std::vector<double>& pbuf,
                            std::vector<double>& qbuf) {
      EvalArgs b = a;
      b.s = es * a.s;
      b.t = et * a.t;
      pbuf[0] = es * a.p[0];
      qbuf[0] = et * a.q[0];
      b.p = pbuf.data();
      b.q = qbuf.data();
      return b;
    };
    q.spec.dyn.f = [base, es, et, reflect](const EvalArgs& a, double* o) {
      std::vector<double> pb(1), qb(1);
      EvalArgs b = reflect(a, pb, qb);
      base.f(b, o);
      o[0] *= es * et;
    };
    q.spec.dyn.f_x = [base, es, et, reflect](const EvalArgs& a, double* o) {
      std::vector<double> pb(1), qb(1);
      EvalArgs b = reflect(a, pb, qb);
      base.f_x(b, o);
      o[0] *= es * et;
    };
    q.spec.dyn.f_p = [base, es, et, reflect](const EvalArgs& a, double* o) {
      std::vector<double> pb(1), qb(1);
      EvalArgs b = reflect(a, pb, qb);
      base.f_p(b, o);
      o[0] *= et;  // es^2 et
    };
    q.spec.dyn.f_q = [base, es, et, reflect](const EvalArgs& a, double* o) {
      std::vector<double> pb(1), qb(1);
      EvalArgs b = reflect(a, pb, qb);
      base.f_q(b, o);
      o[0] *= es;
    };
    q.spec.dyn.f_u = [base, es, et, reflect](const EvalArgs& a, double* o) {
      std::vector<double> pb(1), qb(1);
      EvalArgs b = reflect(a, pb, qb);
      base.f_u(b, o);
      o[0] *= es * et;
    };
    q.spec.box = {{-10.0}, {10.0}};
    // quiescent characteristic data on the diamond axes
    q.spec.bc.x1 = [](double, double* o) { o[0] = 0.0; };
    q.spec.bc.x2 = [](double, double* o) { o[0] = 0.0; };
    q.spec.bc.x1p = q.spec.bc.x1;
    q.spec.bc.x2p = q.spec.bc.x2;
    q.spec.bc.x0 = {0.0};
    q.obs = Field::full(q.dom.grid, 1);
    q.u_true = Field::full(q.dom.grid, 1);
  }
  return setup;
}

namespace {

void bind_tracking_cost(TsunamiSetup& setup) {
  for (auto& q : setup.quads) {
    Grid grid = q.dom.grid;  // captured copies keep the lambdas self-contained
    Field obs = q.obs;
    double lambda = setup.lambda;
    q.spec.cost = CostIntegrands{};
    q.spec.cost.Phi = [grid, obs, lambda](const EvalArgs& a) {
      double v;
      obs.sample(grid, a.s, a.t, &v);
      double e = a.x[0] - v;
      return e * e + lambda * a.u[0] * a.u[0];
    };
    q.spec.cost.Phi_x = [grid, obs](const EvalArgs& a, double* o) {
      double v;
      obs.sample(grid, a.s, a.t, &v);
      o[0] = 2.0 * (a.x[0] - v);
    };
    q.spec.cost.Phi_p = [](const EvalArgs&, double* o) { o[0] = 0.0; };
    q.spec.cost.Phi_q = [](const EvalArgs&, double* o) { o[0] = 0.0; };
    q.spec.cost.Phi_u = [lambda](const EvalArgs& a, double* o) {
      o[0] = 2.0 * lambda * a.u[0];
    };
    finalize_spec(q.spec, 7, 0);
  }
}

}  // namespace

void synth_observations(TsunamiSetup& setup,
                        const std::function<double(double, double)>& u_true_rt,
                        double noise, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& q : setup.quads) {
    const Grid& g = q.dom.grid;
    // truth control in quadrant coordinates
    for (int i = 0; i < g.ns(); ++i)
      for (int k = 0; k < g.nt(); ++k) {
        double r, t;
        setup.map.from_char(q.es * g.s[i], q.et * g.t[k], &r, &t);
        q.u_true.at(i, k)[0] = u_true_rt(r, t);
      }
    // forward solve needs a (temporary) finalized spec without cost
    ProblemSpec fwd = q.spec;
    fwd.cost = CostIntegrands{};
    finalize_spec(fwd, 7, 0);
    StateSolution st = solve_state(q.dom, fwd, q.u_true);
    for (int i = 0; i < g.ns(); ++i)
      for (int k = 0; k < g.nt(); ++k)
        q.obs.at(i, k)[0] = st.x.at(i, k)[0] + (noise > 0 ? noise * gauss(rng) : 0.0);
  }
  bind_tracking_cost(setup);
}

void set_observations(TsunamiSetup& setup,
                      const std::function<double(double, double)>& v_obs_char) {
  for (auto& q : setup.quads) {
    const Grid& g = q.dom.grid;
    for (int i = 0; i < g.ns(); ++i)
      for (int k = 0; k < g.nt(); ++k)
        q.obs.at(i, k)[0] = v_obs_char(q.es * g.s[i], q.et * g.t[k]);
  }
  bind_tracking_cost(setup);
}

InverseResult inverse_solve(TsunamiSetup& setup, const OptimizeOptions& opt) {
  std::vector<OptProblem> probs;
  for (auto& q : setup.quads) {
    OptProblem p;
    p.dom = &q.dom;
    p.spec = &q.spec;
    p.u0 = Field::full(q.dom.grid, 1);
    probs.push_back(std::move(p));
  }
  OptimizeResult r = projected_gradient(probs, opt);
  InverseResult out;
  for (int qi = 0; qi < 4; ++qi) out.u_est[qi] = r.u[qi];
  out.trace = std::move(r.trace);
  out.J = r.final_J;
  // misfit / regularization split at the terminal control
  for (int qi = 0; qi < 4; ++qi) {
    const auto& q = setup.quads[qi];
    StateSolution st = solve_state(q.dom, q.spec, out.u_est[qi]);
    const Grid& g = q.dom.grid;
    auto misfit_node = [&](int i, int k) {
      double e = st.x.at(i, k)[0] - q.obs.at(i, k)[0];
      return e * e;
    };
    auto misfit_pt = [&](double s, double t) {
      double xv, ov;
      st.x.sample(g, s, t, &xv);
      q.obs.sample(g, s, t, &ov);
      return (xv - ov) * (xv - ov);
    };
    out.misfit += region_quadrature(q.dom, misfit_node, misfit_pt);
    auto reg_node = [&](int i, int k) {
      double uv = out.u_est[qi].at(i, k)[0];
      return uv * uv;
    };
    auto reg_pt = [&](double s, double t) {
      double uv;
      out.u_est[qi].sample(g, s, t, &uv);
      return uv * uv;
    };
    out.regularization += setup.lambda * region_quadrature(q.dom, reg_node, reg_pt);
  }
  std::array<Field, 4> truth;
  bool have_truth = true;
  for (int qi = 0; qi < 4; ++qi) {
    truth[qi] = setup.quads[qi].u_true;
    if (truth[qi].max_abs() == 0.0) have_truth = false;
  }
  if (have_truth) out.rel_l2_error = rel_l2_diamond(setup, out.u_est, truth);
  return out;
}

double rel_l2_diamond(const TsunamiSetup& setup, const std::array<Field, 4>& u,
                      const std::array<Field, 4>& ref) {
  double num = 0, den = 0;
  for (int qi = 0; qi < 4; ++qi) {
    const auto& q = setup.quads[qi];
    const Grid& g = q.dom.grid;
    auto dif_node = [&](int i, int k) {
      double d = u[qi].at(i, k)[0] - ref[qi].at(i, k)[0];
      return d * d;
    };
    auto dif_pt = [&](double s, double t) {
      double a, b;
      u[qi].sample(g, s, t, &a);
      ref[qi].sample(g, s, t, &b);
      return (a - b) * (a - b);
    };
    num += region_quadrature(q.dom, dif_node, dif_pt);
    auto ref_node = [&](int i, int k) {
      double d = ref[qi].at(i, k)[0];
      return d * d;
    };
    auto ref_pt = [&](double s, double t) {
      double b;
      ref[qi].sample(g, s, t, &b);
      return b * b;
    };
    den += region_quadrature(q.dom, ref_node, ref_pt);
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace gd
