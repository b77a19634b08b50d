#include "forward.hpp"

namespace gd {

StateSolution solve_state(const Domain& dom, const ProblemSpec& spec,
                          const Field& u, double tol, int max_iter) {
  const Grid& g = dom.grid;
  int n = spec.n();
  require(u.dim == spec.m() && u.i0 == 0 && u.k0 == 0 && u.i1 == g.ns() - 1 &&
              u.k1 == g.nt() - 1,
          ErrorCode::dimension_mismatch, "control field must cover the grid");

  VolterraSystem sys;
  sys.grid = &g;
  sys.i0 = 0;
  sys.i1 = g.ns() - 1;
  sys.k0 = 0;
  sys.k1 = g.nt() - 1;
  sys.dim = n;
  sys.dir = SweepDirection::forward;
  sys.tol = tol;
  sys.max_iter = max_iter;
  sys.lipschitz = spec.dyn.lipschitz_hint;

  std::vector<double> x1v(n * g.ns()), x2v(n * g.nt());
  std::vector<double> x1pv(n * g.ns()), x2pv(n * g.nt());
  for (int i = 0; i < g.ns(); ++i) {
    spec.bc.x1(g.s[i], x1v.data() + i * n);
    spec.bc.x1p(g.s[i], x1pv.data() + i * n);
  }
  for (int k = 0; k < g.nt(); ++k) {
    spec.bc.x2(g.t[k], x2v.data() + k * n);
    spec.bc.x2p(g.t[k], x2pv.data() + k * n);
  }
  const Vec& x0 = spec.bc.x0;

  sys.seed = [&, n](int i, int k, double* o) {
    for (int c = 0; c < n; ++c) o[c] = x1v[i * n + c] + x2v[k * n + c] - x0[c];
  };
  sys.seed_s = [&, n](int i, int k, double* o) {
    (void)k;
    for (int c = 0; c < n; ++c) o[c] = x1pv[i * n + c];
  };
  sys.seed_t = [&, n](int i, int k, double* o) {
    (void)i;
    for (int c = 0; c < n; ++c) o[c] = x2pv[k * n + c];
  };
  sys.kernel = [&](int i, int k, const double* x, const double* p,
                   const double* q, double* o) {
    EvalArgs a{g.s[i], g.t[k], x, p, q, u.at(i, k)};
    spec.dyn.f(a, o);
  };

  PicardResult r = picard_solve(sys);
  StateSolution out;
  out.x = std::move(r.psi);
  out.xs = std::move(r.P);
  out.xt = std::move(r.Q);
  out.iterations = r.iterations;
  out.residual_history = std::move(r.sup_history);
  out.xst = Field::full(g, n);
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      EvalArgs a{g.s[i], g.t[k], out.x.at(i, k), out.xs.at(i, k), out.xt.at(i, k),
                 u.at(i, k)};
      spec.dyn.f(a, out.xst.at(i, k));
    }
  return out;
}

LinearizedCoeffs linearize(const Domain& dom, const ProblemSpec& spec,
                           const StateSolution& state, const Field& u) {
  const Grid& g = dom.grid;
  int n = spec.n(), m = spec.m();
  LinearizedCoeffs lc;
  lc.Ax = Field::full(g, n * n);
  lc.Ap = Field::full(g, n * n);
  lc.Aq = Field::full(g, n * n);
  lc.fu = Field::full(g, n * m);
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      EvalArgs a{g.s[i], g.t[k], state.x.at(i, k), state.xs.at(i, k),
                 state.xt.at(i, k), u.at(i, k)};
      spec.dyn.f_x(a, lc.Ax.at(i, k));
      spec.dyn.f_p(a, lc.Ap.at(i, k));
      spec.dyn.f_q(a, lc.Aq.at(i, k));
      spec.dyn.f_u(a, lc.fu.at(i, k));
    }
  return lc;
}

PicardResult state_variation(const Domain& dom, const ProblemSpec& spec,
                             const StateSolution& base, const Field& u,
                             const Field& du, double tol, int max_iter) {
  const Grid& g = dom.grid;
  int n = spec.n(), m = spec.m();
  LinearizedCoeffs lc = linearize(dom, spec, base, u);
  Field drive = Field::full(g, n);  // f_u du
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k)
      matvec(lc.fu.at(i, k), du.at(i, k), drive.at(i, k), n, m);

  VolterraSystem sys;
  sys.grid = &g;
  sys.i0 = 0;
  sys.i1 = g.ns() - 1;
  sys.k0 = 0;
  sys.k1 = g.nt() - 1;
  sys.dim = n;
  sys.dir = SweepDirection::forward;
  sys.tol = tol;
  sys.max_iter = max_iter;
  sys.lipschitz = spec.dyn.lipschitz_hint;
  sys.seed = [n](int, int, double* o) { std::fill(o, o + n, 0.0); };
  sys.seed_s = sys.seed;
  sys.seed_t = sys.seed;
  sys.kernel = [&, n](int i, int k, const double* dx, const double* dp,
                      const double* dq, double* o) {
    std::vector<double> tmp(n);
    matvec(lc.Ax.at(i, k), dx, o, n, n);
    matvec(lc.Ap.at(i, k), dp, tmp.data(), n, n);
    for (int c = 0; c < n; ++c) o[c] += tmp[c];
    matvec(lc.Aq.at(i, k), dq, tmp.data(), n, n);
    const double* dr = drive.at(i, k);
    for (int c = 0; c < n; ++c) o[c] += tmp[c] + dr[c];
  };
  return picard_solve(sys);
}

}  // namespace gd
