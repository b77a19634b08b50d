#include "riemann.hpp"

#include <algorithm>
#include <cmath>

namespace gd {

namespace {

// local axis {anchor} U {grid nodes beyond anchor in the given direction}
std::vector<double> local_axis(const std::vector<double>& nodes, double anchor,
                               bool upward, double tol) {
  std::vector<double> out{anchor};
  if (upward) {
    for (double v : nodes)
      if (v > anchor + tol) out.push_back(v);
  } else {
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it)
      if (*it < anchor - tol) out.push_back(*it);
    std::reverse(out.begin(), out.end());
  }
  return out;
}

// implicit trapezoid step for dM/dx = sgn * A(x) M (left multiplication):
// (I - h/2 sgn A1) M1 = (I + h/2 sgn A0) M0
void step_left(const double* A0, const double* A1, const double* M0, double* M1,
               double h, double sgn, int n) {
  std::vector<double> L(n * n), Rhs(n * n), RM(n * n);
  for (int i = 0; i < n * n; ++i) {
    L[i] = -0.5 * h * sgn * A1[i];
    Rhs[i] = 0.5 * h * sgn * A0[i];
  }
  for (int i = 0; i < n; ++i) {
    L[i * n + i] += 1.0;
    Rhs[i * n + i] += 1.0;
  }
  matmul(Rhs.data(), M0, RM.data(), n);
  solve_inplace(L.data(), RM.data(), n, n);
  std::copy(RM.begin(), RM.end(), M1);
}

// implicit trapezoid for dM/dx = sgn * M A(x) (right multiplication):
// M1 (I - h/2 sgn A1) = M0 (I + h/2 sgn A0)  =>  transpose-solve per row
void step_right(const double* A0, const double* A1, const double* M0, double* M1,
                double h, double sgn, int n) {
  std::vector<double> L(n * n), Rhs(n * n), MR(n * n);
  for (int i = 0; i < n * n; ++i) {
    L[i] = -0.5 * h * sgn * A1[i];
    Rhs[i] = 0.5 * h * sgn * A0[i];
  }
  for (int i = 0; i < n; ++i) {
    L[i * n + i] += 1.0;
    Rhs[i * n + i] += 1.0;
  }
  matmul(M0, Rhs.data(), MR.data(), n);
  // M1 L = MR  =>  L^T M1^T = MR^T
  for (int r = 0; r < n; ++r) solve_row(L.data(), MR.data() + r * n, M1 + r * n, n);
}

struct LocalCoeffs {
  Grid local;
  Field Ax, Ap, Aq, Abar;
};

LocalCoeffs sample_coeffs(const Domain& dom, const ProblemSpec& spec,
                          const RiemannContext& ctx, const std::vector<double>& s,
                          const std::vector<double>& t) {
  (void)spec;
  LocalCoeffs lc;
  lc.local.s = s;
  lc.local.t = t;
  int n2 = ctx.lin.Ax.dim;
  lc.Ax = Field(0, (int)s.size() - 1, 0, (int)t.size() - 1, n2);
  lc.Ap = lc.Ax;
  lc.Aq = lc.Ax;
  lc.Abar = lc.Ax;
  for (int i = 0; i < (int)s.size(); ++i)
    for (int k = 0; k < (int)t.size(); ++k) {
      ctx.lin.Ax.sample(dom.grid, s[i], t[k], lc.Ax.at(i, k));
      ctx.lin.Ap.sample(dom.grid, s[i], t[k], lc.Ap.at(i, k));
      ctx.lin.Aq.sample(dom.grid, s[i], t[k], lc.Aq.at(i, k));
      ctx.Abar.sample(dom.grid, s[i], t[k], lc.Abar.at(i, k));
    }
  return lc;
}

}  // namespace

RiemannContext make_riemann_context(const Domain& dom, const ProblemSpec& spec,
                                    const StateSolution& state, const Field& u) {
  RiemannContext ctx;
  ctx.lin = linearize(dom, spec, state, u);
  ctx.DsAp = total_derivative(dom.grid, TotalDeriv::Ds, ctx.lin.Ap);
  ctx.DtAq = total_derivative(dom.grid, TotalDeriv::Dt, ctx.lin.Aq);
  ctx.Abar = ctx.lin.Ax;
  for (size_t i = 0; i < ctx.Abar.v.size(); ++i)
    ctx.Abar.v[i] -= ctx.DsAp.v[i] + ctx.DtAq.v[i];
  return ctx;
}

void RiemannFamily::value_at(double s, double t, double* out) const {
  bool supported =
      orientation == Orientation::forward
          ? (s >= base.s - 1e-12 && t >= base.t - 1e-12)
          : (s <= base.s + 1e-12 && t <= base.t + 1e-12);
  if (!supported) {
    std::fill(out, out + n * n, 0.0);
    return;
  }
  values.sample(local, s, t, out);
}

RiemannFamily riemann_forward(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state, const Field& u,
                              Point base, double tol) {
  const int n = spec.n();
  RiemannContext ctx = make_riemann_context(dom, spec, state, u);
  std::vector<double> sax = local_axis(dom.grid.s, base.s, true, dom.tol_geom);
  std::vector<double> tax = local_axis(dom.grid.t, base.t, true, dom.tol_geom);
  LocalCoeffs lc = sample_coeffs(dom, spec, ctx, sax, tax);
  const int ns = (int)sax.size(), nt = (int)tax.size();

  // characteristic ODEs of (3.3) along the two lines through the base
  std::vector<double> row(ns * n * n), col(nt * n * n);
  mat_identity(row.data(), n);
  for (int i = 1; i < ns; ++i)
    step_left(lc.Aq.at(i - 1, 0), lc.Aq.at(i, 0), row.data() + (i - 1) * n * n,
              row.data() + i * n * n, sax[i] - sax[i - 1], +1.0, n);
  mat_identity(col.data(), n);
  for (int k = 1; k < nt; ++k)
    step_left(lc.Ap.at(0, k - 1), lc.Ap.at(0, k), col.data() + (k - 1) * n * n,
              col.data() + k * n * n, tax[k] - tax[k - 1], +1.0, n);

  VolterraSystem sys;
  sys.grid = &lc.local;
  sys.i0 = 0;
  sys.i1 = ns - 1;
  sys.k0 = 0;
  sys.k1 = nt - 1;
  sys.dim = n * n;
  sys.dir = SweepDirection::forward;
  sys.tol = tol;
  sys.lipschitz = spec.dyn.lipschitz_hint;
  sys.seed = [&](int i, int k, double* o) {
    for (int c = 0; c < n * n; ++c)
      o[c] = row[i * n * n + c] + col[k * n * n + c];
    for (int d = 0; d < n; ++d) o[d * n + d] -= 1.0;
  };
  sys.seed_s = [&](int i, int k, double* o) {
    (void)k;
    matmul(lc.Aq.at(i, 0), row.data() + i * n * n, o, n);
  };
  sys.seed_t = [&](int i, int k, double* o) {
    (void)i;
    matmul(lc.Ap.at(0, k), col.data() + k * n * n, o, n);
  };
  sys.kernel = [&](int i, int k, const double* R, const double* Rs,
                   const double* Rt, double* o) {
    std::vector<double> tmp(n * n);
    matmul(lc.Ax.at(i, k), R, o, n);
    matmul(lc.Ap.at(i, k), Rs, tmp.data(), n);
    for (int c = 0; c < n * n; ++c) o[c] += tmp[c];
    matmul(lc.Aq.at(i, k), Rt, tmp.data(), n);
    for (int c = 0; c < n * n; ++c) o[c] += tmp[c];
  };
  PicardResult r = picard_solve(sys);

  RiemannFamily fam;
  fam.orientation = RiemannFamily::Orientation::forward;
  fam.base = base;
  fam.n = n;
  fam.local = lc.local;
  fam.values = std::move(r.psi);
  return fam;
}

RiemannFamily riemann_adjoint(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state, const Field& u,
                              Point target, double tol, const RiemannContext* ctx0) {
  const int n = spec.n();
  RiemannContext own;
  if (!ctx0) {
    own = make_riemann_context(dom, spec, state, u);
    ctx0 = &own;
  }
  std::vector<double> sax = local_axis(dom.grid.s, target.s, false, dom.tol_geom);
  std::vector<double> tax = local_axis(dom.grid.t, target.t, false, dom.tol_geom);
  LocalCoeffs lc = sample_coeffs(dom, spec, *ctx0, sax, tax);
  const int ns = (int)sax.size(), nt = (int)tax.size();

  // characteristic ODEs of (3.4): rightmost column / top row hold the target
  std::vector<double> row(ns * n * n), col(nt * n * n);
  mat_identity(row.data() + (ns - 1) * n * n, n);
  for (int i = ns - 2; i >= 0; --i)
    step_right(lc.Aq.at(i + 1, nt - 1), lc.Aq.at(i, nt - 1),
               row.data() + (i + 1) * n * n, row.data() + i * n * n,
               -(sax[i + 1] - sax[i]), -1.0, n);
  mat_identity(col.data() + (nt - 1) * n * n, n);
  for (int k = nt - 2; k >= 0; --k)
    step_right(lc.Ap.at(ns - 1, k + 1), lc.Ap.at(ns - 1, k),
               col.data() + (k + 1) * n * n, col.data() + k * n * n,
               -(tax[k + 1] - tax[k]), -1.0, n);

  VolterraSystem sys;
  sys.grid = &lc.local;
  sys.i0 = 0;
  sys.i1 = ns - 1;
  sys.k0 = 0;
  sys.k1 = nt - 1;
  sys.dim = n * n;
  sys.dir = SweepDirection::backward;
  sys.tol = tol;
  sys.lipschitz = spec.dyn.lipschitz_hint;
  sys.seed = [&](int i, int k, double* o) {
    for (int c = 0; c < n * n; ++c)
      o[c] = row[i * n * n + c] + col[k * n * n + c];
    for (int d = 0; d < n; ++d) o[d * n + d] -= 1.0;
  };
  sys.seed_s = [&](int i, int k, double* o) {
    (void)k;
    std::vector<double> tmp(n * n);
    matmul(row.data() + i * n * n, lc.Aq.at(i, nt - 1), tmp.data(), n);
    for (int c = 0; c < n * n; ++c) o[c] = -tmp[c];
  };
  sys.seed_t = [&](int i, int k, double* o) {
    (void)i;
    std::vector<double> tmp(n * n);
    matmul(col.data() + k * n * n, lc.Ap.at(ns - 1, k), tmp.data(), n);
    for (int c = 0; c < n * n; ++c) o[c] = -tmp[c];
  };
  sys.kernel = [&](int i, int k, const double* R, const double* Rs,
                   const double* Rt, double* o) {
    std::vector<double> tmp(n * n);
    matmul(R, lc.Abar.at(i, k), o, n);
    matmul(Rs, lc.Ap.at(i, k), tmp.data(), n);
    for (int c = 0; c < n * n; ++c) o[c] -= tmp[c];
    matmul(Rt, lc.Aq.at(i, k), tmp.data(), n);
    for (int c = 0; c < n * n; ++c) o[c] -= tmp[c];
  };
  PicardResult r = picard_solve(sys);

  RiemannFamily fam;
  fam.orientation = RiemannFamily::Orientation::adjoint;
  fam.base = target;
  fam.n = n;
  fam.local = lc.local;
  fam.values = std::move(r.psi);
  return fam;
}

AuxCostates aux_costates(const Domain& dom, const ProblemSpec& spec,
                         const StateSolution& state, const Field& u, Point target) {
  const int n = spec.n();
  AuxCostates out;
  out.rho1.n = out.rho2.n = n;

  auto coeff_at = [&](double s, double t, bool p_slot, double* A) {
    std::vector<double> x(n), p(n), q(n), uc(spec.m());
    state.x.sample(dom.grid, s, t, x.data());
    state.xs.sample(dom.grid, s, t, p.data());
    state.xt.sample(dom.grid, s, t, q.data());
    u.sample(dom.grid, s, t, uc.data());
    EvalArgs a{s, t, x.data(), p.data(), q.data(), uc.data()};
    if (p_slot) spec.dyn.f_p(a, A);
    else spec.dyn.f_q(a, A);
  };

  // rho1 along the vertical line: dM/dtau = A_p(s0,tau) M upward from I
  out.rho1.nodes = local_axis(dom.grid.t, target.t, true, dom.tol_geom);
  out.rho1.mats.resize(out.rho1.nodes.size() * n * n);
  mat_identity(out.rho1.mats.data(), n);
  std::vector<double> A0(n * n), A1(n * n);
  for (size_t j = 1; j < out.rho1.nodes.size(); ++j) {
    coeff_at(target.s, out.rho1.nodes[j - 1], true, A0.data());
    coeff_at(target.s, out.rho1.nodes[j], true, A1.data());
    step_left(A0.data(), A1.data(), out.rho1.mats.data() + (j - 1) * n * n,
              out.rho1.mats.data() + j * n * n,
              out.rho1.nodes[j] - out.rho1.nodes[j - 1], +1.0, n);
  }

  // rho2 along the horizontal line: dM/dsigma = A_q(sigma,t0) M
  out.rho2.nodes = local_axis(dom.grid.s, target.s, true, dom.tol_geom);
  out.rho2.mats.resize(out.rho2.nodes.size() * n * n);
  mat_identity(out.rho2.mats.data(), n);
  for (size_t j = 1; j < out.rho2.nodes.size(); ++j) {
    coeff_at(out.rho2.nodes[j - 1], target.t, false, A0.data());
    coeff_at(out.rho2.nodes[j], target.t, false, A1.data());
    step_left(A0.data(), A1.data(), out.rho2.mats.data() + (j - 1) * n * n,
              out.rho2.mats.data() + j * n * n,
              out.rho2.nodes[j] - out.rho2.nodes[j - 1], +1.0, n);
  }
  return out;
}

void FundamentalLine::transition(int j_target, int j_source, double* out) const {
  matmul(Phi.data() + static_cast<size_t>(j_source) * n * n,
         PhiInv.data() + static_cast<size_t>(j_target) * n * n, out, n);
}

namespace {
FundamentalLine fundamental_line(const Domain& dom, const ProblemSpec& spec,
                                 const StateSolution& state, const Field& u,
                                 int idx, bool vertical) {
  const int n = spec.n();
  const Grid& g = dom.grid;
  FundamentalLine fl;
  fl.vertical = vertical;
  fl.line_index = idx;
  fl.n = n;
  int count = vertical ? g.nt() : g.ns();
  fl.Phi.resize(static_cast<size_t>(count) * n * n);
  fl.PhiInv.resize(fl.Phi.size());
  mat_identity(fl.Phi.data(), n);
  std::vector<double> A0(n * n), A1(n * n);
  auto coeff = [&](int j, double* A) {
    int i = vertical ? idx : j;
    int k = vertical ? j : idx;
    EvalArgs a{g.s[i], g.t[k], state.x.at(i, k), state.xs.at(i, k),
               state.xt.at(i, k), u.at(i, k)};
    if (vertical) spec.dyn.f_p(a, A);
    else spec.dyn.f_q(a, A);
  };
  const std::vector<double>& axis = vertical ? g.t : g.s;
  for (int j = 1; j < count; ++j) {
    coeff(j - 1, A0.data());
    coeff(j, A1.data());
    step_left(A0.data(), A1.data(), fl.Phi.data() + (j - 1) * n * n,
              fl.Phi.data() + j * n * n, axis[j] - axis[j - 1], +1.0, n);
  }
  for (int j = 0; j < count; ++j)
    mat_inverse(fl.Phi.data() + static_cast<size_t>(j) * n * n,
                fl.PhiInv.data() + static_cast<size_t>(j) * n * n, n);
  return fl;
}
}  // namespace

FundamentalLine fundamental_line_vertical(const Domain& dom, const ProblemSpec& spec,
                                          const StateSolution& state, const Field& u,
                                          int column) {
  return fundamental_line(dom, spec, state, u, column, true);
}

FundamentalLine fundamental_line_horizontal(const Domain& dom,
                                            const ProblemSpec& spec,
                                            const StateSolution& state,
                                            const Field& u, int row) {
  return fundamental_line(dom, spec, state, u, row, false);
}

Vec variation_via_riemann(const Domain& dom, const ProblemSpec& spec,
                          const StateSolution& state, const Field& u,
                          const Field& du, Point target) {
  require(dom.contains(target.s, target.t), ErrorCode::geometry,
          "variation_via_riemann: target outside domain");
  const int n = spec.n(), m = spec.m();
  RiemannFamily fam = riemann_adjoint(dom, spec, state, u, target);
  const Grid& loc = fam.local;

  // integrand v(sigma,tau) = R(target, (sigma,tau)) f_u du
  Field integrand(0, loc.ns() - 1, 0, loc.nt() - 1, n);
  std::vector<double> fu(n * m), duv(m), fud(n);
  for (int i = 0; i < loc.ns(); ++i)
    for (int k = 0; k < loc.nt(); ++k) {
      std::vector<double> x(n), p(n), q(n);
      state.x.sample(dom.grid, loc.s[i], loc.t[k], x.data());
      state.xs.sample(dom.grid, loc.s[i], loc.t[k], p.data());
      state.xt.sample(dom.grid, loc.s[i], loc.t[k], q.data());
      du.sample(dom.grid, loc.s[i], loc.t[k], duv.data());
      std::vector<double> uc(m);
      u.sample(dom.grid, loc.s[i], loc.t[k], uc.data());
      EvalArgs a{loc.s[i], loc.t[k], x.data(), p.data(), q.data(), uc.data()};
      spec.dyn.f_u(a, fu.data());
      matvec(fu.data(), duv.data(), fud.data(), n, m);
      matvec(fam.values.at(i, k), fud.data(), integrand.at(i, k), n, n);
    }

  // tensor trapezoid over W(target)
  Vec acc(n, 0.0);
  for (int i = 0; i + 1 < loc.ns(); ++i)
    for (int k = 0; k + 1 < loc.nt(); ++k) {
      double w = 0.25 * (loc.s[i + 1] - loc.s[i]) * (loc.t[k + 1] - loc.t[k]);
      for (int c = 0; c < n; ++c)
        acc[c] += w * (integrand.at(i, k)[c] + integrand.at(i + 1, k)[c] +
                       integrand.at(i, k + 1)[c] + integrand.at(i + 1, k + 1)[c]);
    }
  return acc;
}

}  // namespace gd
