#include "adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "io.hpp"

namespace gd {

namespace {

constexpr double kDenomFloor = 2e-2;  // guards 1/n1, 1/n2 near axis-tangent ends

double guarded_inv(double d) {
  double m = std::max(std::fabs(d), kDenomFloor);
  return (d < 0 ? -1.0 : 1.0) / m;
}

// mu on one arc at given s (oblique/flat_s) or t (oblique/flat_t)
double arc_mu_at_s(const BoundaryArc& arc, double s) {
  const auto& sm = arc.samples;
  s = std::clamp(s, arc.s_lo, arc.s_hi);
  if (arc.kind == ArcKind::flat_t) return arc.mu1;
  if (s >= sm.front().p.s) return sm.front().mu;
  if (s <= sm.back().p.s) return sm.back().mu;
  size_t lo = 0, hi = sm.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    (sm[mid].p.s >= s ? lo : hi) = mid;
  }
  double f = (sm[lo].p.s - s) / (sm[lo].p.s - sm[hi].p.s);
  return sm[lo].mu + f * (sm[hi].mu - sm[lo].mu);
}

double arc_mu_at_t(const BoundaryArc& arc, double t) {
  const auto& sm = arc.samples;
  t = std::clamp(t, arc.t_lo, arc.t_hi);
  if (arc.kind == ArcKind::flat_s) return arc.mu0;
  if (t <= sm.front().p.t) return sm.front().mu;
  if (t >= sm.back().p.t) return sm.back().mu;
  size_t lo = 0, hi = sm.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    (sm[mid].p.t <= t ? lo : hi) = mid;
  }
  double f = (t - sm[lo].p.t) / (sm[hi].p.t - sm[lo].p.t);
  return sm[lo].mu + f * (sm[hi].mu - sm[lo].mu);
}

}  // namespace

Vec FTerms::F1_at_mu(const Domain& dom, int arc, double mu) const {
  const auto& sm = dom.arcs[arc].samples;
  const auto& vals = F1[arc];
  int n = static_cast<int>(vals.front().size());
  Vec out(n, 0.0);
  if (mu <= sm.front().mu) return vals.front();
  if (mu >= sm.back().mu) return vals.back();
  size_t lo = 0, hi = sm.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    (sm[mid].mu <= mu ? lo : hi) = mid;
  }
  double denom = sm[hi].mu - sm[lo].mu;
  double f = denom > 0 ? (mu - sm[lo].mu) / denom : 0.0;
  for (int c = 0; c < n; ++c)
    out[c] = vals[lo][c] + f * (vals[hi][c] - vals[lo][c]);
  return out;
}

FTerms compute_F_terms(const Domain& dom, const ProblemSpec& spec,
                       const StateSolution& state, const Field& u, VrMode mode) {
  const Grid& g = dom.grid;
  const int n = spec.n(), m = spec.m();
  FTerms ft;
  ft.vr_mode = mode;

  // F = Phi_x - D/Ds Phi_p - D/Dt Phi_q with the composites differenced on grid
  Field phix = Field::full(g, n), phip = Field::full(g, n), phiq = Field::full(g, n);
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      EvalArgs a{g.s[i], g.t[k], state.x.at(i, k), state.xs.at(i, k),
                 state.xt.at(i, k), u.at(i, k)};
      spec.cost.Phi_x(a, phix.at(i, k));
      spec.cost.Phi_p(a, phip.at(i, k));
      spec.cost.Phi_q(a, phiq.at(i, k));
    }
  Field dphip = total_derivative(g, TotalDeriv::Ds, phip);
  Field dphiq = total_derivative(g, TotalDeriv::Dt, phiq);
  ft.F = std::move(phix);
  for (size_t i = 0; i < ft.F.v.size(); ++i) ft.F.v[i] -= dphip.v[i] + dphiq.v[i];

  // F1 along each arc: n1 Phi_p + n2 Phi_q + Phi1_x - D/Dmu Phi1_eta
  ft.F1.resize(dom.arcs.size());
  std::vector<Vec> phi1eta_all;
  for (size_t ai = 0; ai < dom.arcs.size(); ++ai) {
    const auto& arc = dom.arcs[ai];
    size_t ns = arc.samples.size();
    std::vector<Vec> base(ns, Vec(n, 0.0)), phi1eta(ns, Vec(n, 0.0));
    std::vector<double> mus(ns);
    for (size_t si = 0; si < ns; ++si) {
      const auto& sm = arc.samples[si];
      mus[si] = sm.mu;
      std::vector<double> x(n), p(n), q(n), uc(m), eta(n);
      state.x.sample(g, sm.p.s, sm.p.t, x.data());
      state.xs.sample(g, sm.p.s, sm.p.t, p.data());
      state.xt.sample(g, sm.p.s, sm.p.t, q.data());
      u.sample(g, sm.p.s, sm.p.t, uc.data());
      for (int c = 0; c < n; ++c) eta[c] = -sm.n2 * p[c] + sm.n1 * q[c];
      EvalArgs a{sm.p.s, sm.p.t, x.data(), p.data(), q.data(), uc.data()};
      Vec pp(n), qq(n), p1x(n);
      spec.cost.Phi_p(a, pp.data());
      spec.cost.Phi_q(a, qq.data());
      BoundaryEvalArgs ba{sm.p.s, sm.p.t, x.data(), eta.data()};
      spec.cost.Phi1_x(ba, p1x.data());
      spec.cost.Phi1_eta(ba, phi1eta[si].data());
      for (int c = 0; c < n; ++c)
        base[si][c] = sm.n1 * pp[c] + sm.n2 * qq[c] + p1x[c];
    }
    // tangential total derivative of Phi1_eta along the arc
    ft.F1[ai].assign(ns, Vec(n, 0.0));
    for (size_t si = 0; si < ns; ++si) {
      for (int c = 0; c < n; ++c) {
        double d = ns < 2 ? 0.0
                          : deriv_axis(mus, static_cast<int>(si),
                                       [&](int j) { return phi1eta[j][c]; });
        ft.F1[ai][si][c] = base[si][c] - d;
      }
    }
    if (ai == 0) phi1eta_all = phi1eta;  // silence unused warning path
  }

  // Vertex terms F0 = Phi0_x - V_r, with
  // V_r(Phi1_eta) = Phi1_eta(outgoing arc) - Phi1_eta(incoming arc).
  int nv = static_cast<int>(dom.vertices.size());
  ft.F0.assign(nv, Vec(n, 0.0));
  for (int r = 1; r + 1 < nv; ++r) {
    const Point& P = dom.vertices[r];
    std::vector<double> x(n);
    state.x.sample(g, P.s, P.t, x.data());
    Vec acc(n, 0.0);
    spec.cost.Phi0_x(r, P, x.data(), acc.data());
    if (mode == VrMode::tangential_jump) {
      auto phi1eta_at = [&](const BoundaryArc& arc) {
        std::vector<double> p(n), q(n), eta(n);
        state.xs.sample(g, P.s, P.t, p.data());
        state.xt.sample(g, P.s, P.t, q.data());
        double n1, n2;
        arc.normal(P.s, P.t, &n1, &n2);
        for (int c = 0; c < n; ++c) eta[c] = -n2 * p[c] + n1 * q[c];
        BoundaryEvalArgs ba{P.s, P.t, x.data(), eta.data()};
        Vec out(n);
        spec.cost.Phi1_eta(ba, out.data());
        return out;
      };
      Vec in = phi1eta_at(dom.arcs[r - 1]);
      Vec out = phi1eta_at(dom.arcs[r]);
      for (int c = 0; c < n; ++c) acc[c] += in[c] - out[c];
    }
    ft.F0[r] = std::move(acc);
  }
  return ft;
}

// ---------------------------------------------------------------------------
// Shared sweep machinery

namespace {

struct SweepContext {
  const Domain& dom;
  const ProblemSpec& spec;
  const StateSolution& state;
  const Field& u;
  const FTerms& ft;
  RiemannContext rc;
  double lip = 1.0;
  std::map<int, FundamentalLine> vlines, hlines;
  std::map<int, VertexSets> vsets;

  SweepContext(const Domain& d, const ProblemSpec& sp, const StateSolution& st,
               const Field& uu, const FTerms& f)
      : dom(d), spec(sp), state(st), u(uu), ft(f) {
    rc = make_riemann_context(dom, spec, state, u);
    double mx = 0.0;
    for (const Field* f2 : {&rc.Abar, &rc.lin.Ap, &rc.lin.Aq})
      mx = std::max(mx, f2->max_abs());
    lip = std::max(1e-6, mx * spec.n());
  }

  const FundamentalLine& vline(int col) {
    auto it = vlines.find(col);
    if (it == vlines.end())
      it = vlines.emplace(col, fundamental_line_vertical(dom, spec, state, u, col))
               .first;
    return it->second;
  }
  const FundamentalLine& hline(int row) {
    auto it = hlines.find(row);
    if (it == hlines.end())
      it = hlines
               .emplace(row, fundamental_line_horizontal(dom, spec, state, u, row))
               .first;
    return it->second;
  }
  const VertexSets& vset(int r) {
    auto it = vsets.find(r);
    if (it == vsets.end())
      it = vsets.emplace(r, dom.vertex_sets(dom.vertices[r])).first;
    return it->second;
  }
};

// F1 covector at a grid node of a flat arc (samples are grid-aligned there).
Vec f1_at_flat_node(const SweepContext& cx, int arc_idx, int node) {
  const auto& arc = cx.dom.arcs[arc_idx];
  const Grid& g = cx.dom.grid;
  double mu;
  if (arc.kind == ArcKind::flat_t) mu = arc.mu0 + (g.t[node] - arc.t_lo);
  else mu = arc.mu0 + (arc.s_hi - g.s[node]);
  return cx.ft.F1_at_mu(cx.dom, arc_idx, mu);
}

// interpolated fundamental matrix at (possibly off-node) coordinate
void phi_at(const FundamentalLine& fl, const std::vector<double>& axis, double x,
            std::vector<double>& out) {
  int n = fl.n;
  out.assign(n * n, 0.0);
  int j = Grid::locate(axis, x);
  double denom = axis[j + 1] - axis[j];
  double f = denom > 0 ? std::clamp((x - axis[j]) / denom, 0.0, 1.0) : 0.0;
  const double* a = fl.Phi.data() + static_cast<size_t>(j) * n * n;
  const double* b = fl.Phi.data() + static_cast<size_t>(j + 1) * n * n;
  for (int c = 0; c < n * n; ++c) out[c] = (1 - f) * a[c] + f * b[c];
}

// Jump of psi across the full vertical line s = s_line at height t: the sum
// of the boundary-run integrals of F1 rho_1 above t and of F0 rho_1 over all
// vertices on the line (each counted once); include_equal controls whether
// vertices exactly at height t contribute (one-sided limits).
Vec jump_line_T(SweepContext& cx, double s_line, double t, bool include_equal) {
  const int n = cx.spec.n();
  const Grid& g = cx.dom.grid;
  int col = g.index_s(s_line, cx.dom.tol_geom);
  const FundamentalLine& fl = cx.vline(col);

  Vec acc(n, 0.0);
  // arc-piece integrals of F1 . Phi over the boundary pieces above t
  for (size_t ai = 0; ai < cx.dom.arcs.size(); ++ai) {
    const auto& arc = cx.dom.arcs[ai];
    if (arc.kind != ArcKind::flat_t || !near(arc.s_lo, s_line, cx.dom.tol_geom))
      continue;
    double alo = std::max(t, arc.t_lo), ahi = arc.t_hi;
    if (ahi <= alo + cx.dom.tol_geom) continue;
    int klo = Grid::locate(g.t, alo);
    if (g.t[klo] < alo - cx.dom.tol_geom) ++klo;
    int khi = g.index_t(ahi, 1e-9);
    std::vector<double> prev(n), curv(n), phi(n * n);
    double prev_t = alo;
    {
      Vec f1 = f1_at_flat_node(cx, static_cast<int>(ai), klo);
      if (g.t[klo] > alo + cx.dom.tol_geom) {
        // partial bottom cell: interpolate F1 and Phi at lo
        double mu = arc.mu0 + (alo - arc.t_lo);
        Vec f1lo = cx.ft.F1_at_mu(cx.dom, static_cast<int>(ai), mu);
        phi_at(fl, g.t, alo, phi);
        vecmat(f1lo.data(), phi.data(), prev.data(), n, n);
      } else {
        phi_at(fl, g.t, g.t[klo], phi);
        vecmat(f1.data(), phi.data(), prev.data(), n, n);
        prev_t = g.t[klo];
        ++klo;
      }
    }
    for (int k = klo; k <= khi; ++k) {
      Vec f1 = f1_at_flat_node(cx, static_cast<int>(ai), k);
      phi_at(fl, g.t, g.t[k], phi);
      vecmat(f1.data(), phi.data(), curv.data(), n, n);
      double h = g.t[k] - prev_t;
      for (int c = 0; c < n; ++c) acc[c] += 0.5 * h * (prev[c] + curv[c]);
      prev = curv;
      prev_t = g.t[k];
    }
  }
  // F0 terms: chi((s,t) in W(P_v)) jumps across this line for every vertex
  // on it whose height clears t
  for (int v = 0; v < static_cast<int>(cx.dom.vertices.size()); ++v) {
    if (!near(cx.dom.vertices[v].s, s_line, cx.dom.tol_geom)) continue;
    double tv = cx.dom.vertices[v].t;
    bool in = tv > t + cx.dom.tol_geom ||
              (include_equal && near(tv, t, cx.dom.tol_geom));
    if (!in) continue;
    std::vector<double> phi(n * n), term(n);
    phi_at(fl, g.t, tv, phi);
    vecmat(cx.ft.F0[v].data(), phi.data(), term.data(), n, n);
    for (int c = 0; c < n; ++c) acc[c] += term[c];
  }
  // right-multiply by Phi(t)^{-1}
  std::vector<double> phit(n * n), inv(n * n);
  phi_at(fl, g.t, std::clamp(t, g.t.front(), g.t.back()), phit);
  mat_inverse(phit.data(), inv.data(), n);
  Vec out(n);
  vecmat(acc.data(), inv.data(), out.data(), n, n);
  return out;
}

Vec jump_line_S(SweepContext& cx, double t_line, double s, bool include_equal) {
  const int n = cx.spec.n();
  const Grid& g = cx.dom.grid;
  int row = g.index_t(t_line, cx.dom.tol_geom);
  const FundamentalLine& fl = cx.hline(row);

  Vec acc(n, 0.0);
  for (size_t ai = 0; ai < cx.dom.arcs.size(); ++ai) {
    const auto& arc = cx.dom.arcs[ai];
    if (arc.kind != ArcKind::flat_s || !near(arc.t_lo, t_line, cx.dom.tol_geom))
      continue;
    double alo = std::max(s, arc.s_lo), ahi = arc.s_hi;
    if (ahi <= alo + cx.dom.tol_geom) continue;
    int ilo = Grid::locate(g.s, alo);
    if (g.s[ilo] < alo - cx.dom.tol_geom) ++ilo;
    int ihi = g.index_s(ahi, 1e-9);
    std::vector<double> prev(n), curv(n), phi(n * n);
    double prev_s = alo;
    {
      if (g.s[ilo] > alo + cx.dom.tol_geom) {
        double mu = arc.mu0 + (arc.s_hi - alo);
        Vec f1lo = cx.ft.F1_at_mu(cx.dom, static_cast<int>(ai), mu);
        phi_at(fl, g.s, alo, phi);
        vecmat(f1lo.data(), phi.data(), prev.data(), n, n);
      } else {
        Vec f1 = f1_at_flat_node(cx, static_cast<int>(ai), ilo);
        phi_at(fl, g.s, g.s[ilo], phi);
        vecmat(f1.data(), phi.data(), prev.data(), n, n);
        prev_s = g.s[ilo];
        ++ilo;
      }
    }
    for (int i = ilo; i <= ihi; ++i) {
      Vec f1 = f1_at_flat_node(cx, static_cast<int>(ai), i);
      phi_at(fl, g.s, g.s[i], phi);
      vecmat(f1.data(), phi.data(), curv.data(), n, n);
      double h = g.s[i] - prev_s;
      for (int c = 0; c < n; ++c) acc[c] += 0.5 * h * (prev[c] + curv[c]);
      prev = curv;
      prev_s = g.s[i];
    }
  }
  for (int v = 0; v < static_cast<int>(cx.dom.vertices.size()); ++v) {
    if (!near(cx.dom.vertices[v].t, t_line, cx.dom.tol_geom)) continue;
    double sv = cx.dom.vertices[v].s;
    bool in = sv > s + cx.dom.tol_geom ||
              (include_equal && near(sv, s, cx.dom.tol_geom));
    if (!in) continue;
    std::vector<double> phi(n * n), term(n);
    phi_at(fl, g.s, sv, phi);
    vecmat(cx.ft.F0[v].data(), phi.data(), term.data(), n, n);
    for (int c = 0; c < n; ++c) acc[c] += term[c];
  }
  std::vector<double> phis(n * n), inv(n * n);
  phi_at(fl, g.s, std::clamp(s, g.s.front(), g.s.back()), phis);
  mat_inverse(phis.data(), inv.data(), n);
  Vec out(n);
  vecmat(acc.data(), inv.data(), out.data(), n, n);
  return out;
}

VertexLimits vertex_limits_impl(SweepContext& cx, int r) {
  const int n = cx.spec.n();
  VertexLimits vl;
  const Point& P = cx.dom.vertices[r];
  vl.wII = jump_line_T(cx, P.s, P.t, false);
  vl.wIV = jump_line_S(cx, P.t, P.s, false);
  vl.wIII.assign(n, 0.0);
  for (int c = 0; c < n; ++c)
    vl.wIII[c] = vl.wII[c] + vl.wIV[c] + cx.ft.F0[r][c];
  return vl;
}

std::vector<Vec> flat_part_ode_impl(SweepContext& cx, int arc_idx,
                                    const Vec& terminal) {
  const auto& arc = cx.dom.arcs[arc_idx];
  require(arc.is_flat(), ErrorCode::invalid_argument,
          "flat_part_ode: arc is oblique");
  const Grid& g = cx.dom.grid;
  const int n = cx.spec.n();
  std::vector<double> Acur(n * n), Aprev(n * n), L(n * n);
  Vec rhs(n);

  auto coeff = [&](int i, int k, bool p_slot, double* A) {
    EvalArgs a{g.s[i], g.t[k], cx.state.x.at(i, k), cx.state.xs.at(i, k),
               cx.state.xt.at(i, k), cx.u.at(i, k)};
    if (p_slot) cx.spec.dyn.f_p(a, A);
    else cx.spec.dyn.f_q(a, A);
  };

  if (arc.kind == ArcKind::flat_t) {
    int col = g.index_s(arc.s_lo, cx.dom.tol_geom);
    int klo = g.index_t(arc.t_lo, cx.dom.tol_geom);
    int khi = g.index_t(arc.t_hi, cx.dom.tol_geom);
    std::vector<Vec> out(khi - klo + 1, Vec(n, 0.0));
    out[khi - klo] = terminal;
    for (int k = khi - 1; k >= klo; --k) {
      double dt = g.t[k + 1] - g.t[k];
      coeff(col, k, true, Acur.data());
      coeff(col, k + 1, true, Aprev.data());
      Vec f1a = f1_at_flat_node(cx, arc_idx, k);
      Vec f1b = f1_at_flat_node(cx, arc_idx, k + 1);
      // psi_k (I - dt/2 A_k) = psi_{k+1} (I + dt/2 A_{k+1}) + dt/2 (F1_k+F1_{k+1})
      for (int c = 0; c < n * n; ++c) L[c] = -0.5 * dt * Acur[c];
      for (int d = 0; d < n; ++d) L[d * n + d] += 1.0;
      std::vector<double> R(n * n);
      for (int c = 0; c < n * n; ++c) R[c] = 0.5 * dt * Aprev[c];
      for (int d = 0; d < n; ++d) R[d * n + d] += 1.0;
      vecmat(out[k + 1 - klo].data(), R.data(), rhs.data(), n, n);
      for (int c = 0; c < n; ++c) rhs[c] += 0.5 * dt * (f1a[c] + f1b[c]);
      solve_row(L.data(), rhs.data(), out[k - klo].data(), n);
    }
    return out;
  }

  // flat_s: march rightward (s increasing) from the far (left) end
  int row = g.index_t(arc.t_lo, cx.dom.tol_geom);
  int ilo = g.index_s(arc.s_lo, cx.dom.tol_geom);
  int ihi = g.index_s(arc.s_hi, cx.dom.tol_geom);
  std::vector<Vec> out(ihi - ilo + 1, Vec(n, 0.0));
  out[0] = terminal;
  for (int i = ilo + 1; i <= ihi; ++i) {
    double ds = g.s[i] - g.s[i - 1];
    coeff(i, row, false, Acur.data());
    coeff(i - 1, row, false, Aprev.data());
    Vec f1a = f1_at_flat_node(cx, arc_idx, i);
    Vec f1b = f1_at_flat_node(cx, arc_idx, i - 1);
    // psi_i (I + ds/2 A_i) = psi_{i-1} (I - ds/2 A_{i-1}) - ds/2 (F1_i+F1_{i-1})
    for (int c = 0; c < n * n; ++c) L[c] = 0.5 * ds * Acur[c];
    for (int d = 0; d < n; ++d) L[d * n + d] += 1.0;
    std::vector<double> R(n * n);
    for (int c = 0; c < n * n; ++c) R[c] = -0.5 * ds * Aprev[c];
    for (int d = 0; d < n; ++d) R[d * n + d] += 1.0;
    vecmat(out[i - 1 - ilo].data(), R.data(), rhs.data(), n, n);
    for (int c = 0; c < n; ++c) rhs[c] -= 0.5 * ds * (f1a[c] + f1b[c]);
    solve_row(L.data(), rhs.data(), out[i - ilo].data(), n);
  }
  return out;
}

// costate kernel g = F + psi Abar - P Ap - Q Aq at a grid node
struct CostateKernel {
  const SweepContext* cx;
  void operator()(int i, int k, const double* psi, const double* P,
                  const double* Q, double* o) const {
    int n = cx->spec.n();
    const double* Fv = cx->ft.F.at(i, k);
    Vec tmp(n);
    vecmat(psi, cx->rc.Abar.at(i, k), o, n, n);
    for (int c = 0; c < n; ++c) o[c] += Fv[c];
    vecmat(P, cx->rc.lin.Ap.at(i, k), tmp.data(), n, n);
    for (int c = 0; c < n; ++c) o[c] -= tmp[c];
    vecmat(Q, cx->rc.lin.Aq.at(i, k), tmp.data(), n, n);
    for (int c = 0; c < n; ++c) o[c] -= tmp[c];
  }
};

RegionPatch solve_triangle(SweepContext& cx, int j, double tol, int max_iter) {
  const Grid& g = cx.dom.grid;
  const int n = cx.spec.n();
  const auto& arc = cx.dom.arcs[j];
  const Point& Pj = cx.dom.vertices[j];
  const Point& Pj1 = cx.dom.vertices[j + 1];
  RegionPatch patch;
  patch.kind = RegionPatch::Kind::triangle;
  patch.j = j;
  patch.i0 = g.index_s(Pj1.s, cx.dom.tol_geom);
  patch.i1 = g.index_s(Pj.s, cx.dom.tol_geom);
  patch.k0 = g.index_t(Pj.t, cx.dom.tol_geom);
  patch.k1 = g.index_t(Pj1.t, cx.dom.tol_geom);

  // cumulative arc integral of F1 for the (4.18) seed
  const auto& sm = arc.samples;
  std::vector<Vec> cumF1(sm.size(), Vec(n, 0.0));
  for (size_t si = 1; si < sm.size(); ++si) {
    double h = sm[si].mu - sm[si - 1].mu;
    for (int c = 0; c < n; ++c)
      cumF1[si][c] = cumF1[si - 1][c] +
                     0.5 * h * (cx.ft.F1[j][si - 1][c] + cx.ft.F1[j][si][c]);
  }
  auto cum_at = [&](double mu) {
    Vec out(n, 0.0);
    if (mu <= sm.front().mu) return out;
    if (mu >= sm.back().mu) return cumF1.back();
    size_t lo = 0, hi = sm.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      (sm[mid].mu <= mu ? lo : hi) = mid;
    }
    double f = (mu - sm[lo].mu) / (sm[hi].mu - sm[lo].mu);
    for (int c = 0; c < n; ++c)
      out[c] = cumF1[lo][c] + f * (cumF1[hi][c] - cumF1[lo][c]);
    return out;
  };

  VolterraSystem sys;
  sys.grid = &g;
  sys.i0 = patch.i0;
  sys.i1 = patch.i1;
  sys.k0 = patch.k0;
  sys.k1 = patch.k1;
  sys.dim = n;
  sys.dir = SweepDirection::backward;
  sys.tol = tol;
  sys.max_iter = max_iter;
  sys.lipschitz = cx.lip;
  sys.top_t.resize(patch.i1 - patch.i0 + 1);
  sys.right_s.resize(patch.k1 - patch.k0 + 1);
  for (int i = patch.i0; i <= patch.i1; ++i)
    sys.top_t[i - patch.i0] =
        std::clamp(arc.theta2 ? arc.theta2(g.s[i]) : arc.t_hi, Pj.t, Pj1.t);
  for (int k = patch.k0; k <= patch.k1; ++k)
    sys.right_s[k - patch.k0] =
        std::clamp(arc.theta1 ? arc.theta1(g.t[k]) : arc.s_hi, Pj1.s, Pj.s);

  // (4.18)/(4.20) seed: psi0 = int_{A_t}^{B_s} F1 dmu; its partials follow
  // from (A.9)/(A.10) with psi = 0 on the arc.
  sys.seed = [&, j](int i, int k, double* o) {
    Vec vb = cum_at(arc_mu_at_s(arc, g.s[i]));
    Vec va = cum_at(arc_mu_at_t(arc, g.t[k]));
    for (int c = 0; c < n; ++c) o[c] = vb[c] - va[c];
  };
  sys.seed_s = [&, j](int i, int k, double* o) {
    (void)k;
    double mu = arc_mu_at_s(arc, g.s[i]);
    Vec f1 = cx.ft.F1_at_mu(cx.dom, j, mu);
    Point bp = arc.at_mu(mu);
    double n1, n2;
    arc.normal(bp.s, bp.t, &n1, &n2);
    double inv = guarded_inv(n2);
    for (int c = 0; c < n; ++c) o[c] = -f1[c] * inv;
  };
  sys.seed_t = [&, j](int i, int k, double* o) {
    (void)i;
    double mu = arc_mu_at_t(arc, g.t[k]);
    Vec f1 = cx.ft.F1_at_mu(cx.dom, j, mu);
    Point ap = arc.at_mu(mu);
    double n1, n2;
    arc.normal(ap.s, ap.t, &n1, &n2);
    double inv = guarded_inv(n1);
    for (int c = 0; c < n; ++c) o[c] = -f1[c] * inv;
  };
  sys.kernel = CostateKernel{&cx};
  sys.kernel_boundary = [&, j](double s, double t, double* o) {
    // on the arc: psi = 0, psi_s = -F1/n2, psi_t = -F1/n1 (Eq. 4.2)
    double mu = arc_mu_at_s(arc, s);
    Vec f1 = cx.ft.F1_at_mu(cx.dom, j, mu);
    double n1, n2;
    arc.normal(s, t, &n1, &n2);
    Vec P(n), Q(n), F(n), Ap(n * n), Aq(n * n), tmp(n);
    double i2 = guarded_inv(n2), i1 = guarded_inv(n1);
    for (int c = 0; c < n; ++c) {
      P[c] = -f1[c] * i2;
      Q[c] = -f1[c] * i1;
    }
    cx.ft.F.sample(g, s, t, F.data());
    cx.rc.lin.Ap.sample(g, s, t, Ap.data());
    cx.rc.lin.Aq.sample(g, s, t, Aq.data());
    vecmat(P.data(), Ap.data(), tmp.data(), n, n);
    for (int c = 0; c < n; ++c) o[c] = F[c] - tmp[c];
    vecmat(Q.data(), Aq.data(), tmp.data(), n, n);
    for (int c = 0; c < n; ++c) o[c] -= tmp[c];
  };

  PicardResult r = picard_solve(sys);
  patch.psi = std::move(r.psi);
  patch.psi_s = std::move(r.P);
  patch.psi_t = std::move(r.Q);
  patch.top_t = sys.top_t;
  return patch;
}

const RegionPatch* find_2d_with_left_edge(const std::vector<RegionPatch>& ps,
                                          int i_edge, int k0, int k1) {
  for (const auto& p : ps)
    if (p.kind != RegionPatch::Kind::chain && p.i0 == i_edge && p.k0 <= k0 &&
        p.k1 >= k1 && p.i1 > p.i0)
      return &p;
  return nullptr;
}

const RegionPatch* find_2d_with_bottom_edge(const std::vector<RegionPatch>& ps,
                                            int k_edge, int i0, int i1) {
  for (const auto& p : ps)
    if (p.kind != RegionPatch::Kind::chain && p.k0 == k_edge && p.i0 <= i0 &&
        p.i1 >= i1 && p.k1 > p.k0)
      return &p;
  return nullptr;
}

const RegionPatch* find_chain(const std::vector<RegionPatch>& ps, bool vertical,
                              int line_idx, int lo, int hi) {
  for (const auto& p : ps) {
    if (p.kind != RegionPatch::Kind::chain || p.chain_vertical != vertical)
      continue;
    if (vertical && p.i0 == line_idx && p.k0 <= lo && p.k1 >= hi) return &p;
    if (!vertical && p.k0 == line_idx && p.i0 <= lo && p.i1 >= hi) return &p;
  }
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations

VertexLimits vertex_limits(const Domain& dom, const ProblemSpec& spec,
                           const StateSolution& state, const Field& u,
                           const FTerms& ft, int vertex) {
  SweepContext cx(dom, spec, state, u, ft);
  return vertex_limits_impl(cx, vertex);
}

Vec jump_conditions(const Domain& dom, const ProblemSpec& spec,
                    const StateSolution& state, const Field& u, const FTerms& ft,
                    int vertex, bool vertical, double coord) {
  SweepContext cx(dom, spec, state, u, ft);
  const Point& P = dom.vertices[vertex];
  // precondition: evaluation point off the other vertex lines
  for (int r = 0; r < static_cast<int>(dom.vertices.size()); ++r) {
    double c = vertical ? dom.vertices[r].t : dom.vertices[r].s;
    require(!near(coord, c, dom.tol_geom), ErrorCode::invalid_argument,
            "jump_conditions: point lies on a foreign vertex line");
  }
  require(vertical ? dom.strictly_inside(P.s, coord)
                   : dom.strictly_inside(coord, P.t),
          ErrorCode::geometry, "jump_conditions: point not in int G");
  return vertical ? jump_line_T(cx, P.s, coord, false)
                  : jump_line_S(cx, P.t, coord, false);
}

std::vector<Vec> flat_part_ode(const Domain& dom, const ProblemSpec& spec,
                               const StateSolution& state, const Field& u,
                               const FTerms& ft, int arc, const Vec& terminal) {
  SweepContext cx(dom, spec, state, u, ft);
  return flat_part_ode_impl(cx, arc, terminal);
}

Vec costate_by_quadrature(const Domain& dom, const ProblemSpec& spec,
                          const StateSolution& state, const Field& u,
                          const FTerms& ft, Point target) {
  require(dom.contains(target.s, target.t), ErrorCode::geometry,
          "costate_by_quadrature: target outside domain");
  require(!dom.on_vertex_line(target.s, target.t), ErrorCode::invalid_argument,
          "costate_by_quadrature: target on a vertex line (not in G_R)");
  const int n = spec.n();
  RiemannFamily fam = riemann_forward(dom, spec, state, u, target);

  Vec psi(n, 0.0);
  std::vector<double> R(n * n), Fv(n);
  for (int jcomp = 0; jcomp < n; ++jcomp) {
    auto area_sampler = [&](double sig, double tau) {
      ft.F.sample(dom.grid, sig, tau, Fv.data());
      fam.value_at(sig, tau, R.data());
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += Fv[i] * R[i * n + jcomp];
      return acc;
    };
    psi[jcomp] = dom.integrate_E(area_sampler, target.s, target.t);
    auto arc_sampler = [&](int ai, const BoundaryArc::Sample& smp) {
      Vec f1 = ft.F1_at_mu(dom, ai, smp.mu);
      fam.value_at(smp.p.s, smp.p.t, R.data());
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += f1[i] * R[i * n + jcomp];
      return acc;
    };
    psi[jcomp] += dom.integrate_arc(arc_sampler, target.s, target.t);
  }
  for (int r = 1; r + 1 < static_cast<int>(dom.vertices.size()); ++r) {
    const Point& P = dom.vertices[r];
    if (P.s < target.s - dom.tol_geom || P.t < target.t - dom.tol_geom) continue;
    fam.value_at(P.s, P.t, R.data());
    for (int jcomp = 0; jcomp < n; ++jcomp)
      for (int i = 0; i < n; ++i) psi[jcomp] += ft.F0[r][i] * R[i * n + jcomp];
  }
  return psi;
}

CostateSolution sweep_costate(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state, const Field& u,
                              const FTerms& ft, double tol, int max_iter) {
  SweepContext cx(dom, spec, state, u, ft);
  const Grid& g = dom.grid;
  const int n = spec.n();
  Zones zones = dom.zone_decomposition();
  CostateSolution cs;
  cs.n = n;

  // --- zone Z_0: non-degenerate triangles and flat chains
  int N1 = static_cast<int>(dom.arcs.size());  // N+1 arcs
  for (int j = 0; j < N1; ++j) {
    if (!zones.triangles[j].degenerate)
      cs.patches.push_back(solve_triangle(cx, j, tol, max_iter));
  }
  // flat chains: maximal runs of consecutive flat arcs with the same
  // orientation, marched from the far (along-traversal) vertex backward.
  for (int j = 0; j < N1;) {
    if (!dom.arcs[j].is_flat()) {
      ++j;
      continue;
    }
    ArcKind kind = dom.arcs[j].kind;
    int jend = j;
    while (jend + 1 < N1 && dom.arcs[jend + 1].kind == kind) ++jend;
    int far_vertex = jend + 1;
    VertexLimits vl = vertex_limits_impl(cx, far_vertex);
    Vec running = (kind == ArcKind::flat_t) ? vl.wIII : vl.wIV;
    for (int a = jend; a >= j; --a) {
      std::vector<Vec> vals = flat_part_ode_impl(cx, a, running);
      RegionPatch patch;
      patch.kind = RegionPatch::Kind::chain;
      patch.j = a;
      patch.chain_vertical = kind == ArcKind::flat_t;
      const auto& arc = dom.arcs[a];
      if (patch.chain_vertical) {
        int col = g.index_s(arc.s_lo, dom.tol_geom);
        patch.i0 = patch.i1 = col;
        patch.k0 = g.index_t(arc.t_lo, dom.tol_geom);
        patch.k1 = g.index_t(arc.t_hi, dom.tol_geom);
        patch.psi = Field(col, col, patch.k0, patch.k1, n);
        for (int k = patch.k0; k <= patch.k1; ++k)
          std::copy(vals[k - patch.k0].begin(), vals[k - patch.k0].end(),
                    patch.psi.at(col, k));
        running = vals.front();  // value at the arc's bottom vertex
        for (int c = 0; c < n; ++c) running[c] += ft.F0[a][c];
      } else {
        int row = g.index_t(arc.t_lo, dom.tol_geom);
        patch.k0 = patch.k1 = row;
        patch.i0 = g.index_s(arc.s_lo, dom.tol_geom);
        patch.i1 = g.index_s(arc.s_hi, dom.tol_geom);
        patch.psi = Field(patch.i0, patch.i1, row, row, n);
        for (int i = patch.i0; i <= patch.i1; ++i)
          std::copy(vals[i - patch.i0].begin(), vals[i - patch.i0].end(),
                    patch.psi.at(i, row));
        running = vals.back();  // value at the arc's right (start) vertex
        for (int c = 0; c < n; ++c) running[c] -= ft.F0[a][c];
      }
      cs.patches.push_back(std::move(patch));
    }
    j = jend + 1;
  }

  // --- zones Z_1.. in order
  std::vector<const ZoneRect*> order;
  for (const auto& q : zones.rects)
    if (!q.empty) order.push_back(&q);
  std::sort(order.begin(), order.end(), [](const ZoneRect* a, const ZoneRect* b) {
    return (a->k - a->j) < (b->k - b->j);
  });

  for (const ZoneRect* q : order) {
    RegionPatch patch;
    patch.kind = RegionPatch::Kind::rect;
    patch.j = q->j;
    patch.k = q->k;
    patch.i0 = g.index_s(q->s_lo, dom.tol_geom);
    patch.i1 = g.index_s(q->s_hi, dom.tol_geom);
    patch.k0 = g.index_t(q->t_lo, dom.tol_geom);
    patch.k1 = g.index_t(q->t_hi, dom.tol_geom);

    // right edge data (psi-minus on the line s = s_hi)
    std::vector<Vec> redge(patch.k1 - patch.k0 + 1, Vec(n, 0.0));
    {
      const RegionPatch* chain =
          find_chain(cs.patches, true, patch.i1, patch.k0, patch.k1);
      if (chain) {
        for (int k = patch.k0; k <= patch.k1; ++k)
          std::copy(chain->psi.at(patch.i1, k), chain->psi.at(patch.i1, k) + n,
                    redge[k - patch.k0].begin());
      } else {
        const RegionPatch* prov =
            find_2d_with_left_edge(cs.patches, patch.i1, patch.k0, patch.k1);
        require(prov, ErrorCode::invalid_argument,
                "ZoneOrderViolation: missing right-edge provider");
        for (int k = patch.k0; k <= patch.k1; ++k)
          std::copy(prov->psi.at(patch.i1, k), prov->psi.at(patch.i1, k) + n,
                    redge[k - patch.k0].begin());
        bool has_vertex = false;
        for (const auto& vp : dom.vertices)
          has_vertex |= near(vp.s, g.s[patch.i1], dom.tol_geom);
        if (has_vertex)
          for (int k = patch.k0; k <= patch.k1; ++k) {
            Vec om = jump_line_T(cx, g.s[patch.i1], g.t[k], k == patch.k1);
            for (int c = 0; c < n; ++c) redge[k - patch.k0][c] += om[c];
          }
      }
    }
    // top edge data (psi-minus on the line t = t_hi)
    std::vector<Vec> tedge(patch.i1 - patch.i0 + 1, Vec(n, 0.0));
    {
      const RegionPatch* chain =
          find_chain(cs.patches, false, patch.k1, patch.i0, patch.i1);
      if (chain) {
        for (int i = patch.i0; i <= patch.i1; ++i)
          std::copy(chain->psi.at(i, patch.k1), chain->psi.at(i, patch.k1) + n,
                    tedge[i - patch.i0].begin());
      } else {
        const RegionPatch* prov =
            find_2d_with_bottom_edge(cs.patches, patch.k1, patch.i0, patch.i1);
        require(prov, ErrorCode::invalid_argument,
                "ZoneOrderViolation: missing top-edge provider");
        for (int i = patch.i0; i <= patch.i1; ++i)
          std::copy(prov->psi.at(i, patch.k1), prov->psi.at(i, patch.k1) + n,
                    tedge[i - patch.i0].begin());
        bool has_vertex = false;
        for (const auto& vp : dom.vertices)
          has_vertex |= near(vp.t, g.t[patch.k1], dom.tol_geom);
        if (has_vertex)
          for (int i = patch.i0; i <= patch.i1; ++i) {
            Vec om = jump_line_S(cx, g.t[patch.k1], g.s[i], i == patch.i1);
            for (int c = 0; c < n; ++c) tedge[i - patch.i0][c] += om[c];
          }
      }
    }
    // reconcile the shared corner
    for (int c = 0; c < n; ++c) {
      double avg = 0.5 * (redge.back()[c] + tedge.back()[c]);
      redge.back()[c] = tedge.back()[c] = avg;
    }

    // edge derivatives for the P/Q seeds
    std::vector<double> saxis(g.s.begin() + patch.i0, g.s.begin() + patch.i1 + 1);
    std::vector<double> taxis(g.t.begin() + patch.k0, g.t.begin() + patch.k1 + 1);
    std::vector<Vec> dtop(tedge.size(), Vec(n)), dright(redge.size(), Vec(n));
    for (int c = 0; c < n; ++c) {
      for (size_t i = 0; i < tedge.size(); ++i)
        dtop[i][c] = deriv_axis(saxis, static_cast<int>(i),
                                [&](int jj) { return tedge[jj][c]; });
      for (size_t k = 0; k < redge.size(); ++k)
        dright[k][c] = deriv_axis(taxis, static_cast<int>(k),
                                  [&](int jj) { return redge[jj][c]; });
    }

    VolterraSystem sys;
    sys.grid = &g;
    sys.i0 = patch.i0;
    sys.i1 = patch.i1;
    sys.k0 = patch.k0;
    sys.k1 = patch.k1;
    sys.dim = n;
    sys.dir = SweepDirection::backward;
    sys.tol = tol;
    sys.max_iter = max_iter;
    sys.lipschitz = cx.lip;
    const Vec& corner = redge.back();
    sys.seed = [&](int i, int k, double* o) {
      for (int c = 0; c < n; ++c)
        o[c] = tedge[i - patch.i0][c] + redge[k - patch.k0][c] - corner[c];
    };
    sys.seed_s = [&](int i, int k, double* o) {
      (void)k;
      std::copy(dtop[i - patch.i0].begin(), dtop[i - patch.i0].end(), o);
    };
    sys.seed_t = [&](int i, int k, double* o) {
      (void)i;
      std::copy(dright[k - patch.k0].begin(), dright[k - patch.k0].end(), o);
    };
    sys.kernel = CostateKernel{&cx};
    PicardResult r = picard_solve(sys);
    patch.psi = std::move(r.psi);
    patch.psi_s = std::move(r.P);
    patch.psi_t = std::move(r.Q);
    cs.patches.push_back(std::move(patch));
  }
  return cs;
}

bool RegionPatch::in_region(const Grid& g, int i, int k) const {
  if (i < i0 || i > i1 || k < k0 || k > k1) return false;
  if (kind == Kind::triangle && !top_t.empty())
    return g.t[k] <= top_t[i - i0] + 1e-12;
  return true;
}

const RegionPatch* CostateSolution::find_region(const Domain& dom, double s,
                                                double t) const {
  for (const auto& p : patches) {
    if (p.kind == RegionPatch::Kind::chain) continue;
    const Grid& g = dom.grid;
    if (s < g.s[p.i0] - dom.tol_geom || s > g.s[p.i1] + dom.tol_geom ||
        t < g.t[p.k0] - dom.tol_geom || t > g.t[p.k1] + dom.tol_geom)
      continue;
    if (p.kind == RegionPatch::Kind::triangle) {
      double top = dom.arcs[p.j].theta2 ? dom.arcs[p.j].theta2(s)
                                        : dom.arcs[p.j].t_hi;
      if (t > top + dom.tol_geom) continue;
    }
    return &p;
  }
  return nullptr;
}

void CostateSolution::eval(const Domain& dom, double s, double t, double* psi,
                           double* psi_s, double* psi_t) const {
  const RegionPatch* p = find_region(dom, s, t);
  require(p != nullptr, ErrorCode::geometry, "costate eval: no region contains point");
  const Grid& g = dom.grid;
  int i = std::clamp(Grid::locate(g.s, s), p->i0, p->i1 - 1);
  int k = std::clamp(Grid::locate(g.t, t), p->k0, p->k1 - 1);
  bool cell_ok = p->in_region(g, i, k) && p->in_region(g, i + 1, k) &&
                 p->in_region(g, i, k + 1) && p->in_region(g, i + 1, k + 1);
  if (cell_ok) {
    // bilinear within the owning patch
    double fx = (s - g.s[i]) / (g.s[i + 1] - g.s[i]);
    double fy = (t - g.t[k]) / (g.t[k + 1] - g.t[k]);
    for (int c = 0; c < n; ++c) {
      auto bil = [&](const Field& f) {
        return (1 - fx) * (1 - fy) * f.at(i, k)[c] + fx * (1 - fy) * f.at(i + 1, k)[c] +
               (1 - fx) * fy * f.at(i, k + 1)[c] + fx * fy * f.at(i + 1, k + 1)[c];
      };
      if (psi) psi[c] = bil(p->psi);
      if (psi_s) psi_s[c] = bil(p->psi_s);
      if (psi_t) psi_t[c] = bil(p->psi_t);
    }
    return;
  }
  // near the oblique arc: first-order Taylor step from the nearest valid node
  int bi = i, bk = k;
  double best = 1e300;
  for (int ii = i; ii <= i + 1; ++ii)
    for (int kk = k; kk <= k + 1; ++kk)
      if (p->in_region(g, ii, kk)) {
        double d = std::hypot(g.s[ii] - s, g.t[kk] - t);
        if (d < best) { best = d; bi = ii; bk = kk; }
      }
  require(best < 1e300, ErrorCode::geometry, "costate eval: point outside region");
  double ds = s - g.s[bi], dt = t - g.t[bk];
  for (int c = 0; c < n; ++c) {
    if (psi)
      psi[c] = p->psi.at(bi, bk)[c] + ds * p->psi_s.at(bi, bk)[c] +
               dt * p->psi_t.at(bi, bk)[c];
    if (psi_s) psi_s[c] = p->psi_s.at(bi, bk)[c];
    if (psi_t) psi_t[c] = p->psi_t.at(bi, bk)[c];
  }
}

std::string CostateSolution::to_csv(const Domain& dom) const {
  std::vector<std::string> cols{"s", "t", "kind", "j", "k"};
  for (int c = 0; c < n; ++c) cols.push_back("psi" + std::to_string(c));
  CsvWriter w(cols);
  const Grid& g = dom.grid;
  for (const auto& p : patches) {
    double kindv = p.kind == RegionPatch::Kind::triangle ? 0
                   : p.kind == RegionPatch::Kind::rect   ? 1
                                                         : 2;
    for (int i = p.i0; i <= p.i1; ++i)
      for (int k = p.k0; k <= p.k1; ++k) {
        if (!p.in_region(g, i, k)) continue;
        std::vector<double> row{g.s[i], g.t[k], kindv, double(p.j), double(p.k)};
        for (int c = 0; c < n; ++c) row.push_back(p.psi.at(i, k)[c]);
        w.row(row);
      }
  }
  return w.text();
}

PdeResidual verify_hamiltonian_pde(const Domain& dom, const ProblemSpec& spec,
                                   const StateSolution& state, const Field& u,
                                   const FTerms& ft, const CostateSolution& cs) {
  SweepContext cx(dom, spec, state, u, ft);
  CostateKernel kernel{&cx};
  const Grid& g = dom.grid;
  const int n = spec.n();
  PdeResidual rep;
  double l2 = 0.0, area = 0.0;
  for (const auto& p : cs.patches) {
    if (p.kind == RegionPatch::Kind::chain) continue;
    double psup = 0.0;
    std::vector<double> gv(n);
    for (int i = p.i0 + 1; i < p.i1; ++i)
      for (int k = p.k0 + 1; k < p.k1; ++k) {
        bool ok = true;
        for (int di = -1; di <= 1 && ok; ++di)
          for (int dk = -1; dk <= 1 && ok; ++dk)
            ok = p.in_region(g, i + di, k + dk);
        if (!ok) continue;
        double hs = g.s[i + 1] - g.s[i - 1], ht = g.t[k + 1] - g.t[k - 1];
        kernel(i, k, p.psi.at(i, k), p.psi_s.at(i, k), p.psi_t.at(i, k), gv.data());
        double cell = 0.25 * hs * ht;
        for (int c = 0; c < n; ++c) {
          double cross = (p.psi.at(i + 1, k + 1)[c] - p.psi.at(i + 1, k - 1)[c] -
                          p.psi.at(i - 1, k + 1)[c] + p.psi.at(i - 1, k - 1)[c]) /
                         (hs * ht);
          double res = cross - gv[c];
          psup = std::max(psup, std::fabs(res));
          l2 += cell * res * res;
          area += cell / n;
        }
      }
    rep.patch_sup.push_back(psup);
    rep.sup = std::max(rep.sup, psup);
  }
  rep.l2 = area > 0 ? std::sqrt(l2 / area) : 0.0;
  return rep;
}

}  // namespace gd
