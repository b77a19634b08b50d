#include "optimize.hpp"

#include <cmath>
#include <random>

namespace gd {

namespace {

double clipped_column(const Domain& dom, int i, int k_lo, double top,
                      const std::function<double(int, int)>& node_fn,
                      const std::function<double(double, double)>& point_fn) {
  const Grid& g = dom.grid;
  if (top <= g.t[k_lo] + dom.tol_geom) return 0.0;
  double acc = 0.0;
  int k = k_lo;
  double prev = node_fn(i, k);
  while (k + 1 < g.nt() && g.t[k + 1] <= top + dom.tol_geom) {
    double cur = node_fn(i, k + 1);
    acc += 0.5 * (g.t[k + 1] - g.t[k]) * (prev + cur);
    prev = cur;
    ++k;
  }
  double rem = top - g.t[k];
  if (rem > dom.tol_geom)
    acc += 0.5 * rem * (prev + point_fn(g.s[i], top));
  return acc;
}

}  // namespace

double region_quadrature(const Domain& dom,
                         const std::function<double(int, int)>& node_fn,
                         const std::function<double(double, double)>& point_fn) {
  const Grid& g = dom.grid;
  Zones z = dom.zone_decomposition();
  double total = 0.0;
  for (const auto& tri : z.triangles) {
    if (tri.degenerate) continue;
    const auto& arc = dom.arcs[tri.j];
    int i0 = g.index_s(dom.vertices[tri.j + 1].s, dom.tol_geom);
    int i1 = g.index_s(dom.vertices[tri.j].s, dom.tol_geom);
    int k0 = g.index_t(dom.vertices[tri.j].t, dom.tol_geom);
    double t_lo = dom.vertices[tri.j].t, t_hi = dom.vertices[tri.j + 1].t;
    double prev_col = clipped_column(
        dom, i0, k0, std::clamp(arc.theta2(g.s[i0]), t_lo, t_hi), node_fn, point_fn);
    for (int i = i0 + 1; i <= i1; ++i) {
      double col = clipped_column(dom, i, k0,
                                  std::clamp(arc.theta2(g.s[i]), t_lo, t_hi),
                                  node_fn, point_fn);
      total += 0.5 * (g.s[i] - g.s[i - 1]) * (prev_col + col);
      prev_col = col;
    }
  }
  for (const auto& q : z.rects) {
    if (q.empty) continue;
    int i0 = g.index_s(q.s_lo, dom.tol_geom), i1 = g.index_s(q.s_hi, dom.tol_geom);
    int k0 = g.index_t(q.t_lo, dom.tol_geom), k1 = g.index_t(q.t_hi, dom.tol_geom);
    for (int i = i0; i < i1; ++i)
      for (int k = k0; k < k1; ++k) {
        double w = 0.25 * (g.s[i + 1] - g.s[i]) * (g.t[k + 1] - g.t[k]);
        total += w * (node_fn(i, k) + node_fn(i + 1, k) + node_fn(i, k + 1) +
                      node_fn(i + 1, k + 1));
      }
  }
  return total;
}

CostBreakdown cost(const Domain& dom, const ProblemSpec& spec,
                   const StateSolution& state, const Field& u) {
  const Grid& g = dom.grid;
  const int n = spec.n(), m = spec.m();
  CostBreakdown cb;
  auto node_fn = [&](int i, int k) {
    EvalArgs a{g.s[i], g.t[k], state.x.at(i, k), state.xs.at(i, k),
               state.xt.at(i, k), u.at(i, k)};
    return spec.cost.Phi(a);
  };
  auto point_fn = [&](double s, double t) {
    std::vector<double> x(n), p(n), q(n), uc(m);
    state.x.sample(g, s, t, x.data());
    state.xs.sample(g, s, t, p.data());
    state.xt.sample(g, s, t, q.data());
    u.sample(g, s, t, uc.data());
    EvalArgs a{s, t, x.data(), p.data(), q.data(), uc.data()};
    return spec.cost.Phi(a);
  };
  cb.area_term = region_quadrature(dom, node_fn, point_fn);

  auto arc_fn = [&](int, const BoundaryArc::Sample& sm) {
    std::vector<double> x(n), p(n), q(n), eta(n);
    state.x.sample(g, sm.p.s, sm.p.t, x.data());
    state.xs.sample(g, sm.p.s, sm.p.t, p.data());
    state.xt.sample(g, sm.p.s, sm.p.t, q.data());
    for (int c = 0; c < n; ++c) eta[c] = -sm.n2 * p[c] + sm.n1 * q[c];
    BoundaryEvalArgs ba{sm.p.s, sm.p.t, x.data(), eta.data()};
    return spec.cost.Phi1(ba);
  };
  cb.arc_term = dom.integrate_arc(arc_fn, 0.0, 0.0);

  for (int r = 0; r < static_cast<int>(dom.vertices.size()); ++r) {
    std::vector<double> x(n);
    state.x.sample(g, dom.vertices[r].s, dom.vertices[r].t, x.data());
    cb.vertex_term += spec.cost.Phi0(r, dom.vertices[r], x.data());
  }
  cb.total = cb.area_term + cb.arc_term + cb.vertex_term;
  return cb;
}

Field gradient(const Domain& dom, const ProblemSpec& spec,
               const StateSolution& state, const CostateSolution& cs,
               const Field& u) {
  const Grid& g = dom.grid;
  const int n = spec.n(), m = spec.m();
  Field psi_sum = Field::full(g, n);
  Field counts = Field::full(g, 1);
  for (const auto& p : cs.patches) {
    if (p.kind == RegionPatch::Kind::chain) continue;
    for (int i = p.i0; i <= p.i1; ++i)
      for (int k = p.k0; k <= p.k1; ++k) {
        if (!p.in_region(g, i, k)) continue;
        for (int c = 0; c < n; ++c) psi_sum.at(i, k)[c] += p.psi.at(i, k)[c];
        counts.at(i, k)[0] += 1.0;
      }
  }
  Field grad = Field::full(g, m);
  std::vector<double> fu(n * m), psiv(n), hu(m);
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      if (counts.at(i, k)[0] == 0.0) continue;  // outside G
      for (int c = 0; c < n; ++c)
        psiv[c] = psi_sum.at(i, k)[c] / counts.at(i, k)[0];
      EvalArgs a{g.s[i], g.t[k], state.x.at(i, k), state.xs.at(i, k),
                 state.xt.at(i, k), u.at(i, k)};
      spec.cost.Phi_u(a, hu.data());
      spec.dyn.f_u(a, fu.data());
      std::vector<double> tmp(m);
      vecmat(psiv.data(), fu.data(), tmp.data(), n, m);
      for (int c = 0; c < m; ++c) grad.at(i, k)[c] = hu[c] + tmp[c];
    }
  return grad;
}

double pair_with_costate(const Domain& dom, const ProblemSpec& spec,
                         const StateSolution& state, const CostateSolution& cs,
                         const Field& u, const Field& du) {
  const Grid& g = dom.grid;
  const int n = spec.n(), m = spec.m();
  double total = 0.0;
  std::vector<double> fu(n * m), hu(m), tmp(m);

  auto hu_du_node = [&](const RegionPatch& p, int i, int k) {
    EvalArgs a{g.s[i], g.t[k], state.x.at(i, k), state.xs.at(i, k),
               state.xt.at(i, k), u.at(i, k)};
    spec.cost.Phi_u(a, hu.data());
    spec.dyn.f_u(a, fu.data());
    vecmat(p.psi.at(i, k), fu.data(), tmp.data(), n, m);
    double acc = 0.0;
    for (int c = 0; c < m; ++c) acc += (hu[c] + tmp[c]) * du.at(i, k)[c];
    return acc;
  };
  auto hu_du_arc = [&](double s, double t) {
    // psi -> 0 on the oblique arc (Eq. 4.2)
    std::vector<double> x(n), pp(n), qq(n), uc(m), duv(m);
    state.x.sample(g, s, t, x.data());
    state.xs.sample(g, s, t, pp.data());
    state.xt.sample(g, s, t, qq.data());
    u.sample(g, s, t, uc.data());
    du.sample(g, s, t, duv.data());
    EvalArgs a{s, t, x.data(), pp.data(), qq.data(), uc.data()};
    spec.cost.Phi_u(a, hu.data());
    double acc = 0.0;
    for (int c = 0; c < m; ++c) acc += hu[c] * duv[c];
    return acc;
  };

  for (const auto& p : cs.patches) {
    if (p.kind == RegionPatch::Kind::chain) continue;
    if (p.kind == RegionPatch::Kind::triangle) {
      auto node_fn = [&](int i, int k) { return hu_du_node(p, i, k); };
      double prev_col = 0.0;
      bool first = true;
      for (int i = p.i0; i <= p.i1; ++i) {
        double col = clipped_column(dom, i, p.k0, p.top_t[i - p.i0], node_fn,
                                    hu_du_arc);
        if (!first) total += 0.5 * (g.s[i] - g.s[i - 1]) * (prev_col + col);
        prev_col = col;
        first = false;
      }
    } else {
      for (int i = p.i0; i < p.i1; ++i)
        for (int k = p.k0; k < p.k1; ++k) {
          double w = 0.25 * (g.s[i + 1] - g.s[i]) * (g.t[k + 1] - g.t[k]);
          total += w * (hu_du_node(p, i, k) + hu_du_node(p, i + 1, k) +
                        hu_du_node(p, i, k + 1) + hu_du_node(p, i + 1, k + 1));
        }
    }
  }
  return total;
}

double fd_cost_derivative(const Domain& dom, const ProblemSpec& spec,
                          const Field& u, const Field& du, double eps) {
  Field up = u, um = u;
  for (size_t i = 0; i < u.v.size(); ++i) {
    up.v[i] += eps * du.v[i];
    um.v[i] -= eps * du.v[i];
  }
  StateSolution sp = solve_state(dom, spec, up);
  StateSolution sm = solve_state(dom, spec, um);
  return (cost(dom, spec, sp, up).total - cost(dom, spec, sm, um).total) /
         (2 * eps);
}

NeedleResult needle_increment(const Domain& dom, const ProblemSpec& spec,
                              const Field& u, Point center, const Vec& u1,
                              double eps) {
  const Grid& g = dom.grid;
  const int m = spec.m(), n = spec.n();
  require(dom.strictly_inside(center.s, center.t) &&
              !dom.on_vertex_line(center.s, center.t),
          ErrorCode::geometry, "needle center must lie in G_R");
  // the 2*eps disk must stay in the regular part
  for (double ang = 0; ang < 6.28; ang += 0.39) {
    double ps = center.s + 2 * eps * std::cos(ang);
    double pt = center.t + 2 * eps * std::sin(ang);
    require(dom.strictly_inside(ps, pt), ErrorCode::geometry,
            "needle disk B(center;2 eps) leaves the domain");
  }

  // Plateau profile with a thin linear skirt: equal to 1 on most of the disk
  // so the increment integrates H(u1) - H(u*) rather than a moment average.
  // The skirt narrows like eps^2 so the plateau deficit vanishes at first
  // order, floored at the local grid spacing to stay resolved.
  int ci = Grid::locate(g.s, center.s), ck = Grid::locate(g.t, center.t);
  double h_local = std::max(g.s[ci + 1] - g.s[ci], g.t[ck + 1] - g.t[ck]);
  double skirt = std::max(1.5 * h_local, eps * std::min(0.25, eps / 0.16));
  skirt = std::min(skirt, 0.5 * eps);
  auto shape = [&](double s, double t) {
    double r = std::hypot(s - center.s, t - center.t);
    if (r >= eps) return 0.0;
    if (r <= eps - skirt) return 1.0;
    return (eps - r) / skirt;
  };

  std::vector<double> uc(m);
  u.sample(g, center.s, center.t, uc.data());
  Vec w(m);
  for (int c = 0; c < m; ++c) w[c] = u1[c] - uc[c];

  Field up = u;
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      double sh = shape(g.s[i], g.t[k]);
      if (sh == 0.0) continue;
      for (int c = 0; c < m; ++c) up.at(i, k)[c] += sh * w[c];
    }

  StateSolution s0 = solve_state(dom, spec, u);
  StateSolution s1 = solve_state(dom, spec, up);
  NeedleResult out;
  out.dJ = cost(dom, spec, s1, up).total - cost(dom, spec, s0, u).total;
  out.disk_measure = region_quadrature(
      dom, [&](int i, int k) { return shape(g.s[i], g.t[k]); },
      [&](double s, double t) { return shape(s, t); });

  // predicted increment from the extremum principle
  FTerms ft = compute_F_terms(dom, spec, s0, u);
  CostateSolution cs = sweep_costate(dom, spec, s0, u, ft);
  Vec psi(n);
  cs.eval(dom, center.s, center.t, psi.data());
  std::vector<double> x(n), p(n), q(n);
  s0.sample(g, center.s, center.t, x.data(), p.data(), q.data());
  EvalArgs a0{center.s, center.t, x.data(), p.data(), q.data(), uc.data()};
  double H0 = hamiltonian(spec, a0, psi.data());
  EvalArgs a1 = a0;
  a1.u = u1.data();
  double H1 = hamiltonian(spec, a1, psi.data());
  out.predicted = M_PI * eps * eps * (H1 - H0);
  return out;
}

OptimizeResult projected_gradient(const std::vector<OptProblem>& problems,
                                  const OptimizeOptions& opt) {
  OptimizeResult res;
  for (const auto& pr : problems) res.u.push_back(pr.u0);
  size_t np = problems.size();

  auto clip = [&](size_t pi, Field f) {
    const auto& box = problems[pi].spec->box;
    int m = problems[pi].spec->m();
    const Grid& g = problems[pi].dom->grid;
    for (int i = 0; i < g.ns(); ++i)
      for (int k = 0; k < g.nt(); ++k)
        for (int c = 0; c < m; ++c)
          f.at(i, k)[c] = std::clamp(f.at(i, k)[c], box.lower[c], box.upper[c]);
    return f;
  };

  auto total_cost = [&](const std::vector<Field>& us,
                        std::vector<StateSolution>* states = nullptr) {
    double J = 0.0;
    for (size_t pi = 0; pi < np; ++pi) {
      StateSolution st = solve_state(*problems[pi].dom, *problems[pi].spec, us[pi]);
      J += cost(*problems[pi].dom, *problems[pi].spec, st, us[pi]).total;
      if (states) states->push_back(std::move(st));
    }
    return J;
  };

  // nodal L2 quadrature weights so the Armijo test is grid-independent
  std::vector<std::vector<double>> weights;
  for (size_t pi = 0; pi < np; ++pi) {
    const Grid& g = problems[pi].dom->grid;
    int m = problems[pi].spec->m();
    std::vector<double> w(static_cast<size_t>(g.ns()) * g.nt() * m, 0.0);
    for (int i = 0; i < g.ns(); ++i) {
      double ws = 0.5 * ((i + 1 < g.ns() ? g.s[i + 1] - g.s[i] : 0.0) +
                         (i > 0 ? g.s[i] - g.s[i - 1] : 0.0));
      for (int k = 0; k < g.nt(); ++k) {
        double wt = 0.5 * ((k + 1 < g.nt() ? g.t[k + 1] - g.t[k] : 0.0) +
                           (k > 0 ? g.t[k] - g.t[k - 1] : 0.0));
        for (int c = 0; c < m; ++c)
          w[(static_cast<size_t>(i) * g.nt() + k) * m + c] = ws * wt;
      }
    }
    weights.push_back(std::move(w));
  }

  auto active_fraction = [&](const std::vector<Field>& us) {
    int active = 0, total = 0;
    for (size_t pi = 0; pi < np; ++pi) {
      const auto& box = problems[pi].spec->box;
      int m = problems[pi].spec->m();
      for (size_t v = 0; v < us[pi].v.size(); ++v) {
        int c = static_cast<int>(v) % m;
        ++total;
        if (near(us[pi].v[v], box.lower[c], 1e-12) ||
            near(us[pi].v[v], box.upper[c], 1e-12))
          ++active;
      }
    }
    return total ? double(active) / total : 0.0;
  };

  std::vector<StateSolution> states;
  double J = total_cost(res.u, &states);
  double alpha = 1.0;
  bool alpha_init = false;

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    // gradients
    std::vector<Field> grads;
    double gnorm = 0.0;
    for (size_t pi = 0; pi < np; ++pi) {
      const Domain& dom = *problems[pi].dom;
      const ProblemSpec& spec = *problems[pi].spec;
      FTerms ft = compute_F_terms(dom, spec, states[pi], res.u[pi]);
      CostateSolution cs =
          sweep_costate(dom, spec, states[pi], res.u[pi], ft, opt.sweep_tol);
      Field gr = gradient(dom, spec, states[pi], cs, res.u[pi]);
      // projected-gradient norm: |u - clip(u - g)|_sup
      Field probe = res.u[pi];
      for (size_t v = 0; v < probe.v.size(); ++v) probe.v[v] -= gr.v[v];
      probe = clip(pi, std::move(probe));
      for (size_t v = 0; v < probe.v.size(); ++v)
        gnorm = std::max(gnorm, std::fabs(probe.v[v] - res.u[pi].v[v]));
      grads.push_back(std::move(gr));
    }
    if (!alpha_init) {
      double gsup = 0.0;
      for (const auto& gr : grads) gsup = std::max(gsup, gr.max_abs());
      alpha = 1.0 / std::max(1.0, gsup);
      alpha_init = true;
    }

    if (gnorm < opt.tol) {
      res.trace.push_back({iter, J, gnorm, 0.0, active_fraction(res.u)});
      res.converged = true;
      break;
    }

    // Armijo backtracking on the projected step
    bool accepted = false;
    double Jn = J, used_alpha = alpha;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      std::vector<Field> cand;
      double step_sq = 0.0, step_sup = 0.0;
      for (size_t pi = 0; pi < np; ++pi) {
        Field f = res.u[pi];
        for (size_t v = 0; v < f.v.size(); ++v) f.v[v] -= used_alpha * grads[pi].v[v];
        f = clip(pi, std::move(f));
        for (size_t v = 0; v < f.v.size(); ++v) {
          double d = f.v[v] - res.u[pi].v[v];
          step_sq += weights[pi][v] * d * d;
          step_sup = std::max(step_sup, std::fabs(d));
        }
        cand.push_back(std::move(f));
      }
      if (step_sup < 1e-15) break;  // step below machine resolution
      std::vector<StateSolution> nst;
      Jn = total_cost(cand, &nst);
      if (Jn <= J - opt.armijo_c / used_alpha * step_sq && Jn < J) {
        res.u = std::move(cand);
        states = std::move(nst);
        accepted = true;
        break;
      }
      used_alpha *= 0.5;
    }
    if (!accepted) {
      // No descent step exists at this resolution: the discrete-cost gradient
      // has dropped below the adjoint consistency error.  Stop here; callers
      // see converged = false unless the tolerance was already met.
      require(gnorm <= std::max(1e3 * opt.tol, 1e-6), ErrorCode::no_convergence,
              "LineSearchFailed: no Armijo step accepted at gradient norm " +
                  std::to_string(gnorm));
      res.stalled = true;
      res.trace.push_back({iter, J, gnorm, 0.0, active_fraction(res.u)});
      break;
    }
    res.trace.push_back({iter, Jn, gnorm, used_alpha, active_fraction(res.u)});
    J = Jn;
    alpha = std::min(used_alpha * 2.0, 1e6);
  }
  res.final_J = J;
  return res;
}

ExtremumReport check_extremum(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state,
                              const CostateSolution& cs, const Field& u,
                              int sample_count, int lattice_count, double tol_rel,
                              unsigned seed) {
  const Grid& g = dom.grid;
  const int n = spec.n(), m = spec.m();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(0.0, dom.a), ut(0.0, dom.b);
  ExtremumReport rep;
  rep.lattice = lattice_count;
  std::vector<double> psi(n), x(n), p(n), q(n), uc(m), u1(m);
  while (rep.samples < sample_count) {
    double s = us(rng), t = ut(rng);
    if (!dom.strictly_inside(s, t) || dom.on_vertex_line(s, t)) continue;
    ++rep.samples;
    cs.eval(dom, s, t, psi.data());
    state.sample(g, s, t, x.data(), p.data(), q.data());
    u.sample(g, s, t, uc.data());
    EvalArgs a{s, t, x.data(), p.data(), q.data(), uc.data()};
    double Hstar = hamiltonian(spec, a, psi.data());
    double tol = tol_rel * std::max(1.0, std::fabs(Hstar));
    rep.tol = tol;
    // lattice over the box (component-wise; full product for m <= 2)
    int total = 1;
    for (int c = 0; c < m; ++c) total *= lattice_count;
    for (int idx = 0; idx < total; ++idx) {
      int rem = idx;
      for (int c = 0; c < m; ++c) {
        int j = rem % lattice_count;
        rem /= lattice_count;
        u1[c] = spec.box.lower[c] +
                (spec.box.upper[c] - spec.box.lower[c]) * j / (lattice_count - 1);
      }
      EvalArgs a1 = a;
      a1.u = u1.data();
      double H1 = hamiltonian(spec, a1, psi.data());
      if (Hstar > H1 + tol) {
        ++rep.violations;
        rep.max_violation = std::max(rep.max_violation, Hstar - H1);
      }
    }
  }
  return rep;
}

}  // namespace gd
