#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <json.hpp>

#include "io.hpp"

namespace gd {

using nlohmann::json;

namespace {

std::string path_join(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

Field constant_control(const Domain& dom, int m, double value) {
  Field u = Field::full(dom.grid, m);
  u.fill(value);
  return u;
}

void write_state_csv(const std::string& path, const Domain& dom,
                     const StateSolution& st, int n) {
  std::vector<std::string> cols{"s", "t"};
  for (int c = 0; c < n; ++c) cols.push_back("x" + std::to_string(c));
  for (int c = 0; c < n; ++c) cols.push_back("xs" + std::to_string(c));
  for (int c = 0; c < n; ++c) cols.push_back("xt" + std::to_string(c));
  CsvWriter w(cols);
  const Grid& g = dom.grid;
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      if (g.node_class(i, k) == NodeClass::outside) continue;
      std::vector<double> row{g.s[i], g.t[k]};
      for (int c = 0; c < n; ++c) row.push_back(st.x.at(i, k)[c]);
      for (int c = 0; c < n; ++c) row.push_back(st.xs.at(i, k)[c]);
      for (int c = 0; c < n; ++c) row.push_back(st.xt.at(i, k)[c]);
      w.row(row);
    }
  w.save(path);
}

void write_residuals_csv(const std::string& path,
                         const std::vector<double>& history) {
  CsvWriter w({"iteration", "sup_residual"});
  for (size_t i = 0; i < history.size(); ++i)
    w.row({double(i + 1), history[i]});
  w.save(path);
}

void write_control_csv(const std::string& path, const Domain& dom, const Field& u) {
  std::vector<std::string> cols{"s", "t"};
  for (int c = 0; c < u.dim; ++c) cols.push_back("u" + std::to_string(c));
  CsvWriter w(cols);
  const Grid& g = dom.grid;
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      if (g.node_class(i, k) == NodeClass::outside) continue;
      std::vector<double> row{g.s[i], g.t[k]};
      for (int c = 0; c < u.dim; ++c) row.push_back(u.at(i, k)[c]);
      w.row(row);
    }
  w.save(path);
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  CsvWriter w({"iter", "J", "grad_norm", "step", "active_fraction"});
  for (const auto& r : trace)
    w.row({double(r.iter), r.J, r.grad_norm, r.step, r.active_fraction});
  w.save(path);
}

// smooth random control direction, sup-normalized
Field random_direction(const Domain& dom, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double a0 = dist(rng), a1 = dist(rng), a2 = dist(rng), a3 = dist(rng),
         a4 = dist(rng);
  const Grid& g = dom.grid;
  Field du = Field::full(g, m);
  double sa = dom.a > 0 ? M_PI / dom.a : M_PI;
  double sb = dom.b > 0 ? M_PI / dom.b : M_PI;
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      double s = g.s[i], t = g.t[k];
      double v = a0 + a1 * std::sin(sa * s) * std::cos(sb * t) +
                 a2 * std::cos(sa * s) * std::sin(sb * t) +
                 a3 * std::sin(2 * sa * s) * std::sin(2 * sb * t) +
                 a4 * std::cos(2 * sa * s) * std::cos(2 * sb * t);
      for (int c = 0; c < m; ++c) du.at(i, k)[c] = v;
    }
  double mx = du.max_abs();
  if (mx > 0)
    for (double& v : du.v) v /= mx;
  return du;
}

double u_true_eval(const TsunamiConfig& tc, double r, double t) {
  if (tc.u_true_id == "zero") return 0.0;
  auto P = [&](const char* k, double d) {
    auto it = tc.u_true_params.find(k);
    return it == tc.u_true_params.end() ? d : it->second;
  };
  double amp = P("amp", 1.0), rc = P("rc", 0.5 * (tc.model.r1 + tc.model.r2)),
         tc0 = P("tc", 0.5 * (tc.model.t1 + tc.model.t2)), wr = P("wr", 0.25),
         wt = P("wt", 0.25);
  double dr = (r - rc) / wr, dt = (t - tc0) / wt;
  return amp * std::exp(-(dr * dr + dt * dt));
}

int cmd_forward(const RunConfig& cfg, const std::string& out) {
  BuiltinProblem bp = build_problem(cfg);
  Field u = constant_control(bp.domain, bp.spec.m(), cfg.forward_control);
  StateSolution st = solve_state(bp.domain, bp.spec, u, cfg.solver_tol);
  write_state_csv(path_join(out, "state.csv"), bp.domain, st, bp.spec.n());
  write_residuals_csv(path_join(out, "residuals.csv"), st.residual_history);
  write_text_file(path_join(out, "domain.json"), bp.domain.to_json());
  return 0;
}

int cmd_adjoint_check(const RunConfig& cfg, const std::string& out) {
  BuiltinProblem bp = build_problem(cfg);
  const Domain& dom = bp.domain;
  Field u = constant_control(dom, bp.spec.m(), 0.25);
  StateSolution st = solve_state(dom, bp.spec, u, cfg.solver_tol);
  FTerms ft = compute_F_terms(dom, bp.spec, st, u);
  CostateSolution cs = sweep_costate(dom, bp.spec, st, u, ft);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> us(0.0, dom.a), ut(0.0, dom.b);
  json rows = json::array();
  double max_abs = 0.0, scale = 0.0;
  int found = 0;
  while (found < cfg.ac_checkpoints) {
    double s = us(rng), t = ut(rng);
    if (!dom.strictly_inside(s, t) || dom.on_vertex_line(s, t)) continue;
    ++found;
    Vec qv = costate_by_quadrature(dom, bp.spec, st, u, ft, {s, t});
    Vec sv(bp.spec.n());
    cs.eval(dom, s, t, sv.data());
    double dif = 0.0;
    for (int c = 0; c < bp.spec.n(); ++c) {
      scale = std::max(scale, std::fabs(qv[c]));
      dif = std::max(dif, std::fabs(qv[c] - sv[c]));
    }
    max_abs = std::max(max_abs, dif);
    rows.push_back({{"s", s}, {"t", t}, {"abs_err", dif}});
  }
  // relative to the checkpoint sup of |psi|
  double max_rel = max_abs / std::max(scale, 1e-12);
  bool pass = max_rel < cfg.ac_tol;
  json rep{{"checkpoints", cfg.ac_checkpoints},
           {"max_rel_err", max_rel},
           {"tol", cfg.ac_tol},
           {"pass", pass},
           {"points", rows}};
  write_text_file(path_join(out, "report.json"), rep.dump(2));
  write_text_file(path_join(out, "costate_sweep.csv"), cs.to_csv(dom));
  write_text_file(path_join(out, "domain.json"), dom.to_json());
  return pass ? 0 : 1;
}

int cmd_gradient_check(const RunConfig& cfg, const std::string& out) {
  BuiltinProblem bp = build_problem(cfg);
  const Domain& dom = bp.domain;
  Field u = constant_control(dom, bp.spec.m(), 0.25);
  StateSolution st = solve_state(dom, bp.spec, u, cfg.solver_tol);
  FTerms ft = compute_F_terms(dom, bp.spec, st, u);
  CostateSolution cs = sweep_costate(dom, bp.spec, st, u, ft);

  std::mt19937_64 rng(cfg.seed);
  std::vector<double> adjs, fds;
  for (int d = 0; d < cfg.gc_directions; ++d) {
    Field du = random_direction(dom, bp.spec.m(), rng);
    adjs.push_back(pair_with_costate(dom, bp.spec, st, cs, u, du));
    fds.push_back(fd_cost_derivative(dom, bp.spec, u, du, cfg.gc_eps));
  }
  // relative to max(|fd|, floor) with the floor at the probe-family scale,
  // so directions with a near-zero derivative stay well conditioned
  double floor_scale = 0.0;
  for (double f : fds) floor_scale += std::fabs(f);
  floor_scale /= std::max<size_t>(1, fds.size());
  json rows = json::array();
  double worst = 0.0;
  for (int d = 0; d < cfg.gc_directions; ++d) {
    double rel = std::fabs(adjs[d] - fds[d]) /
                 std::max(std::fabs(fds[d]), std::max(floor_scale, 1e-12));
    worst = std::max(worst, rel);
    rows.push_back(
        {{"direction", d}, {"adjoint", adjs[d]}, {"fd", fds[d]}, {"rel_err", rel}});
  }
  bool pass = worst < cfg.gc_tol;
  json rep{{"directions", cfg.gc_directions},
           {"eps", cfg.gc_eps},
           {"max_rel_err", worst},
           {"tol", cfg.gc_tol},
           {"pass", pass},
           {"rows", rows}};
  write_text_file(path_join(out, "report.json"), rep.dump(2));
  return pass ? 0 : 1;
}

int cmd_optimize(const RunConfig& cfg, const std::string& out) {
  BuiltinProblem bp = build_problem(cfg);
  const Domain& dom = bp.domain;
  OptProblem op{&dom, &bp.spec, constant_control(dom, bp.spec.m(), 0.0)};
  OptimizeOptions oo;
  oo.tol = cfg.opt_tol;
  oo.max_iter = cfg.opt_max_iter;
  oo.armijo_c = cfg.armijo_c;
  OptimizeResult res = projected_gradient({op}, oo);

  write_trace_csv(path_join(out, "trace.csv"), res.trace);
  write_control_csv(path_join(out, "control.csv"), dom, res.u[0]);
  StateSolution st = solve_state(dom, bp.spec, res.u[0], cfg.solver_tol);
  FTerms ft = compute_F_terms(dom, bp.spec, st, res.u[0]);
  CostateSolution cs = sweep_costate(dom, bp.spec, st, res.u[0], ft);
  ExtremumReport er = check_extremum(dom, bp.spec, st, cs, res.u[0], 200, 11, 1e-6,
                                     static_cast<unsigned>(cfg.seed) + 1);
  json rep{{"converged", res.converged}, {"final_J", res.final_J},
           {"samples", er.samples},      {"lattice", er.lattice},
           {"violations", er.violations}, {"max_violation", er.max_violation}};
  write_text_file(path_join(out, "extremum.json"), rep.dump(2));
  return res.converged && er.violations == 0 ? 0 : 1;
}

TsunamiSetup setup_from_config(const RunConfig& cfg, double lambda) {
  const TsunamiConfig& tc = *cfg.tsunami;
  CharacteristicMap map = build_characteristic_map(tc.model);
  return quadrant_decompose(map, cfg.hmax, lambda);
}

int cmd_tsunami_twin(const RunConfig& cfg, const std::string& out) {
  const TsunamiConfig& tc = *cfg.tsunami;
  TsunamiSetup setup = setup_from_config(cfg, tc.lambdas.front());
  synth_observations(
      setup, [&](double r, double t) { return u_true_eval(tc, r, t); }, tc.noise,
      static_cast<unsigned>(cfg.seed));

  CsvWriter wo({"quadrant", "s", "tp", "r", "t", "v_obs"});
  CsvWriter wu({"quadrant", "s", "tp", "r", "t", "u_true"});
  for (int qi = 0; qi < 4; ++qi) {
    const auto& q = setup.quads[qi];
    const Grid& g = q.dom.grid;
    for (int i = 0; i < g.ns(); ++i)
      for (int k = 0; k < g.nt(); ++k) {
        if (g.node_class(i, k) == NodeClass::outside) continue;
        double r, t;
        setup.map.from_char(q.es * g.s[i], q.et * g.t[k], &r, &t);
        wo.row({double(qi + 1), q.es * g.s[i], q.et * g.t[k], r, t,
                q.obs.at(i, k)[0]});
        wu.row({double(qi + 1), q.es * g.s[i], q.et * g.t[k], r, t,
                q.u_true.at(i, k)[0]});
      }
  }
  wo.save(path_join(out, "observations.csv"));
  wu.save(path_join(out, "u_true.csv"));
  json rep{{"A", setup.map.A},
           {"s0", setup.map.s0},
           {"t0p", setup.map.t0p},
           {"residual_eq4", setup.map.residual_eq4},
           {"noise", tc.noise}};
  write_text_file(path_join(out, "map.json"), rep.dump(2));
  return 0;
}

int cmd_tsunami_invert(const RunConfig& cfg, const std::string& out) {
  const TsunamiConfig& tc = *cfg.tsunami;
  CsvWriter sweep({"lambda", "J", "misfit", "regularization", "rel_l2_error"});
  json misfit_rep = json::array();
  bool ok = true;
  for (double lambda : tc.lambdas) {
    TsunamiSetup setup = setup_from_config(cfg, lambda);
    synth_observations(
        setup, [&](double r, double t) { return u_true_eval(tc, r, t); }, tc.noise,
        static_cast<unsigned>(cfg.seed));
    OptimizeOptions oo;
    oo.tol = cfg.opt_tol;
    oo.max_iter = cfg.opt_max_iter;
    oo.armijo_c = cfg.armijo_c;
    InverseResult res = inverse_solve(setup, oo);
    sweep.row({lambda, res.J, res.misfit, res.regularization, res.rel_l2_error});
    misfit_rep.push_back({{"lambda", lambda},
                          {"J", res.J},
                          {"misfit", res.misfit},
                          {"regularization", res.regularization},
                          {"rel_l2_error", res.rel_l2_error}});

    std::string tag = format_g17(lambda);
    CsvWriter wu({"quadrant", "s", "tp", "r", "t", "u_est", "u_true"});
    for (int qi = 0; qi < 4; ++qi) {
      const auto& q = setup.quads[qi];
      const Grid& g = q.dom.grid;
      for (int i = 0; i < g.ns(); ++i)
        for (int k = 0; k < g.nt(); ++k) {
          if (g.node_class(i, k) == NodeClass::outside) continue;
          double r, t;
          setup.map.from_char(q.es * g.s[i], q.et * g.t[k], &r, &t);
          wu.row({double(qi + 1), q.es * g.s[i], q.et * g.t[k], r, t,
                  res.u_est[qi].at(i, k)[0], q.u_true.at(i, k)[0]});
        }
    }
    wu.save(path_join(out, "u_est_lambda_" + tag + ".csv"));
    write_trace_csv(path_join(out, "trace_lambda_" + tag + ".csv"), res.trace);
  }
  sweep.save(path_join(out, "lambda_sweep.csv"));
  write_text_file(path_join(out, "misfit.json"), json(misfit_rep).dump(2));
  return ok ? 0 : 1;
}

}  // namespace

int run_command(const RunConfig& cfg, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  if (cfg.command == "forward") code = cmd_forward(cfg, out_dir);
  else if (cfg.command == "adjoint-check") code = cmd_adjoint_check(cfg, out_dir);
  else if (cfg.command == "gradient-check") code = cmd_gradient_check(cfg, out_dir);
  else if (cfg.command == "optimize") code = cmd_optimize(cfg, out_dir);
  else if (cfg.command == "tsunami-twin") code = cmd_tsunami_twin(cfg, out_dir);
  else if (cfg.command == "tsunami-invert") code = cmd_tsunami_invert(cfg, out_dir);
  else throw GdError(ErrorCode::config_invalid, "unknown command " + cfg.command);

  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest{{"config", json::parse(cfg.echo_json)},
                {"tool_version", "0.1.0"},
                {"seed", cfg.seed},
                {"exit_code", code},
                {"wall_time_s", wall}};
  write_text_file(path_join(out_dir, "manifest.json"), manifest.dump(2));
  return code;
}

int run_config_text(const std::string& config_json, const std::string& out_dir,
                    std::string* error_message) {
  try {
    RunConfig cfg = parse_config(config_json);
    std::string out = out_dir.empty() ? cfg.out : out_dir;
    return run_command(cfg, out);
  } catch (const GdError& e) {
    if (error_message) *error_message = e.what();
    switch (e.code()) {
      case ErrorCode::config_invalid: return 2;
      case ErrorCode::check_failed: return 1;
      default: return 3;
    }
  } catch (const std::exception& e) {
    if (error_message) *error_message = e.what();
    return 3;
  }
}

}  // namespace gd
