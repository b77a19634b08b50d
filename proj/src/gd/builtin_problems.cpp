#include <cmath>

#include "problem.hpp"

namespace gd {

namespace {

double param(const std::map<std::string, double>& p, const std::string& key,
             double dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

void zero_bc(ProblemSpec& spec) {
  int n = spec.dyn.n;
  spec.bc.x1 = [n](double, double* o) { std::fill(o, o + n, 0.0); };
  spec.bc.x2 = [n](double, double* o) { std::fill(o, o + n, 0.0); };
  spec.bc.x1p = spec.bc.x1;
  spec.bc.x2p = spec.bc.x2;
  spec.bc.x0.assign(n, 0.0);
}

// scalar linear dynamics f = cx*x + cp*p + cq*q + u
Dynamics scalar_linear(double cx, double cp, double cq) {
  Dynamics d;
  d.n = d.m = 1;
  d.f = [cx, cp, cq](const EvalArgs& a, double* o) {
    o[0] = cx * a.x[0] + cp * a.p[0] + cq * a.q[0] + a.u[0];
  };
  d.f_x = [cx](const EvalArgs&, double* o) { o[0] = cx; };
  d.f_p = [cp](const EvalArgs&, double* o) { o[0] = cp; };
  d.f_q = [cq](const EvalArgs&, double* o) { o[0] = cq; };
  d.f_u = [](const EvalArgs&, double* o) { o[0] = 1.0; };
  d.lipschitz_hint = std::fabs(cx) + std::fabs(cp) + std::fabs(cq);
  return d;
}

// quadratic tracking cost Phi = (x - d(s,t))^2 + lambda u^2
CostIntegrands tracking_cost(std::function<double(double, double)> target,
                             double lambda) {
  CostIntegrands c;
  c.Phi = [target, lambda](const EvalArgs& a) {
    double e = a.x[0] - target(a.s, a.t);
    return e * e + lambda * a.u[0] * a.u[0];
  };
  c.Phi_x = [target](const EvalArgs& a, double* o) {
    o[0] = 2.0 * (a.x[0] - target(a.s, a.t));
  };
  c.Phi_p = [](const EvalArgs&, double* o) { o[0] = 0.0; };
  c.Phi_q = [](const EvalArgs&, double* o) { o[0] = 0.0; };
  c.Phi_u = [lambda](const EvalArgs& a, double* o) { o[0] = 2.0 * lambda * a.u[0]; };
  return c;
}

}  // namespace

BuiltinProblem make_builtin_problem(const std::string& id, double h_max,
                                    const std::map<std::string, double>& params) {
  BuiltinProblem bp;
  ProblemSpec& spec = bp.spec;
  spec.name = id;
  double lambda = param(params, "lambda", 0.1);

  if (id == "lq_rect") {
    bp.domain = make_rectangle(1.0, 1.0, h_max);
    spec.dyn = scalar_linear(param(params, "cx", 0.5), 0.0, 0.0);
    spec.cost = tracking_cost([](double s, double t) { return s * t; }, lambda);
    spec.box = {{-4.0}, {4.0}};
    zero_bc(spec);
  } else if (id == "lq_rect_lateral") {
    // Zero dynamics coupling; linear costs make the co-state closed-form.
    bp.domain = make_rectangle(1.0, 1.0, h_max);
    spec.dyn = scalar_linear(0.0, 0.0, 0.0);
    double alpha = param(params, "alpha", 0.3);
    double kappa = param(params, "kappa", 0.2);
    spec.cost.Phi = [lambda](const EvalArgs& a) {
      return a.x[0] + lambda * a.u[0] * a.u[0];
    };
    spec.cost.Phi_x = [](const EvalArgs&, double* o) { o[0] = 1.0; };
    spec.cost.Phi_p = [](const EvalArgs&, double* o) { o[0] = 0.0; };
    spec.cost.Phi_q = [](const EvalArgs&, double* o) { o[0] = 0.0; };
    spec.cost.Phi_u = [lambda](const EvalArgs& a, double* o) {
      o[0] = 2.0 * lambda * a.u[0];
    };
    spec.cost.Phi1 = [alpha](const BoundaryEvalArgs& a) { return alpha * a.x[0]; };
    spec.cost.Phi1_x = [alpha](const BoundaryEvalArgs&, double* o) { o[0] = alpha; };
    spec.cost.Phi1_eta = [](const BoundaryEvalArgs&, double* o) { o[0] = 0.0; };
    spec.cost.Phi0 = [kappa](int, const Point&, const double* x) {
      return kappa * x[0];
    };
    spec.cost.Phi0_x = [kappa](int, const Point&, const double*, double* o) {
      o[0] = kappa;
    };
    spec.box = {{-4.0}, {4.0}};
    zero_bc(spec);
  } else if (id == "lq_disk" || id == "lq_disk_phi1") {
    bp.domain = make_quarter_disk(1.0, h_max);
    spec.dyn = scalar_linear(param(params, "cx", 0.5), 0.0, 0.0);
    spec.cost = tracking_cost([](double s, double t) { return s + t; }, lambda);
    if (id == "lq_disk_phi1") {
      double beta = param(params, "beta", 0.25);
      spec.cost.Phi1 = [beta](const BoundaryEvalArgs& a) {
        return beta * a.x[0] * a.x[0];
      };
      spec.cost.Phi1_x = [beta](const BoundaryEvalArgs& a, double* o) {
        o[0] = 2.0 * beta * a.x[0];
      };
      spec.cost.Phi1_eta = [](const BoundaryEvalArgs&, double* o) { o[0] = 0.0; };
    }
    spec.box = {{-4.0}, {4.0}};
    zero_bc(spec);
  } else if (id == "stair_vertex") {
    bp.domain = make_staircase(h_max);
    spec.dyn = scalar_linear(param(params, "cx", 0.5), param(params, "cp", 0.25), 0.0);
    spec.cost = tracking_cost([](double, double) { return 1.0; }, lambda);
    double kappa = param(params, "kappa", 0.5);
    // single vertex cost at P_2 = (1,1)
    spec.cost.Phi0 = [kappa](int r, const Point&, const double* x) {
      return r == 2 ? kappa * x[0] * x[0] : 0.0;
    };
    spec.cost.Phi0_x = [kappa](int r, const Point&, const double* x, double* o) {
      o[0] = r == 2 ? 2.0 * kappa * x[0] : 0.0;
    };
    spec.box = {{-4.0}, {4.0}};
    spec.bc.x1 = [](double, double* o) { o[0] = 1.0; };
    spec.bc.x2 = [](double, double* o) { o[0] = 1.0; };
    spec.bc.x1p = [](double, double* o) { o[0] = 0.0; };
    spec.bc.x2p = [](double, double* o) { o[0] = 0.0; };
    spec.bc.x0 = {1.0};
  } else if (id == "stair_phi1eta") {
    bp.domain = make_staircase(h_max);
    spec.dyn = scalar_linear(0.0, 0.0, 0.0);
    spec.cost = tracking_cost([](double, double) { return 0.0; }, lambda);
    double c1 = param(params, "c1", 0.2);
    double c2 = param(params, "c2", 0.1);
    spec.cost.Phi1 = [c1, c2](const BoundaryEvalArgs& a) {
      return c1 * a.eta[0] * a.eta[0] + c2 * a.x[0] * a.eta[0];
    };
    spec.cost.Phi1_x = [c2](const BoundaryEvalArgs& a, double* o) {
      o[0] = c2 * a.eta[0];
    };
    spec.cost.Phi1_eta = [c1, c2](const BoundaryEvalArgs& a, double* o) {
      o[0] = 2.0 * c1 * a.eta[0] + c2 * a.x[0];
    };
    spec.box = {{-4.0}, {4.0}};
    spec.bc.x1 = [](double s, double* o) { o[0] = s * s; };
    spec.bc.x2 = [](double t, double* o) { o[0] = std::sin(t); };
    spec.bc.x1p = [](double s, double* o) { o[0] = 2.0 * s; };
    spec.bc.x2p = [](double t, double* o) { o[0] = std::cos(t); };
    spec.bc.x0 = {0.0};
  } else if (id == "triangle_lq") {
    bp.domain = make_triangle(param(params, "A", 1.0), h_max);
    spec.dyn = scalar_linear(param(params, "cx", 0.5), 0.0, 0.0);
    spec.cost = tracking_cost([](double s, double t) { return s * t; }, lambda);
    spec.box = {{-4.0}, {4.0}};
    zero_bc(spec);
  } else if (id == "bilinear") {
    bp.domain = make_rectangle(1.0, 1.0, h_max);
    spec.dyn.n = spec.dyn.m = 1;
    spec.dyn.f = [](const EvalArgs& a, double* o) { o[0] = a.x[0] * a.u[0]; };
    spec.dyn.f_x = [](const EvalArgs& a, double* o) { o[0] = a.u[0]; };
    spec.dyn.f_p = [](const EvalArgs&, double* o) { o[0] = 0.0; };
    spec.dyn.f_q = [](const EvalArgs&, double* o) { o[0] = 0.0; };
    spec.dyn.f_u = [](const EvalArgs& a, double* o) { o[0] = a.x[0]; };
    spec.dyn.lipschitz_hint = 4.0;
    spec.cost = tracking_cost([](double s, double t) { return 1.0 + s * t; }, lambda);
    spec.box = {{-2.0}, {2.0}};
    spec.bc.x1 = [](double, double* o) { o[0] = 1.0; };
    spec.bc.x2 = [](double, double* o) { o[0] = 1.0; };
    spec.bc.x1p = [](double, double* o) { o[0] = 0.0; };
    spec.bc.x2p = [](double, double* o) { o[0] = 0.0; };
    spec.bc.x0 = {1.0};
  } else if (id == "pq_transport") {
    bp.domain = make_rectangle(1.0, 1.0, h_max);
    spec.dyn = scalar_linear(param(params, "cx", 0.4), param(params, "cp", 0.3),
                             param(params, "cq", -0.2));
    double mu = param(params, "mu", 0.05);
    spec.cost.Phi = [lambda, mu](const EvalArgs& a) {
      double e = a.x[0] - a.s * a.t;
      return e * e + mu * (a.p[0] * a.p[0] + a.q[0] * a.q[0]) +
             lambda * a.u[0] * a.u[0];
    };
    spec.cost.Phi_x = [](const EvalArgs& a, double* o) {
      o[0] = 2.0 * (a.x[0] - a.s * a.t);
    };
    spec.cost.Phi_p = [mu](const EvalArgs& a, double* o) { o[0] = 2.0 * mu * a.p[0]; };
    spec.cost.Phi_q = [mu](const EvalArgs& a, double* o) { o[0] = 2.0 * mu * a.q[0]; };
    spec.cost.Phi_u = [lambda](const EvalArgs& a, double* o) {
      o[0] = 2.0 * lambda * a.u[0];
    };
    spec.box = {{-4.0}, {4.0}};
    zero_bc(spec);
  } else if (id == "lin2d") {
    bp.domain = make_rectangle(1.0, 1.0, h_max);
    spec.dyn.n = 2;
    spec.dyn.m = 1;
    spec.dyn.f = [](const EvalArgs& a, double* o) {
      o[0] = 0.3 * a.x[1] + a.u[0];
      o[1] = -0.2 * a.x[0] + 0.5 * a.u[0];
    };
    spec.dyn.f_x = [](const EvalArgs&, double* o) {
      o[0] = 0.0; o[1] = 0.3; o[2] = -0.2; o[3] = 0.0;
    };
    spec.dyn.f_p = [](const EvalArgs&, double* o) { std::fill(o, o + 4, 0.0); };
    spec.dyn.f_q = [](const EvalArgs&, double* o) { std::fill(o, o + 4, 0.0); };
    spec.dyn.f_u = [](const EvalArgs&, double* o) { o[0] = 1.0; o[1] = 0.5; };
    spec.cost.Phi = [lambda](const EvalArgs& a) {
      double e0 = a.x[0] - a.s * a.t, e1 = a.x[1] - (a.s + a.t);
      return e0 * e0 + e1 * e1 + lambda * a.u[0] * a.u[0];
    };
    spec.cost.Phi_x = [](const EvalArgs& a, double* o) {
      o[0] = 2.0 * (a.x[0] - a.s * a.t);
      o[1] = 2.0 * (a.x[1] - (a.s + a.t));
    };
    spec.cost.Phi_p = [](const EvalArgs&, double* o) { o[0] = o[1] = 0.0; };
    spec.cost.Phi_q = [](const EvalArgs&, double* o) { o[0] = o[1] = 0.0; };
    spec.cost.Phi_u = [lambda](const EvalArgs& a, double* o) {
      o[0] = 2.0 * lambda * a.u[0];
    };
    spec.box = {{-4.0}, {4.0}};
    zero_bc(spec);
  } else {
    throw GdError(ErrorCode::config_invalid, "unknown problem id: " + id);
  }

  finalize_spec(spec);
  return bp;
}

std::vector<std::string> builtin_problem_ids() {
  return {"lq_rect",     "lq_rect_lateral", "lq_disk",  "lq_disk_phi1",
          "stair_vertex", "stair_phi1eta",   "triangle_lq", "bilinear",
          "pq_transport", "lin2d"};
}

}  // namespace gd
