#pragma once

#include "adjoint.hpp"

namespace gd {

struct CostBreakdown {
  double area_term = 0, arc_term = 0, vertex_term = 0, total = 0;
};

// Quadrature over G that walks the zone regions (clipped trapezoid on the
// curvilinear triangles, tensor trapezoid on the rectangles).  node_fn is
// evaluated at grid nodes, point_fn at off-node boundary points.
double region_quadrature(const Domain& dom,
                         const std::function<double(int, int)>& node_fn,
                         const std::function<double(double, double)>& point_fn);

CostBreakdown cost(const Domain& dom, const ProblemSpec& spec,
                   const StateSolution& state, const Field& u);

// Nodal H_u field (sheet values averaged on vertex lines); zero outside G.
Field gradient(const Domain& dom, const ProblemSpec& spec,
               const StateSolution& state, const CostateSolution& cs,
               const Field& u);

// Region-aware pairing sum_regions int H_u . du dA; this is the discrete
// realization of Eq. (3.10) used by the gradient oracle.
double pair_with_costate(const Domain& dom, const ProblemSpec& spec,
                         const StateSolution& state, const CostateSolution& cs,
                         const Field& u, const Field& du);

// Central difference of J through full nonlinear re-solves (the oracle).
double fd_cost_derivative(const Domain& dom, const ProblemSpec& spec,
                          const Field& u, const Field& du, double eps);

struct NeedleResult {
  double dJ = 0;         // J(u + v_eps) - J(u)
  double predicted = 0;  // pi eps^2 Delta_u H(center; u1 - u*(center))
  double disk_measure = 0;  // discrete quadrature mass of the bump profile
};
NeedleResult needle_increment(const Domain& dom, const ProblemSpec& spec,
                              const Field& u, Point center, const Vec& u1,
                              double eps);

struct TraceRow {
  int iter;
  double J, grad_norm, step, active_fraction;
};

struct OptProblem {
  const Domain* dom;
  const ProblemSpec* spec;
  Field u0;
};

struct OptimizeOptions {
  double tol = 1e-6;
  int max_iter = 200;
  double armijo_c = 1e-4;
  int max_backtracks = 50;
  double sweep_tol = 1e-11;
};

struct OptimizeResult {
  std::vector<Field> u;
  std::vector<TraceRow> trace;
  bool converged = false;
  bool stalled = false;  // line search exhausted at the discretization floor
  double final_J = 0;
};

// Projected gradient with Armijo backtracking over one or more coupled
// problems (the cost is the sum; controls are per-problem fields).
OptimizeResult projected_gradient(const std::vector<OptProblem>& problems,
                                  const OptimizeOptions& opt);

struct ExtremumReport {
  int samples = 0, lattice = 0, violations = 0;
  double max_violation = 0;
  double tol = 0;
};
ExtremumReport check_extremum(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state,
                              const CostateSolution& cs, const Field& u,
                              int sample_count, int lattice_count, double tol_rel,
                              unsigned seed);

}  // namespace gd
