#pragma once

#include "problem.hpp"
#include "volterra.hpp"

namespace gd {

// State trajectory of (2.1) on the full tensor grid of the bounding box.
// Since W(s,t) stays inside G for (s,t) in G, the restriction to G coincides
// with the curvilinear-domain solution; values outside G are a harmless
// extension used by cut-cell quadrature.
struct StateSolution {
  Field x, xs, xt, xst;
  int iterations = 0;
  std::vector<double> residual_history;

  void sample(const Grid& g, double s, double t, double* x_out, double* p_out,
              double* q_out) const {
    if (x_out) x.sample(g, s, t, x_out);
    if (p_out) xs.sample(g, s, t, p_out);
    if (q_out) xt.sample(g, s, t, q_out);
  }
};

StateSolution solve_state(const Domain& dom, const ProblemSpec& spec,
                          const Field& u, double tol = 1e-10, int max_iter = 200);

// Linearized Goursat problem (3.1) around `base`, driven by du; zero data.
// Returns the (delta x, delta x_s, delta x_t) triple as PicardResult fields.
PicardResult state_variation(const Domain& dom, const ProblemSpec& spec,
                             const StateSolution& base, const Field& u,
                             const Field& du, double tol = 1e-10,
                             int max_iter = 200);

// Linearization coefficient fields on the full grid, evaluated along a state:
// A_x, A_p, A_q are n x n per node (row-major), f_u is n x m per node.
struct LinearizedCoeffs {
  Field Ax, Ap, Aq, fu;
};
LinearizedCoeffs linearize(const Domain& dom, const ProblemSpec& spec,
                           const StateSolution& state, const Field& u);

}  // namespace gd
