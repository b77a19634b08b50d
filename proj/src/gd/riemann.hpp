#pragma once

#include "forward.hpp"

namespace gd {

// Matrix-valued Riemann function restricted to one base/target point.
// values.at(i,k) holds R^i_j row-major over the local grid; outside the
// support quadrant the family is zero by convention.
struct RiemannFamily {
  enum class Orientation { forward, adjoint };
  Orientation orientation;
  Point base;  // base point (forward: first pair varies >= base;
               //             adjoint: second pair varies <= base)
  int n = 1;
  Grid local;  // local tensor grid (base coordinates inserted)
  Field values;

  void value_at(double s, double t, double* out) const;
};

// Linearization data shared by Riemann and co-state solves.
struct RiemannContext {
  LinearizedCoeffs lin;
  Field DsAp, DtAq;  // total derivatives of the composed coefficient fields
  Field Abar;        // A_x - Ds A_p - Dt A_q
};
RiemannContext make_riemann_context(const Domain& dom, const ProblemSpec& spec,
                                    const StateSolution& state, const Field& u);

// R(.,.,base) per (3.3) on {first pair >= base} via the forward Picard engine.
RiemannFamily riemann_forward(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state, const Field& u,
                              Point base, double tol = 1e-12);

// R(target,.,.) per (3.4) on {second pair <= target}.
RiemannFamily riemann_adjoint(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state, const Field& u,
                              Point target, double tol = 1e-12,
                              const RiemannContext* ctx = nullptr);

// Line-restricted families rho_1(target; tau) = R((s0,tau),(s0,t0)) and
// rho_2(target; sigma) = R((sigma,t0),(s0,t0)), Eq. (4.12)/(4.13).
struct LineFamily {
  std::vector<double> nodes;  // tau (or sigma) values, first entry = target
  std::vector<double> mats;   // nodes.size() matrices, n*n row-major
  int n = 1;
  const double* at(int j) const { return mats.data() + static_cast<size_t>(j) * n * n; }
};
struct AuxCostates {
  LineFamily rho1;  // along the vertical line through the target
  LineFamily rho2;  // along the horizontal line
};
AuxCostates aux_costates(const Domain& dom, const ProblemSpec& spec,
                         const StateSolution& state, const Field& u, Point target);

// Fundamental matrix along one full grid line; transition(j_target, j_source)
// yields rho(target; source) = Phi(source) Phi(target)^{-1} for any node pair.
struct FundamentalLine {
  bool vertical = true;
  int line_index = 0;  // grid column (vertical) or row (horizontal)
  int n = 1;
  std::vector<double> Phi, PhiInv;  // per node
  void transition(int j_target, int j_source, double* out) const;
};
FundamentalLine fundamental_line_vertical(const Domain& dom, const ProblemSpec& spec,
                                          const StateSolution& state, const Field& u,
                                          int column);
FundamentalLine fundamental_line_horizontal(const Domain& dom,
                                            const ProblemSpec& spec,
                                            const StateSolution& state,
                                            const Field& u, int row);

// Eq. (3.5): delta x(target) via the adjoint family and f_u du over W(target).
Vec variation_via_riemann(const Domain& dom, const ProblemSpec& spec,
                          const StateSolution& state, const Field& u,
                          const Field& du, Point target);

}  // namespace gd
