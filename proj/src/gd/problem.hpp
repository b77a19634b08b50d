#pragma once

#include <functional>
#include <map>
#include <random>
#include <string>

#include "geometry.hpp"

namespace gd {

// Argument pack for f, Phi and their partials; p/q are the x_s/x_t slots.
struct EvalArgs {
  double s = 0, t = 0;
  const double* x = nullptr;
  const double* p = nullptr;
  const double* q = nullptr;
  const double* u = nullptr;
};

using VecFn = std::function<void(const EvalArgs&, double*)>;
using ScalarFn = std::function<double(const EvalArgs&)>;

// Controlled dynamics f(s,t,x,p,q,u) with first partials.  Omitted partial
// slots are filled with central finite differences of f at construction.
struct Dynamics {
  int n = 1, m = 1;
  VecFn f;
  VecFn f_x, f_p, f_q;  // n x n row-major: out[i*n+j] = df^i/d(slot^j)
  VecFn f_u;            // n x m
  double lipschitz_hint = 1.0;
};

// Boundary cost arguments: eta is the slot of the tangential derivative x_mu.
struct BoundaryEvalArgs {
  double s = 0, t = 0;
  const double* x = nullptr;
  const double* eta = nullptr;
};

struct CostIntegrands {
  ScalarFn Phi;                 // area integrand Phi(s,t,x,p,q,u)
  VecFn Phi_x, Phi_p, Phi_q;    // covector[n]
  VecFn Phi_u;                  // covector[m]
  std::function<double(const BoundaryEvalArgs&)> Phi1;  // arc integrand
  std::function<void(const BoundaryEvalArgs&, double*)> Phi1_x, Phi1_eta;
  // vertex cost: Phi0(vertex index, point, x)
  std::function<double(int, const Point&, const double*)> Phi0;
  std::function<void(int, const Point&, const double*, double*)> Phi0_x;
};

struct ControlBox {
  Vec lower, upper;  // size m
};

struct BoundaryData {
  std::function<void(double, double*)> x1, x2;    // x(s,0), x(0,t)
  std::function<void(double, double*)> x1p, x2p;  // derivatives (optional)
  Vec x0;
};

struct ProblemSpec {
  Dynamics dyn;
  CostIntegrands cost;
  ControlBox box;
  BoundaryData bc;
  std::string name;

  int n() const { return dyn.n; }
  int m() const { return dyn.m; }
};

// Fills omitted partials with finite-difference fallbacks and checks the
// supplied ones against central differences on random probes.
void finalize_spec(ProblemSpec& spec, unsigned seed = 7, int probes = 32,
                   double fd_tol = 1e-4);

// Eq. (3.9): H = Phi + psi . f
double hamiltonian(const ProblemSpec& spec, const EvalArgs& a, const double* psi);
// Componentwise partials of H; any output pointer may be null.
void hamiltonian_partials(const ProblemSpec& spec, const EvalArgs& a,
                          const double* psi, double* H_x, double* H_p,
                          double* H_q, double* H_u);
// Eq. (4.14): h_alpha^i = f^k rho_{alpha,k}^i for matrix-valued rho (n x n).
void aux_hamiltonians(const ProblemSpec& spec, const EvalArgs& a,
                      const double* rho1, const double* rho2, double* h1,
                      double* h2);

// Grid evaluation of a composite map (s,t) -> phi(s,t,x(s,t),...) followed by
// total differentiation per Eq. (1.6); implemented as centered differences of
// the composed nodal field.
enum class TotalDeriv { Ds, Dt };
Field total_derivative(const Grid& g, TotalDeriv which, const Field& composite);

// Built-in problem registry (configuration selects by id).
struct BuiltinProblem {
  ProblemSpec spec;
  Domain domain;
};
BuiltinProblem make_builtin_problem(const std::string& id, double h_max,
                                    const std::map<std::string, double>& params = {});
std::vector<std::string> builtin_problem_ids();

}  // namespace gd
