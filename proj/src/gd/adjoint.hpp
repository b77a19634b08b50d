#pragma once

#include "riemann.hpp"

namespace gd {

// V_r(Phi_{1,eta}) handling in Eq. (3.12): the paper never defines V_r, so
// the term is implemented as the jump of Phi1_eta between the two arcs
// meeting at the vertex; `zero` drops it (the gradient oracle adjudicates).
enum class VrMode { tangential_jump, zero };

// Forcing terms of Eq. (3.12) evaluated along a state/control pair.
struct FTerms {
  Field F;                            // covector field on the full grid
  std::vector<std::vector<Vec>> F1;   // per arc, per sample (aligned with samples)
  std::vector<Vec> F0;                // per vertex 0..N+1 (endpoints zero)
  VrMode vr_mode = VrMode::tangential_jump;

  Vec F1_at_mu(const Domain& dom, int arc, double mu) const;
};

FTerms compute_F_terms(const Domain& dom, const ProblemSpec& spec,
                       const StateSolution& state, const Field& u,
                       VrMode mode = VrMode::tangential_jump);

// Multi-sheet co-state: one patch per zone region (plus 1D chain patches for
// the degenerate triangles).  Nodes on shared vertex lines carry one value
// per adjacent patch, which is exactly the two-sided sheet structure.
struct RegionPatch {
  enum class Kind { triangle, rect, chain };
  Kind kind;
  int j = -1, k = -1;  // D_j / Q_{j,k}; chains: j = arc index
  int i0 = 0, i1 = 0, k0 = 0, k1 = 0;
  Field psi, psi_s, psi_t;     // chains: psi only
  std::vector<double> top_t;   // triangle arc clip per column (else empty)
  bool chain_vertical = false;

  bool in_region(const Grid& g, int i, int k) const;
};

struct CostateSolution {
  int n = 1;
  std::vector<RegionPatch> patches;

  const RegionPatch* find_region(const Domain& dom, double s, double t) const;
  // Evaluate at a point of G_R (off all vertex lines).
  void eval(const Domain& dom, double s, double t, double* psi,
            double* psi_s = nullptr, double* psi_t = nullptr) const;
  std::string to_csv(const Domain& dom) const;
};

// Theorem 4.2 / Eq. (4.16): one-sided limits of psi at a vertex.
struct VertexLimits {
  Vec wII, wIII, wIV;
};
VertexLimits vertex_limits(const Domain& dom, const ProblemSpec& spec,
                           const StateSolution& state, const Field& u,
                           const FTerms& ft, int vertex);

// Theorem 4.3 / Eq. (4.17): jump of psi across (T_r) (vertical = true) or
// (S_r) at the given coordinate along the line.
Vec jump_conditions(const Domain& dom, const ProblemSpec& spec,
                    const StateSolution& state, const Field& u, const FTerms& ft,
                    int vertex, bool vertical, double coord);

// Theorem 4.1: psi along one flat arc, marched from `terminal` at the far
// (along-traversal) end back toward the arc start.  Returns nodal covectors
// ordered by the grid axis (ascending t for vertical arcs, ascending s).
std::vector<Vec> flat_part_ode(const Domain& dom, const ProblemSpec& spec,
                               const StateSolution& state, const Field& u,
                               const FTerms& ft, int arc, const Vec& terminal);

// Eq. (3.8) by direct quadrature with a per-target Riemann family (oracle path).
Vec costate_by_quadrature(const Domain& dom, const ProblemSpec& spec,
                          const StateSolution& state, const Field& u,
                          const FTerms& ft, Point target);

// Theorem 4.4 zone sweep (production path).
CostateSolution sweep_costate(const Domain& dom, const ProblemSpec& spec,
                              const StateSolution& state, const Field& u,
                              const FTerms& ft, double tol = 1e-11,
                              int max_iter = 200);

struct PdeResidual {
  double sup = 0.0, l2 = 0.0;
  std::vector<double> patch_sup;
};
PdeResidual verify_hamiltonian_pde(const Domain& dom, const ProblemSpec& spec,
                                   const StateSolution& state, const Field& u,
                                   const FTerms& ft, const CostateSolution& cs);

}  // namespace gd
