#pragma once

#include <functional>

#include "grid.hpp"

namespace gd {

enum class SweepDirection {
  forward,   // data on s=s_lo, t=t_lo lines; integrals over W(s,t)
  backward,  // data toward the north-east; integrals over E(s,t)
};

// Bielecki-type weighted sup norm, Eq. (B.6).  rho = 0 is the plain max norm.
struct WeightedNorm {
  double rho = 0.0;
  double s_ref = 0.0, t_ref = 0.0;  // corner where the weight equals 1
  double weight(double s, double t) const {
    return std::exp(-rho * (std::fabs(s_ref - s) + std::fabs(t_ref - t)));
  }
};

// One region solve of the (B.5) system for (psi, P, Q).
struct VolterraSystem {
  const Grid* grid = nullptr;
  int i0 = 0, i1 = 0, k0 = 0, k1 = 0;  // node sub-rectangle
  int dim = 1;
  SweepDirection dir = SweepDirection::forward;

  // Backward solves may clip each column/row against an oblique arc:
  // top_t[i-i0] limits tau on column i, right_s[k-k0] limits sigma on row k.
  // Empty vectors mean the full sub-rectangle.
  std::vector<double> top_t, right_s;

  std::function<void(int, int, double*)> seed, seed_s, seed_t;
  // kernel g at a grid node given current (psi, P, Q) there
  std::function<void(int, int, const double*, const double*, const double*,
                     double*)> kernel;
  // kernel at an off-grid boundary point (used for cut-cell fragments);
  // null => constant extrapolation from the nearest in-region node
  std::function<void(double, double, double*)> kernel_boundary;

  double rho = -1.0;  // weighted-norm parameter; < 0 selects automatically
  double lipschitz = 1.0;
  double tol = 1e-10;
  int max_iter = 200;
};

struct PicardResult {
  Field psi, P, Q;
  int iterations = 0;
  bool converged = false;
  bool contraction_violated = false;
  double rho = 0.0;
  double contraction_bound = 0.0;  // L (1-e^-rho a)(1-e^-rho b) / rho^2
  std::vector<double> sup_history;       // sup-norm of iterate differences
  std::vector<double> weighted_history;  // triple rho-norm of differences
  std::vector<double> ratio_history;
};

PicardResult picard_solve(const VolterraSystem& sys);

double select_rho(double lipschitz, double a, double b);

}  // namespace gd
