#pragma once

#include <array>

#include "optimize.hpp"

namespace gd {

struct BasinModel {
  double omega = 0.0;  // angular velocity of the basin
  double g = 9.81;
  double c = 1.0;
  std::function<double(double)> h, hp, hpp;  // depth profile and derivatives
  double r1 = 0, r2 = 1, t1 = 0, t2 = 1;
};

// Characteristic coordinates (6.7) with (A, s0, t0') from (6.11).  beta is
// inverted directly from (6.7) rather than through the (6.13) prefactor.
class CharacteristicMap {
 public:
  double A = 0, s0 = 0, t0p = 0, sqrt_gc = 1;
  double beta_r1 = 0, beta_r2 = 0;
  double residual_eq4 = 0;  // consistency residual of the fourth (6.11) equation

  double beta(double r) const;
  double beta_inv(double b) const;
  Point to_char(double r, double t) const;
  void from_char(double s, double tp, double* r, double* t) const;
  double r_of_char(double s, double tp) const;

  BasinModel model;  // owned copy
};

CharacteristicMap build_characteristic_map(const BasinModel& model,
                                           double tol_geom = 1e-9);

// Eq. (6.12) as a Goursat dynamics in the characteristic diamond coordinates.
Dynamics goursat_dynamics(const CharacteristicMap& map);

// One reflected quadrant sub-problem (Remark 4.1): a right triangle with the
// oblique hypotenuse s + t = A, dynamics f~(s,t,x,p,q,u) = es et f(es s, et t,
// x, es p, et q, u), and a tracking cost against the observations.
struct QuadrantProblem {
  Domain dom;
  ProblemSpec spec;
  int es = 1, et = 1;
  Field obs;     // nodal observations (bound into the cost)
  Field u_true;  // nodal truth in quadrant coordinates (twin experiments)
};

struct TsunamiSetup {
  CharacteristicMap map;
  double lambda = 1e-4;
  std::array<QuadrantProblem, 4> quads;
};

// Builds the four quadrant domains and dynamics; costs are attached once
// observations exist (set_observations / synth_observations).
TsunamiSetup quadrant_decompose(const CharacteristicMap& map, double h_max,
                                double lambda);

// Twin-experiment generator: forward-solves (6.12) per quadrant with u_true
// given in physical coordinates, adds seeded Gaussian noise, and binds the
// tracking cost  |v - v_obs|^2 + lambda |u|^2  into each quadrant spec.
void synth_observations(TsunamiSetup& setup,
                        const std::function<double(double, double)>& u_true_rt,
                        double noise, unsigned seed);

// Binds externally supplied observations (nodal sampler in characteristic
// coordinates) into the quadrant costs.
void set_observations(TsunamiSetup& setup,
                      const std::function<double(double, double)>& v_obs_char);

struct InverseResult {
  std::array<Field, 4> u_est;
  std::vector<TraceRow> trace;
  double J = 0, misfit = 0, regularization = 0;
  double rel_l2_error = -1;  // vs u_true when available
};

InverseResult inverse_solve(TsunamiSetup& setup, const OptimizeOptions& opt);

// Relative L2 distance between two per-quadrant control sets over the diamond.
double rel_l2_diamond(const TsunamiSetup& setup, const std::array<Field, 4>& u,
                      const std::array<Field, 4>& ref);

}  // namespace gd
