#pragma once

#include <optional>
#include <string>

#include "problem.hpp"
#include "tsunami.hpp"

namespace gd {

struct TsunamiConfig {
  BasinModel model;
  std::string depth_id = "constant";
  std::vector<double> lambdas{1e-4};
  double noise = 0.0;
  std::string u_true_id = "gauss";
  std::map<std::string, double> u_true_params;
  std::string observations_csv;  // optional ingestion
  std::string obs_coords = "characteristic";
};

struct RunConfig {
  int version = 1;
  std::string command;
  unsigned long long seed = 0;
  double hmax = 1.0 / 32;
  int workers = 1;
  std::string out = "out";
  double solver_tol = 1e-10;
  double tol_geom = 1e-10;

  // non-tsunami commands
  std::string problem_id;
  std::map<std::string, double> problem_params;
  bool has_domain_override = false;
  double dom_a = 1, dom_b = 1;
  std::string domain_type;  // rectangle | quarter_disk | staircase | triangle | custom
  double dom_radius = 1, dom_A = 1;
  std::vector<ArcSpec> dom_arcs;
  std::vector<Point> extra_vertices;

  // command options
  double opt_tol = 1e-6;
  int opt_max_iter = 300;
  double armijo_c = 1e-4;
  int gc_directions = 10;
  double gc_eps = 1e-4;
  double gc_tol = 1e-3;
  int ac_checkpoints = 20;
  double ac_tol = 1e-2;
  double forward_control = 0.0;

  std::optional<TsunamiConfig> tsunami;

  std::string echo_json;  // normalized config echo for the manifest
};

// Parses and validates the versioned schema; unknown keys are errors.
RunConfig parse_config(const std::string& json_text);

// Materialize the (domain, problem) pair a config describes.
BuiltinProblem build_problem(const RunConfig& cfg);

}  // namespace gd
