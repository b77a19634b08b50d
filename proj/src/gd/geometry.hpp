#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"

namespace gd {

struct Point {
  double s = 0.0, t = 0.0;
};

inline bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

enum class ArcKind { flat_s, flat_t, oblique };

// One smooth boundary piece, traversed counterclockwise (s non-increasing,
// t non-decreasing). Oblique arcs carry both graph representations
// t = theta2(s) and s = theta1(t); flat arcs carry the one that exists.
struct BoundaryArc {
  ArcKind kind;
  Point p_start, p_end;  // traversal order
  double s_lo, s_hi;     // s-extent (s_lo = p_end.s, s_hi = p_start.s)
  double t_lo, t_hi;     // t-extent

  std::function<double(double)> theta2;   // t(s), absent for flat_t
  std::function<double(double)> dtheta2;  // theta2' <= 0
  std::function<double(double)> theta1;   // s(t), absent for flat_s

  double mu0 = 0.0, mu1 = 0.0;  // arc-length interval from P0
  double length = 0.0;

  // Sample points where the arc crosses grid lines (plus endpoints),
  // ordered by increasing mu.  Filled by build_domain.
  struct Sample {
    double mu;
    Point p;
    double n1, n2;  // outward normal
  };
  std::vector<Sample> samples;

  bool is_flat() const { return kind != ArcKind::oblique; }
  void normal(double s, double t, double* n1, double* n2) const;
  Point at_mu(double mu) const;  // linear interp over samples
};

struct ZoneTriangle {
  int j;            // arc index: D_j is bounded by arc j
  Point corner;     // V_{j,j+1}
  bool degenerate;  // arc j is flat
};

struct ZoneRect {
  int j, k;  // Q_{j,k}, zone p = k - j
  Point v_jk, v_j1k, v_jk1, v_j1k1;
  double s_lo, s_hi, t_lo, t_hi;
  bool empty;  // zero area
};

struct Zones {
  std::vector<ZoneTriangle> triangles;
  std::vector<ZoneRect> rects;
  int max_zone = 0;
};

// Def. 4.2 sets at a boundary point: vertex collections T/S and the maximal
// flat segments L_t/L_s (stored as endpoint pairs; empty when absent).
struct VertexSets {
  std::vector<int> T;  // vertex indices, subsequent on the vertical segment
  std::vector<int> S;  // vertex indices, preceding on the horizontal segment
  std::optional<std::pair<Point, Point>> L_t;  // (P excluded end..far end)
  std::optional<std::pair<Point, Point>> L_s;
};

class Domain {
 public:
  double a = 0.0, b = 0.0;
  std::vector<BoundaryArc> arcs;    // counterclockwise from (a,0) to (0,b)
  std::vector<Point> vertices;      // P_0 .. P_{N+1}
  double total_length = 0.0;
  Grid grid;
  double tol_geom = 1e-10;

  int num_inner_vertices() const { return static_cast<int>(vertices.size()) - 2; }

  // Upper boundary envelope t = T(s); side < 0 takes the limit from s-,
  // side > 0 from s+ (they differ at vertical-arc abscissae).
  double theta2_env(double s, int side = -1) const;
  // Right envelope s = S(t); side < 0 takes the limit from t-.
  double theta1_env(double t, int side = -1) const;

  bool contains(double s, double t) const;        // closed G
  bool strictly_inside(double s, double t) const;
  bool on_gamma(double s, double t) const;
  // True when (s,t) lies on some vertex line s = s(P_r) or t = t(P_r).
  bool on_vertex_line(double s, double t) const;

  // Eq. (A.3): A_t = rightmost boundary point at height t, B_s = top at s.
  void corner_points(double s, double t, Point* A_t, Point* B_s) const;

  int arc_covering_s(double s, int side) const;  // index into arcs
  int arc_covering_t(double t, int side) const;

  VertexSets vertex_sets(const Point& p) const;
  Zones zone_decomposition() const;

  // Quadrature of `field(sigma,tau)` over E(s,t) = {(sigma,tau) in G :
  // sigma >= s, tau >= t}, row-clipped against the boundary envelope.
  double integrate_E(const std::function<double(double, double)>& field,
                     double s, double t) const;

  // Arc-length quadrature of a boundary field over gamma(s,t), the sub-arc
  // between A_t and B_s.  The field receives (arc index, sample).
  double integrate_arc(
      const std::function<double(int, const BoundaryArc::Sample&)>& field,
      double s, double t) const;
  // Same but over one arc only, clipped to mu in [muA, muB].
  double integrate_arc_piece(
      int arc, double muA, double muB,
      const std::function<double(int, const BoundaryArc::Sample&)>& field) const;

  // mu parameter of the boundary point with given s (on the covering arc).
  double mu_of_s(double s, int side = -1) const;
  double mu_of_t(double t, int side = -1) const;

  std::string to_json() const;
};

// Parametric arc descriptions consumed by build_domain.
struct ArcSpec {
  enum class Type { segment, quarter_circle, polyline } type;
  Point to;                   // segment: endpoint
  double radius = 0.0;        // quarter_circle
  std::vector<Point> points;  // polyline (traversal order)
};

// Local grid refinement: spacing h_fine inside [s_lo,s_hi] x [t_lo,t_hi].
struct GridRefinement {
  double s_lo, s_hi, t_lo, t_hi, h_fine;
};

Domain build_domain(double a, double b, const std::vector<ArcSpec>& specs,
                    const std::vector<Point>& extra_vertices, double h_max,
                    double tol_geom = 1e-10,
                    const std::vector<GridRefinement>& refinements = {});

// Convenience builders used across the test suites.
Domain make_rectangle(double a, double b, double h_max);
Domain make_quarter_disk(double radius, double h_max,
                         const std::vector<Point>& extra_vertices = {});
Domain make_staircase(double h_max);  // (2,0)-(2,1)-(1,1)-(1,2)-(0,2)
Domain make_triangle(double A, double h_max);  // hypotenuse s + t = A

// Eq. (2.4): (phi_mu, phi_n, phi_nstar) from (phi_s, phi_t) and the normal.
inline void directional_derivatives(double phi_s, double phi_t, double n1,
                                    double n2, double* d_mu, double* d_n,
                                    double* d_nstar) {
  *d_mu = -n2 * phi_s + n1 * phi_t;
  *d_n = n1 * phi_s + n2 * phi_t;
  *d_nstar = n2 * phi_s + n1 * phi_t;
}

}  // namespace gd
