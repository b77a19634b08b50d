#pragma once

#include <functional>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace gd {

enum class NodeClass : unsigned char {
  outside = 0,
  inside = 1,         // closed G minus (gamma); includes the two axis edges
  on_gamma_oblique = 2,
  on_gamma_flat = 3,
};

// Tensor grid over [0,a] x [0,b]. Vertex coordinates of the domain boundary
// are inserted exactly so zone edges are grid-aligned.
struct Grid {
  std::vector<double> s;
  std::vector<double> t;
  std::vector<NodeClass> mask;  // i*nt()+k, filled by geometry

  int ns() const { return static_cast<int>(s.size()); }
  int nt() const { return static_cast<int>(t.size()); }
  NodeClass node_class(int i, int k) const { return mask[i * nt() + k]; }

  // Largest index with s[i] <= x (clamped to [0, ns-2] for cell lookups).
  int cell_s(double x) const { return locate(s, x); }
  int cell_t(double y) const { return locate(t, y); }

  // Exact index of a node coordinate; throws if absent.
  int index_s(double x, double tol) const { return exact_index(s, x, tol, "s"); }
  int index_t(double y, double tol) const { return exact_index(t, y, tol, "t"); }

  static int locate(const std::vector<double>& v, double x);
  static int exact_index(const std::vector<double>& v, double x, double tol,
                         const char* which);
};

// Nodal field over a grid index sub-rectangle [i0,i1] x [k0,k1] with `dim`
// components per node.
struct Field {
  int i0 = 0, i1 = -1, k0 = 0, k1 = -1, dim = 0;
  std::vector<double> v;

  Field() = default;
  Field(int i0_, int i1_, int k0_, int k1_, int dim_)
      : i0(i0_), i1(i1_), k0(k0_), k1(k1_), dim(dim_),
        v(static_cast<size_t>(ni()) * nk() * dim_, 0.0) {}
  static Field full(const Grid& g, int dim) {
    return Field(0, g.ns() - 1, 0, g.nt() - 1, dim);
  }

  int ni() const { return i1 - i0 + 1; }
  int nk() const { return k1 - k0 + 1; }
  bool contains(int i, int k) const {
    return i >= i0 && i <= i1 && k >= k0 && k <= k1;
  }
  double* at(int i, int k) {
    return v.data() + (static_cast<size_t>(i - i0) * nk() + (k - k0)) * dim;
  }
  const double* at(int i, int k) const {
    return v.data() + (static_cast<size_t>(i - i0) * nk() + (k - k0)) * dim;
  }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  double max_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
  }

  // Bilinear interpolation; clamps to the sub-rectangle's extent.
  void sample(const Grid& g, double x, double y, double* out) const;
  double sample1(const Grid& g, double x, double y) const {
    double o;
    sample(g, x, y, &o);
    return o;
  }
};

// Centered 3-point derivative on a nonuniform axis (one-sided at the ends).
double deriv_axis(const std::vector<double>& axis, int idx,
                  const std::function<double(int)>& f);

// d/ds and d/dt of a nodal field, component-wise, over the same sub-rectangle.
Field diff_s(const Grid& g, const Field& f);
Field diff_t(const Grid& g, const Field& f);

// Cumulative trapezoid along an axis: out[j] = integral from axis[j0] to axis[j].
void cum_trapz(const std::vector<double>& axis, int j0, int j1,
               const std::function<const double*(int)>& f, int dim,
               std::vector<double>& out);

}  // namespace gd
