#include "grid.hpp"

#include <algorithm>
#include <cmath>

namespace gd {

int Grid::locate(const std::vector<double>& v, double x) {
  int n = static_cast<int>(v.size());
  auto it = std::upper_bound(v.begin(), v.end(), x);
  int i = static_cast<int>(it - v.begin()) - 1;
  return std::clamp(i, 0, n - 2);
}

int Grid::exact_index(const std::vector<double>& v, double x, double tol,
                      const char* which) {
  auto it = std::lower_bound(v.begin(), v.end(), x - tol);
  if (it != v.end() && std::fabs(*it - x) <= tol)
    return static_cast<int>(it - v.begin());
  throw GdError(ErrorCode::invalid_argument,
                std::string("coordinate not a grid node on axis ") + which);
}

void Field::sample(const Grid& g, double x, double y, double* out) const {
  int i = std::clamp(Grid::locate(g.s, x), i0, std::max(i0, i1 - 1));
  int k = std::clamp(Grid::locate(g.t, y), k0, std::max(k0, k1 - 1));
  if (i1 == i0 && k1 == k0) {
    const double* p = at(i0, k0);
    for (int c = 0; c < dim; ++c) out[c] = p[c];
    return;
  }
  double fx = 0.0, fy = 0.0;
  if (i1 > i0) {
    fx = (x - g.s[i]) / (g.s[i + 1] - g.s[i]);
    fx = std::clamp(fx, 0.0, 1.0);
  }
  if (k1 > k0) {
    fy = (y - g.t[k]) / (g.t[k + 1] - g.t[k]);
    fy = std::clamp(fy, 0.0, 1.0);
  }
  int ip = (i1 > i0) ? i + 1 : i;
  int kp = (k1 > k0) ? k + 1 : k;
  const double* p00 = at(i, k);
  const double* p10 = at(ip, k);
  const double* p01 = at(i, kp);
  const double* p11 = at(ip, kp);
  for (int c = 0; c < dim; ++c) {
    out[c] = (1 - fx) * (1 - fy) * p00[c] + fx * (1 - fy) * p10[c] +
             (1 - fx) * fy * p01[c] + fx * fy * p11[c];
  }
}

double deriv_axis(const std::vector<double>& axis, int idx,
                  const std::function<double(int)>& f) {
  int n = static_cast<int>(axis.size());
  if (n < 2) return 0.0;
  if (idx == 0) {
    if (n == 2) return (f(1) - f(0)) / (axis[1] - axis[0]);
    double h1 = axis[1] - axis[0], h2 = axis[2] - axis[1];
    // one-sided 3-point
    return (-(2 * h1 + h2) / (h1 * (h1 + h2))) * f(0) +
           ((h1 + h2) / (h1 * h2)) * f(1) - (h1 / (h2 * (h1 + h2))) * f(2);
  }
  if (idx == n - 1) {
    if (n == 2) return (f(1) - f(0)) / (axis[1] - axis[0]);
    double h1 = axis[n - 2] - axis[n - 3], h2 = axis[n - 1] - axis[n - 2];
    return (h2 / (h1 * (h1 + h2))) * f(n - 3) - ((h1 + h2) / (h1 * h2)) * f(n - 2) +
           ((h1 + 2 * h2) / (h2 * (h1 + h2))) * f(n - 1);
  }
  double hl = axis[idx] - axis[idx - 1], hr = axis[idx + 1] - axis[idx];
  return (-hr / (hl * (hl + hr))) * f(idx - 1) + ((hr - hl) / (hl * hr)) * f(idx) +
         (hl / (hr * (hl + hr))) * f(idx + 1);
}

Field diff_s(const Grid& g, const Field& f) {
  Field d(f.i0, f.i1, f.k0, f.k1, f.dim);
  std::vector<double> axis(g.s.begin() + f.i0, g.s.begin() + f.i1 + 1);
  for (int k = f.k0; k <= f.k1; ++k)
    for (int c = 0; c < f.dim; ++c)
      for (int i = f.i0; i <= f.i1; ++i)
        d.at(i, k)[c] = deriv_axis(axis, i - f.i0,
                                   [&](int j) { return f.at(f.i0 + j, k)[c]; });
  return d;
}

Field diff_t(const Grid& g, const Field& f) {
  Field d(f.i0, f.i1, f.k0, f.k1, f.dim);
  std::vector<double> axis(g.t.begin() + f.k0, g.t.begin() + f.k1 + 1);
  for (int i = f.i0; i <= f.i1; ++i)
    for (int c = 0; c < f.dim; ++c)
      for (int k = f.k0; k <= f.k1; ++k)
        d.at(i, k)[c] = deriv_axis(axis, k - f.k0,
                                   [&](int j) { return f.at(i, f.k0 + j)[c]; });
  return d;
}

void cum_trapz(const std::vector<double>& axis, int j0, int j1,
               const std::function<const double*(int)>& f, int dim,
               std::vector<double>& out) {
  out.assign(static_cast<size_t>(j1 - j0 + 1) * dim, 0.0);
  for (int j = j0 + 1; j <= j1; ++j) {
    double h = axis[j] - axis[j - 1];
    const double* fa = f(j - 1);
    const double* fb = f(j);
    for (int c = 0; c < dim; ++c)
      out[(j - j0) * dim + c] =
          out[(j - 1 - j0) * dim + c] + 0.5 * h * (fa[c] + fb[c]);
  }
}

}  // namespace gd
