#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace gd {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void unit_normal_from_slope(double slope2, double* n1, double* n2) {
  double w1, w2;
  if (std::isfinite(slope2) && std::fabs(slope2) <= 1.0) {
    w1 = -slope2;
    w2 = 1.0;
  } else {
    w1 = 1.0;
    w2 = (std::isfinite(slope2) && slope2 != 0.0) ? -1.0 / slope2 : 0.0;
  }
  double r = std::hypot(w1, w2);
  *n1 = w1 / r;
  *n2 = w2 / r;
}

}  // namespace

void BoundaryArc::normal(double s, double t, double* n1, double* n2) const {
  (void)t;
  switch (kind) {
    case ArcKind::flat_s: *n1 = 0.0; *n2 = 1.0; return;
    case ArcKind::flat_t: *n1 = 1.0; *n2 = 0.0; return;
    case ArcKind::oblique: unit_normal_from_slope(dtheta2(s), n1, n2); return;
  }
}

Point BoundaryArc::at_mu(double mu) const {
  require(!samples.empty(), ErrorCode::invalid_argument, "arc has no samples");
  if (mu <= samples.front().mu) return samples.front().p;
  if (mu >= samples.back().mu) return samples.back().p;
  size_t lo = 0, hi = samples.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    (samples[mid].mu <= mu ? lo : hi) = mid;
  }
  double f = (mu - samples[lo].mu) / (samples[hi].mu - samples[lo].mu);
  return {samples[lo].p.s + f * (samples[hi].p.s - samples[lo].p.s),
          samples[lo].p.t + f * (samples[hi].p.t - samples[lo].p.t)};
}

int Domain::arc_covering_s(double s, int side) const {
  int found = -1;
  for (int idx = 0; idx < static_cast<int>(arcs.size()); ++idx) {
    const auto& a = arcs[idx];
    if (s >= a.s_lo - tol_geom && s <= a.s_hi + tol_geom) {
      if (side > 0) { if (found < 0) found = idx; }  // earliest
      else found = idx;                              // latest
    }
  }
  require(found >= 0, ErrorCode::geometry, "no boundary arc covers s");
  return found;
}

int Domain::arc_covering_t(double t, int side) const {
  int found = -1;
  for (int idx = 0; idx < static_cast<int>(arcs.size()); ++idx) {
    const auto& a = arcs[idx];
    if (t >= a.t_lo - tol_geom && t <= a.t_hi + tol_geom) {
      if (side < 0) { if (found < 0) found = idx; }  // earliest (below)
      else found = idx;                              // latest (above)
    }
  }
  require(found >= 0, ErrorCode::geometry, "no boundary arc covers t");
  return found;
}

double Domain::theta2_env(double s, int side) const {
  const auto& a = arcs[arc_covering_s(s, side)];
  if (a.kind == ArcKind::flat_t) return side < 0 ? a.t_hi : a.t_lo;
  if (a.kind == ArcKind::flat_s) return a.t_lo;
  return a.theta2(std::clamp(s, a.s_lo, a.s_hi));
}

double Domain::theta1_env(double t, int side) const {
  const auto& a = arcs[arc_covering_t(t, side)];
  if (a.kind == ArcKind::flat_s) return side < 0 ? a.s_hi : a.s_lo;
  if (a.kind == ArcKind::flat_t) return a.s_lo;
  return a.theta1(std::clamp(t, a.t_lo, a.t_hi));
}

bool Domain::contains(double s, double t) const {
  if (s < -tol_geom || t < -tol_geom || s > a + tol_geom || t > b + tol_geom)
    return false;
  return t <= theta2_env(s, -1) + tol_geom;
}

bool Domain::strictly_inside(double s, double t) const {
  if (s <= tol_geom || t <= tol_geom) return false;
  return t < theta2_env(s, -1) - tol_geom && !on_gamma(s, t);
}

bool Domain::on_gamma(double s, double t) const {
  for (const auto& arc : arcs) {
    switch (arc.kind) {
      case ArcKind::flat_s:
        if (near(t, arc.t_lo, tol_geom) && s >= arc.s_lo - tol_geom &&
            s <= arc.s_hi + tol_geom)
          return true;
        break;
      case ArcKind::flat_t:
        if (near(s, arc.s_lo, tol_geom) && t >= arc.t_lo - tol_geom &&
            t <= arc.t_hi + tol_geom)
          return true;
        break;
      case ArcKind::oblique:
        if (s >= arc.s_lo - tol_geom && s <= arc.s_hi + tol_geom &&
            near(t, arc.theta2(std::clamp(s, arc.s_lo, arc.s_hi)), 1e-9))
          return true;
        break;
    }
  }
  return false;
}

bool Domain::on_vertex_line(double s, double t) const {
  for (const auto& p : vertices)
    if (near(s, p.s, tol_geom) || near(t, p.t, tol_geom)) return true;
  return false;
}

void Domain::corner_points(double s, double t, Point* A_t, Point* B_s) const {
  require(contains(s, t), ErrorCode::geometry, "corner_points: outside domain");
  *A_t = {theta1_env(t, -1), t};
  *B_s = {s, theta2_env(s, -1)};
}

VertexSets Domain::vertex_sets(const Point& p) const {
  require(on_gamma(p.s, p.t), ErrorCode::geometry, "vertex_sets: not on (gamma)");
  VertexSets vs;
  // Maximal vertical run containing p: consecutive flat_t arcs at s = p.s.
  // Subsequent part (above p) yields L_t and T.
  {
    double top = p.t;
    bool found = false;
    for (const auto& arc : arcs) {
      if (arc.kind != ArcKind::flat_t || !near(arc.s_lo, p.s, tol_geom)) continue;
      if (p.t >= arc.t_lo - tol_geom && p.t <= arc.t_hi + tol_geom) found = true;
      if (found && arc.t_hi > top) top = arc.t_hi;
    }
    if (found && top > p.t + tol_geom) {
      vs.L_t = std::make_pair(p, Point{p.s, top});
      for (int r = 0; r < static_cast<int>(vertices.size()); ++r)
        if (near(vertices[r].s, p.s, tol_geom) && vertices[r].t > p.t + tol_geom &&
            vertices[r].t <= top + tol_geom)
          vs.T.push_back(r);
    }
  }
  // Maximal horizontal run; preceding part (right of p) yields L_s and S.
  {
    double right = p.s;
    bool found = false;
    for (const auto& arc : arcs) {
      if (arc.kind != ArcKind::flat_s || !near(arc.t_lo, p.t, tol_geom)) continue;
      if (p.s >= arc.s_lo - tol_geom && p.s <= arc.s_hi + tol_geom) found = true;
      if (found && arc.s_hi > right) right = arc.s_hi;
    }
    if (found && right > p.s + tol_geom) {
      vs.L_s = std::make_pair(p, Point{right, p.t});
      for (int r = 0; r < static_cast<int>(vertices.size()); ++r)
        if (near(vertices[r].t, p.t, tol_geom) && vertices[r].s > p.s + tol_geom &&
            vertices[r].s <= right + tol_geom)
          vs.S.push_back(r);
    }
  }
  return vs;
}

Zones Domain::zone_decomposition() const {
  Zones z;
  int N = num_inner_vertices();
  for (int j = 0; j <= N; ++j) {
    ZoneTriangle tri;
    tri.j = j;
    tri.corner = {vertices[j + 1].s, vertices[j].t};
    tri.degenerate = arcs[j].is_flat();
    z.triangles.push_back(tri);
  }
  for (int j = 0; j < N; ++j)
    for (int k = j + 1; k <= N; ++k) {
      ZoneRect q;
      q.j = j;
      q.k = k;
      q.s_lo = vertices[k + 1].s;
      q.s_hi = vertices[k].s;
      q.t_lo = vertices[j].t;
      q.t_hi = vertices[j + 1].t;
      q.v_jk = {q.s_hi, q.t_lo};
      q.v_j1k = {q.s_hi, q.t_hi};
      q.v_jk1 = {q.s_lo, q.t_lo};
      q.v_j1k1 = {q.s_lo, q.t_hi};
      q.empty = (q.s_hi - q.s_lo <= tol_geom) || (q.t_hi - q.t_lo <= tol_geom);
      z.rects.push_back(q);
      z.max_zone = std::max(z.max_zone, k - j);
    }
  return z;
}

double Domain::integrate_E(const std::function<double(double, double)>& field,
                           double s, double t) const {
  require(contains(s, t), ErrorCode::geometry, "integrate_E: outside domain");
  double send = theta1_env(t, -1);
  if (send <= s + tol_geom) return 0.0;

  auto row = [&](double sigma, int side) -> double {
    double top = theta2_env(sigma, side);
    if (top <= t + tol_geom) return 0.0;
    // tau breakpoints: t, interior grid nodes, top
    double acc = 0.0;
    double prev_tau = t;
    double prev_f = field(sigma, t);
    int k = Grid::locate(grid.t, t);
    for (; k + 1 < grid.nt() && grid.t[k + 1] < top - tol_geom; ++k) {
      double tau = grid.t[k + 1];
      if (tau <= prev_tau + tol_geom) continue;
      double fv = field(sigma, tau);
      acc += 0.5 * (tau - prev_tau) * (prev_f + fv);
      prev_tau = tau;
      prev_f = fv;
    }
    double fv = field(sigma, top);
    acc += 0.5 * (top - prev_tau) * (prev_f + fv);
    return acc;
  };

  // sigma breakpoints: s, interior grid nodes, send; each cell integrates
  // with one-sided envelope limits so vertical-arc jumps are handled exactly.
  double acc = 0.0;
  double prev_sig = s;
  double prev_row = row(s, +1);
  int i = Grid::locate(grid.s, s);
  for (; i + 1 < grid.ns() && grid.s[i + 1] < send - tol_geom; ++i) {
    double sig = grid.s[i + 1];
    if (sig <= prev_sig + tol_geom) continue;
    acc += 0.5 * (sig - prev_sig) * (prev_row + row(sig, -1));
    prev_sig = sig;
    prev_row = row(sig, +1);
  }
  acc += 0.5 * (send - prev_sig) * (prev_row + row(send, -1));
  return acc;
}

double Domain::mu_of_s(double s, int side) const {
  const auto& arc = arcs[arc_covering_s(s, side)];
  if (arc.kind == ArcKind::flat_t) return side < 0 ? arc.mu1 : arc.mu0;
  if (arc.kind == ArcKind::flat_s)
    return arc.mu0 + (arc.s_hi - s);  // traversed right to left
  // oblique: locate by s among samples (s decreasing along mu)
  const auto& sm = arc.samples;
  if (s >= sm.front().p.s) return sm.front().mu;
  if (s <= sm.back().p.s) return sm.back().mu;
  size_t lo = 0, hi = sm.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    (sm[mid].p.s >= s ? lo : hi) = mid;
  }
  double f = (sm[lo].p.s - s) / (sm[lo].p.s - sm[hi].p.s);
  return sm[lo].mu + f * (sm[hi].mu - sm[lo].mu);
}

double Domain::mu_of_t(double t, int side) const {
  const auto& arc = arcs[arc_covering_t(t, side)];
  if (arc.kind == ArcKind::flat_s) return side < 0 ? arc.mu0 : arc.mu1;
  if (arc.kind == ArcKind::flat_t) return arc.mu0 + (t - arc.t_lo);
  const auto& sm = arc.samples;
  if (t <= sm.front().p.t) return sm.front().mu;
  if (t >= sm.back().p.t) return sm.back().mu;
  size_t lo = 0, hi = sm.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    (sm[mid].p.t <= t ? lo : hi) = mid;
  }
  double f = (t - sm[lo].p.t) / (sm[hi].p.t - sm[lo].p.t);
  return sm[lo].mu + f * (sm[hi].mu - sm[lo].mu);
}

double Domain::integrate_arc_piece(
    int arc_idx, double muA, double muB,
    const std::function<double(int, const BoundaryArc::Sample&)>& field) const {
  const auto& arc = arcs[arc_idx];
  muA = std::max(muA, arc.mu0);
  muB = std::min(muB, arc.mu1);
  if (muB <= muA + tol_geom) return 0.0;

  auto interp_sample = [&](double mu) -> BoundaryArc::Sample {
    BoundaryArc::Sample out;
    out.mu = mu;
    out.p = arc.at_mu(mu);
    arc.normal(out.p.s, out.p.t, &out.n1, &out.n2);
    return out;
  };

  double acc = 0.0;
  BoundaryArc::Sample prev = interp_sample(muA);
  double prev_f = field(arc_idx, prev);
  for (const auto& sm : arc.samples) {
    if (sm.mu <= muA + tol_geom) continue;
    if (sm.mu >= muB - tol_geom) break;
    double fv = field(arc_idx, sm);
    acc += 0.5 * (sm.mu - prev.mu) * (prev_f + fv);
    prev = sm;
    prev_f = fv;
  }
  BoundaryArc::Sample last = interp_sample(muB);
  acc += 0.5 * (last.mu - prev.mu) * (prev_f + field(arc_idx, last));
  return acc;
}

double Domain::integrate_arc(
    const std::function<double(int, const BoundaryArc::Sample&)>& field,
    double s, double t) const {
  require(contains(s, t), ErrorCode::geometry, "integrate_arc: outside domain");
  double muA = mu_of_t(t, -1);  // at A_t (earlier along traversal)
  double muB = mu_of_s(s, -1);  // at B_s
  if (muB <= muA + tol_geom) return 0.0;
  double acc = 0.0;
  for (int idx = 0; idx < static_cast<int>(arcs.size()); ++idx) {
    if (arcs[idx].mu1 <= muA || arcs[idx].mu0 >= muB) continue;
    acc += integrate_arc_piece(idx, muA, muB, field);
  }
  return acc;
}

namespace {

// Shared construction helpers ------------------------------------------------

struct ProtoArc {
  ArcKind kind;
  Point from, to;
  std::function<double(double)> theta2, dtheta2, theta1;
};

ProtoArc make_segment(Point from, Point to, double tol) {
  ProtoArc pa;
  pa.from = from;
  pa.to = to;
  double ds = to.s - from.s, dt = to.t - from.t;
  require(ds <= tol && dt >= -tol, ErrorCode::geometry,
          "NonMonotoneBoundary: segment must go up-left");
  if (near(from.t, to.t, tol)) {
    require(std::fabs(ds) > tol, ErrorCode::geometry, "degenerate segment");
    pa.kind = ArcKind::flat_s;
    double tv = from.t;
    pa.theta2 = [tv](double) { return tv; };
    pa.dtheta2 = [](double) { return 0.0; };
  } else if (near(from.s, to.s, tol)) {
    pa.kind = ArcKind::flat_t;
    double sv = from.s;
    pa.theta1 = [sv](double) { return sv; };
  } else {
    require(ds < -tol && dt > tol, ErrorCode::geometry,
            "NonMonotoneBoundary: oblique segment must strictly decrease");
    pa.kind = ArcKind::oblique;
    double slope = dt / ds;  // < 0
    Point f = from;
    pa.theta2 = [f, slope](double s) { return f.t + slope * (s - f.s); };
    pa.dtheta2 = [slope](double) { return slope; };
    pa.theta1 = [f, slope](double t) { return f.s + (t - f.t) / slope; };
  }
  return pa;
}

ProtoArc make_quarter_circle(Point from, double radius, double tol) {
  require(near(from.s, radius, tol) && near(from.t, 0.0, tol),
          ErrorCode::geometry, "quarter_circle must start at (r, 0)");
  ProtoArc pa;
  pa.kind = ArcKind::oblique;
  pa.from = {radius, 0.0};
  pa.to = {0.0, radius};
  double r = radius;
  pa.theta2 = [r](double s) { return std::sqrt(std::max(0.0, r * r - s * s)); };
  pa.dtheta2 = [r](double s) {
    double d = std::sqrt(std::max(1e-300, r * r - s * s));
    return -s / d;
  };
  pa.theta1 = [r](double t) { return std::sqrt(std::max(0.0, r * r - t * t)); };
  return pa;
}

ProtoArc make_polyline(const std::vector<Point>& pts, double tol) {
  require(pts.size() >= 2, ErrorCode::geometry, "polyline needs >= 2 points");
  for (size_t i = 1; i < pts.size(); ++i)
    require(pts[i].s < pts[i - 1].s - tol && pts[i].t > pts[i - 1].t + tol,
            ErrorCode::geometry,
            "NonMonotoneBoundary: polyline must strictly decrease in s and "
            "increase in t");
  ProtoArc pa;
  pa.kind = ArcKind::oblique;
  pa.from = pts.front();
  pa.to = pts.back();
  auto v = pts;  // captured copy, ordered by decreasing s
  pa.theta2 = [v](double s) {
    size_t i = 0;
    while (i + 2 < v.size() && s < v[i + 1].s) ++i;
    double f = (v[i].s - s) / (v[i].s - v[i + 1].s);
    return v[i].t + clamp01(f) * (v[i + 1].t - v[i].t);
  };
  pa.dtheta2 = [v](double s) {
    size_t i = 0;
    while (i + 2 < v.size() && s < v[i + 1].s) ++i;
    return (v[i + 1].t - v[i].t) / (v[i + 1].s - v[i].s);
  };
  pa.theta1 = [v](double t) {
    size_t i = 0;
    while (i + 2 < v.size() && t > v[i + 1].t) ++i;
    double f = (t - v[i].t) / (v[i + 1].t - v[i].t);
    return v[i].s + clamp01(f) * (v[i + 1].s - v[i].s);
  };
  return pa;
}

std::vector<double> build_axis(double lo, double hi,
                               const std::set<double>& breaks, double h_max,
                               double tol,
                               const std::vector<std::pair<double, double>>& fine = {},
                               const std::vector<double>& fine_h = {}) {
  std::vector<double> bp{lo};
  for (double x : breaks)
    if (x > lo + tol && x < hi - tol) bp.push_back(x);
  for (const auto& f : fine)
    for (double x : {f.first, f.second})
      if (x > lo + tol && x < hi - tol) bp.push_back(x);
  bp.push_back(hi);
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end(),
                       [tol](double a, double b) { return near(a, b, tol); }),
           bp.end());
  std::vector<double> axis;
  for (size_t i = 0; i + 1 < bp.size(); ++i) {
    double gap = bp[i + 1] - bp[i];
    double h = h_max;
    double mid = 0.5 * (bp[i] + bp[i + 1]);
    for (size_t f = 0; f < fine.size(); ++f)
      if (mid > fine[f].first - tol && mid < fine[f].second + tol)
        h = std::min(h, fine_h[f]);
    int n = std::max(1, static_cast<int>(std::ceil(gap / h - 1e-12)));
    for (int j = 0; j < n; ++j) axis.push_back(bp[i] + gap * j / n);
  }
  axis.push_back(hi);
  return axis;
}

}  // namespace

Domain build_domain(double a, double b, const std::vector<ArcSpec>& specs,
                    const std::vector<Point>& extra_vertices, double h_max,
                    double tol_geom, const std::vector<GridRefinement>& refinements) {
  require(a > 0 && b > 0 && h_max > 0, ErrorCode::geometry,
          "domain extents and h_max must be positive");
  require(!specs.empty(), ErrorCode::geometry, "no boundary arcs given");

  std::vector<ProtoArc> protos;
  Point cur{a, 0.0};
  for (const auto& sp : specs) {
    ProtoArc pa;
    switch (sp.type) {
      case ArcSpec::Type::segment: pa = make_segment(cur, sp.to, tol_geom); break;
      case ArcSpec::Type::quarter_circle:
        pa = make_quarter_circle(cur, sp.radius, tol_geom);
        break;
      case ArcSpec::Type::polyline: {
        pa = make_polyline(sp.points, tol_geom);
        require(near(pa.from.s, cur.s, tol_geom) && near(pa.from.t, cur.t, tol_geom),
                ErrorCode::geometry, "DisconnectedCurve: polyline start mismatch");
        break;
      }
    }
    require(near(pa.from.s, cur.s, tol_geom) && near(pa.from.t, cur.t, tol_geom),
            ErrorCode::geometry, "DisconnectedCurve: adjacent arc endpoints disagree");
    require(!(pa.kind == ArcKind::flat_s && near(pa.from.t, 0.0, tol_geom)),
            ErrorCode::geometry, "boundary arc may not lie on the s-axis");
    require(!(pa.kind == ArcKind::flat_t && near(pa.from.s, 0.0, tol_geom)),
            ErrorCode::geometry, "boundary arc may not lie on the t-axis");
    protos.push_back(pa);
    cur = pa.to;
  }
  require(near(cur.s, 0.0, tol_geom) && near(cur.t, b, tol_geom),
          ErrorCode::geometry, "DisconnectedCurve: boundary must end at (0,b)");

  // Split arcs at extra vertices.
  for (const auto& ev : extra_vertices) {
    bool placed = false;
    for (size_t i = 0; i < protos.size() && !placed; ++i) {
      auto& pa = protos[i];
      bool interior;
      switch (pa.kind) {
        case ArcKind::flat_s:
          interior = near(ev.t, pa.from.t, tol_geom) && ev.s < pa.from.s - tol_geom &&
                     ev.s > pa.to.s + tol_geom;
          break;
        case ArcKind::flat_t:
          interior = near(ev.s, pa.from.s, tol_geom) && ev.t > pa.from.t + tol_geom &&
                     ev.t < pa.to.t - tol_geom;
          break;
        case ArcKind::oblique:
          interior = ev.s < pa.from.s - tol_geom && ev.s > pa.to.s + tol_geom &&
                     near(ev.t, pa.theta2(ev.s), 1e-8);
          break;
      }
      if (!interior) continue;
      ProtoArc second = pa;
      Point split = ev;
      if (pa.kind == ArcKind::oblique) split.t = pa.theta2(ev.s);
      if (pa.kind == ArcKind::flat_s) split.t = pa.from.t;
      if (pa.kind == ArcKind::flat_t) split.s = pa.from.s;
      second.from = split;
      pa.to = split;
      protos.insert(protos.begin() + i + 1, second);
      placed = true;
    }
    require(placed, ErrorCode::geometry, "extra vertex does not lie on the boundary");
  }

  Domain dom;
  dom.a = a;
  dom.b = b;
  dom.tol_geom = tol_geom;
  dom.vertices.push_back({a, 0.0});
  for (const auto& pa : protos) dom.vertices.push_back(pa.to);

  // Grid with vertex coordinates inserted exactly.
  std::set<double> sb, tb;
  for (const auto& p : dom.vertices) {
    sb.insert(p.s);
    tb.insert(p.t);
  }
  std::vector<std::pair<double, double>> fs, ft;
  std::vector<double> fh;
  for (const auto& r : refinements) {
    fs.emplace_back(r.s_lo, r.s_hi);
    ft.emplace_back(r.t_lo, r.t_hi);
    fh.push_back(r.h_fine);
  }
  dom.grid.s = build_axis(0.0, a, sb, h_max, tol_geom, fs, fh);
  dom.grid.t = build_axis(0.0, b, tb, h_max, tol_geom, ft, fh);

  // Finalize arcs: extents, samples at grid-line crossings, arc length.
  double mu = 0.0;
  for (const auto& pa : protos) {
    BoundaryArc arc;
    arc.kind = pa.kind;
    arc.p_start = pa.from;
    arc.p_end = pa.to;
    arc.s_lo = std::min(pa.from.s, pa.to.s);
    arc.s_hi = std::max(pa.from.s, pa.to.s);
    arc.t_lo = std::min(pa.from.t, pa.to.t);
    arc.t_hi = std::max(pa.from.t, pa.to.t);
    arc.theta2 = pa.theta2;
    arc.dtheta2 = pa.dtheta2;
    arc.theta1 = pa.theta1;

    std::vector<Point> pts;
    pts.push_back(pa.from);
    if (arc.kind == ArcKind::flat_s) {
      for (auto it = dom.grid.s.rbegin(); it != dom.grid.s.rend(); ++it)
        if (*it < arc.s_hi - tol_geom && *it > arc.s_lo + tol_geom)
          pts.push_back({*it, arc.t_lo});
    } else if (arc.kind == ArcKind::flat_t) {
      for (double tv : dom.grid.t)
        if (tv > arc.t_lo + tol_geom && tv < arc.t_hi - tol_geom)
          pts.push_back({arc.s_lo, tv});
    } else {
      std::vector<Point> cand;
      for (double sv : dom.grid.s)
        if (sv > arc.s_lo + tol_geom && sv < arc.s_hi - tol_geom)
          cand.push_back({sv, pa.theta2(sv)});
      for (double tv : dom.grid.t)
        if (tv > arc.t_lo + tol_geom && tv < arc.t_hi - tol_geom)
          cand.push_back({pa.theta1(tv), tv});
      std::sort(cand.begin(), cand.end(),
                [](const Point& x, const Point& y) { return x.s > y.s; });
      for (const auto& p : cand)
        if (pts.empty() || std::fabs(p.s - pts.back().s) > tol_geom ||
            std::fabs(p.t - pts.back().t) > tol_geom)
          pts.push_back(p);
    }
    pts.push_back(pa.to);

    arc.mu0 = mu;
    for (const auto& p : pts) {
      BoundaryArc::Sample sm;
      sm.p = p;
      if (!arc.samples.empty()) {
        const auto& prev = arc.samples.back().p;
        mu += std::hypot(p.s - prev.s, p.t - prev.t);
      }
      sm.mu = mu;
      arc.normal(p.s, p.t, &sm.n1, &sm.n2);
      arc.samples.push_back(sm);
    }
    arc.mu1 = mu;
    arc.length = arc.mu1 - arc.mu0;

    if (arc.kind == ArcKind::oblique) {
      // theta1/theta2 mutual-inverse consistency at interior samples
      for (const auto& sm : arc.samples) {
        if (sm.p.s <= arc.s_lo + tol_geom || sm.p.s >= arc.s_hi - tol_geom) continue;
        require(near(arc.theta1(arc.theta2(sm.p.s)), sm.p.s, 1e-8),
                ErrorCode::geometry, "theta1/theta2 are not mutually inverse");
        require(arc.dtheta2(sm.p.s) <= tol_geom, ErrorCode::geometry,
                "NonMonotoneBoundary: theta2 must be non-increasing");
      }
    }
    dom.arcs.push_back(std::move(arc));
  }
  dom.total_length = mu;

  // Node classification.
  auto& g = dom.grid;
  g.mask.assign(static_cast<size_t>(g.ns()) * g.nt(), NodeClass::outside);
  for (int i = 0; i < g.ns(); ++i)
    for (int k = 0; k < g.nt(); ++k) {
      double s = g.s[i], t = g.t[k];
      if (!dom.contains(s, t)) continue;
      NodeClass nc = NodeClass::inside;
      for (const auto& arc : dom.arcs) {
        bool hit = false;
        if (arc.kind == ArcKind::flat_s)
          hit = near(t, arc.t_lo, tol_geom) && s >= arc.s_lo - tol_geom &&
                s <= arc.s_hi + tol_geom;
        else if (arc.kind == ArcKind::flat_t)
          hit = near(s, arc.s_lo, tol_geom) && t >= arc.t_lo - tol_geom &&
                t <= arc.t_hi + tol_geom;
        else
          hit = s >= arc.s_lo - tol_geom && s <= arc.s_hi + tol_geom &&
                near(t, arc.theta2(std::clamp(s, arc.s_lo, arc.s_hi)), 1e-9);
        if (hit) {
          nc = arc.is_flat() ? NodeClass::on_gamma_flat : NodeClass::on_gamma_oblique;
          if (arc.is_flat()) break;
        }
      }
      g.mask[i * g.nt() + k] = nc;
    }
  return dom;
}

Domain make_rectangle(double a, double b, double h_max) {
  ArcSpec right{ArcSpec::Type::segment, {a, b}, 0, {}};
  ArcSpec top{ArcSpec::Type::segment, {0, b}, 0, {}};
  return build_domain(a, b, {right, top}, {}, h_max);
}

Domain make_quarter_disk(double radius, double h_max,
                         const std::vector<Point>& extra_vertices) {
  ArcSpec qc{ArcSpec::Type::quarter_circle, {}, radius, {}};
  return build_domain(radius, radius, {qc}, extra_vertices, h_max);
}

Domain make_staircase(double h_max) {
  std::vector<ArcSpec> specs{
      {ArcSpec::Type::segment, {2, 1}, 0, {}},
      {ArcSpec::Type::segment, {1, 1}, 0, {}},
      {ArcSpec::Type::segment, {1, 2}, 0, {}},
      {ArcSpec::Type::segment, {0, 2}, 0, {}},
  };
  return build_domain(2, 2, specs, {}, h_max);
}

Domain make_triangle(double A, double h_max) {
  ArcSpec hyp{ArcSpec::Type::segment, {0, A}, 0, {}};
  return build_domain(A, A, {hyp}, {}, h_max);
}

std::string Domain::to_json() const {
  nlohmann::json j;
  j["a"] = a;
  j["b"] = b;
  j["total_length"] = total_length;
  for (const auto& p : vertices) j["vertices"].push_back({p.s, p.t});
  for (const auto& arc : arcs) {
    nlohmann::json ja;
    ja["kind"] = arc.kind == ArcKind::flat_s   ? "flat_s"
                 : arc.kind == ArcKind::flat_t ? "flat_t"
                                               : "oblique";
    for (const auto& sm : arc.samples)
      ja["samples"].push_back({sm.p.s, sm.p.t});
    j["arcs"].push_back(ja);
  }
  j["grid"]["s"] = grid.s;
  j["grid"]["t"] = grid.t;
  return j.dump(2);
}

}  // namespace gd
