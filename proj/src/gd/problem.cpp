#include "problem.hpp"

#include <cmath>
#include <map>

namespace gd {

namespace {

// Central finite difference of f with respect to one slot entry.
template <typename Eval>
void fd_partial(const Eval& eval, const EvalArgs& a, int n_out, int slot_dim,
                const double* slot, double** slot_ptr, double* out,
                double step = 1e-6) {
  std::vector<double> pert(slot, slot + slot_dim);
  std::vector<double> fp(n_out), fm(n_out);
  for (int j = 0; j < slot_dim; ++j) {
    double save = pert[j];
    pert[j] = save + step;
    *slot_ptr = pert.data();
    eval(fp.data());
    pert[j] = save - step;
    eval(fm.data());
    pert[j] = save;
    *slot_ptr = pert.data();
    for (int i = 0; i < n_out; ++i)
      out[i * slot_dim + j] = (fp[i] - fm[i]) / (2 * step);
  }
}

enum class Slot { x, p, q, u };

VecFn fd_fallback(const VecFn& f, int n, Slot slot, int slot_dim) {
  return [f, n, slot, slot_dim](const EvalArgs& a, double* out) {
    EvalArgs local = a;
    const double* base = slot == Slot::x   ? a.x
                         : slot == Slot::p ? a.p
                         : slot == Slot::q ? a.q
                                           : a.u;
    double** ptr = slot == Slot::x   ? const_cast<double**>(&local.x)
                   : slot == Slot::p ? const_cast<double**>(&local.p)
                   : slot == Slot::q ? const_cast<double**>(&local.q)
                                     : const_cast<double**>(&local.u);
    auto eval = [&](double* o) { f(local, o); };
    fd_partial(eval, local, n, slot_dim, base, ptr, out);
  };
}

VecFn scalar_fd_fallback(const ScalarFn& f, Slot slot, int slot_dim) {
  return [f, slot, slot_dim](const EvalArgs& a, double* out) {
    EvalArgs local = a;
    const double* base = slot == Slot::x   ? a.x
                         : slot == Slot::p ? a.p
                         : slot == Slot::q ? a.q
                                           : a.u;
    double** ptr = slot == Slot::x   ? const_cast<double**>(&local.x)
                   : slot == Slot::p ? const_cast<double**>(&local.p)
                   : slot == Slot::q ? const_cast<double**>(&local.q)
                                     : const_cast<double**>(&local.u);
    auto eval = [&](double* o) { *o = f(local); };
    fd_partial(eval, local, 1, slot_dim, base, ptr, out);
  };
}

void check_consistency(const ProblemSpec& spec, unsigned seed, int probes,
                       double fd_tol) {
  int n = spec.n(), m = spec.m();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(n), p(n), q(n), u(m);
  std::vector<double> got(n * std::max(n, m)), want(n * std::max(n, m));
  for (int it = 0; it < probes; ++it) {
    for (auto* v : {&x, &p, &q}) for (double& e : *v) e = dist(rng);
    for (double& e : u) e = dist(rng);
    EvalArgs a{0.25 + 0.5 * dist(rng), 0.25 + 0.5 * dist(rng), x.data(),
               p.data(), q.data(), u.data()};
    struct Row { const VecFn& fn; Slot slot; int dim; const char* name; };
    const Row rows[] = {{spec.dyn.f_x, Slot::x, n, "f_x"},
                        {spec.dyn.f_p, Slot::p, n, "f_p"},
                        {spec.dyn.f_q, Slot::q, n, "f_q"},
                        {spec.dyn.f_u, Slot::u, m, "f_u"}};
    for (const auto& r : rows) {
      r.fn(a, got.data());
      fd_fallback(spec.dyn.f, n, r.slot, r.dim)(a, want.data());
      for (int i = 0; i < n * r.dim; ++i) {
        double scale = std::max(1.0, std::fabs(want[i]));
        require(std::fabs(got[i] - want[i]) <= fd_tol * scale,
                ErrorCode::invalid_argument,
                std::string("declared partial ") + r.name +
                    " disagrees with finite difference of f");
      }
    }
  }
}

}  // namespace

void finalize_spec(ProblemSpec& spec, unsigned seed, int probes, double fd_tol) {
  int n = spec.n(), m = spec.m();
  require(n >= 1 && m >= 1, ErrorCode::dimension_mismatch, "n, m must be >= 1");
  require(static_cast<int>(spec.box.lower.size()) == m &&
              static_cast<int>(spec.box.upper.size()) == m,
          ErrorCode::dimension_mismatch, "control box size != m");
  for (int j = 0; j < m; ++j)
    require(spec.box.lower[j] <= spec.box.upper[j], ErrorCode::invalid_argument,
            "control box lower > upper");
  require(static_cast<bool>(spec.dyn.f), ErrorCode::missing_data, "dynamics f missing");

  bool had_all = spec.dyn.f_x && spec.dyn.f_p && spec.dyn.f_q && spec.dyn.f_u;
  if (!spec.dyn.f_x) spec.dyn.f_x = fd_fallback(spec.dyn.f, n, Slot::x, n);
  if (!spec.dyn.f_p) spec.dyn.f_p = fd_fallback(spec.dyn.f, n, Slot::p, n);
  if (!spec.dyn.f_q) spec.dyn.f_q = fd_fallback(spec.dyn.f, n, Slot::q, n);
  if (!spec.dyn.f_u) spec.dyn.f_u = fd_fallback(spec.dyn.f, n, Slot::u, m);

  auto& c = spec.cost;
  if (!c.Phi) c.Phi = [](const EvalArgs&) { return 0.0; };
  if (!c.Phi_x) c.Phi_x = scalar_fd_fallback(c.Phi, Slot::x, n);
  if (!c.Phi_p) c.Phi_p = scalar_fd_fallback(c.Phi, Slot::p, n);
  if (!c.Phi_q) c.Phi_q = scalar_fd_fallback(c.Phi, Slot::q, n);
  if (!c.Phi_u) c.Phi_u = scalar_fd_fallback(c.Phi, Slot::u, m);
  if (!c.Phi1) c.Phi1 = [](const BoundaryEvalArgs&) { return 0.0; };
  if (!c.Phi1_x)
    c.Phi1_x = [Phi1 = c.Phi1, n](const BoundaryEvalArgs& a, double* out) {
      BoundaryEvalArgs local = a;
      std::vector<double> x(a.x, a.x + n);
      local.x = x.data();
      for (int j = 0; j < n; ++j) {
        double save = x[j], step = 1e-6;
        x[j] = save + step;
        double fp = Phi1(local);
        x[j] = save - step;
        double fm = Phi1(local);
        x[j] = save;
        out[j] = (fp - fm) / (2 * step);
      }
    };
  if (!c.Phi1_eta)
    c.Phi1_eta = [Phi1 = c.Phi1, n](const BoundaryEvalArgs& a, double* out) {
      BoundaryEvalArgs local = a;
      std::vector<double> e(a.eta, a.eta + n);
      local.eta = e.data();
      for (int j = 0; j < n; ++j) {
        double save = e[j], step = 1e-6;
        e[j] = save + step;
        double fp = Phi1(local);
        e[j] = save - step;
        double fm = Phi1(local);
        e[j] = save;
        out[j] = (fp - fm) / (2 * step);
      }
    };
  if (!c.Phi0) c.Phi0 = [](int, const Point&, const double*) { return 0.0; };
  if (!c.Phi0_x)
    c.Phi0_x = [Phi0 = c.Phi0, n](int r, const Point& pt, const double* xv,
                                  double* out) {
      std::vector<double> x(xv, xv + n);
      for (int j = 0; j < n; ++j) {
        double save = x[j], step = 1e-6;
        x[j] = save + step;
        double fp = Phi0(r, pt, x.data());
        x[j] = save - step;
        double fm = Phi0(r, pt, x.data());
        x[j] = save;
        out[j] = (fp - fm) / (2 * step);
      }
    };

  if (!spec.bc.x1) spec.bc.x1 = [n](double, double* o) { std::fill(o, o + n, 0.0); };
  if (!spec.bc.x2) spec.bc.x2 = [n](double, double* o) { std::fill(o, o + n, 0.0); };
  auto fd_of = [n](const std::function<void(double, double*)>& f) {
    return [f, n](double s, double* o) {
      std::vector<double> a(n), b(n);
      double step = 1e-6;
      f(s + step, a.data());
      f(s - step, b.data());
      for (int i = 0; i < n; ++i) o[i] = (a[i] - b[i]) / (2 * step);
    };
  };
  if (!spec.bc.x1p) spec.bc.x1p = fd_of(spec.bc.x1);
  if (!spec.bc.x2p) spec.bc.x2p = fd_of(spec.bc.x2);
  if (spec.bc.x0.empty()) {
    spec.bc.x0.resize(n);
    spec.bc.x1(0.0, spec.bc.x0.data());
  }
  // consistency x1(0) = x2(0) = x0
  {
    std::vector<double> a(n), b(n);
    spec.bc.x1(0.0, a.data());
    spec.bc.x2(0.0, b.data());
    for (int i = 0; i < n; ++i)
      require(near(a[i], b[i], 1e-9) && near(a[i], spec.bc.x0[i], 1e-9),
              ErrorCode::invalid_argument, "boundary data: x1(0) != x2(0)");
  }

  if (had_all && probes > 0) check_consistency(spec, seed, probes, fd_tol);
}

double hamiltonian(const ProblemSpec& spec, const EvalArgs& a, const double* psi) {
  int n = spec.n();
  std::vector<double> fv(n);
  spec.dyn.f(a, fv.data());
  return spec.cost.Phi(a) + dot(psi, fv.data(), n);
}

void hamiltonian_partials(const ProblemSpec& spec, const EvalArgs& a,
                          const double* psi, double* H_x, double* H_p,
                          double* H_q, double* H_u) {
  int n = spec.n(), m = spec.m();
  std::vector<double> M(n * std::max(n, m));
  auto add = [&](const VecFn& fpart, const VecFn& phipart, double* out, int dim) {
    if (!out) return;
    phipart(a, out);
    fpart(a, M.data());
    std::vector<double> tmp(dim);
    vecmat(psi, M.data(), tmp.data(), n, dim);
    for (int j = 0; j < dim; ++j) out[j] += tmp[j];
  };
  add(spec.dyn.f_x, spec.cost.Phi_x, H_x, n);
  add(spec.dyn.f_p, spec.cost.Phi_p, H_p, n);
  add(spec.dyn.f_q, spec.cost.Phi_q, H_q, n);
  add(spec.dyn.f_u, spec.cost.Phi_u, H_u, m);
}

void aux_hamiltonians(const ProblemSpec& spec, const EvalArgs& a,
                      const double* rho1, const double* rho2, double* h1,
                      double* h2) {
  int n = spec.n();
  std::vector<double> fv(n);
  spec.dyn.f(a, fv.data());
  // h_alpha^i = f^k rho_{alpha,k}^i  (contract over the row index of rho)
  if (h1) vecmat(fv.data(), rho1, h1, n, n);
  if (h2) vecmat(fv.data(), rho2, h2, n, n);
}

Field total_derivative(const Grid& g, TotalDeriv which, const Field& composite) {
  return which == TotalDeriv::Ds ? diff_s(g, composite) : diff_t(g, composite);
}

}  // namespace gd
