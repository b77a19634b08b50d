#include "volterra.hpp"

#include <cmath>
#include <sstream>

namespace gd {

double select_rho(double lipschitz, double a, double b) {
  for (double rho : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0}) {
    double factor =
        lipschitz * (1 - std::exp(-rho * a)) * (1 - std::exp(-rho * b)) / (rho * rho);
    if (factor <= 0.5) return rho;
  }
  return 8.0;
}

PicardResult picard_solve(const VolterraSystem& sys) {
  const Grid& g = *sys.grid;
  const int i0 = sys.i0, i1 = sys.i1, k0 = sys.k0, k1 = sys.k1;
  const int ni = i1 - i0 + 1, nk = k1 - k0 + 1, dim = sys.dim;
  const bool fwd = sys.dir == SweepDirection::forward;
  require(ni >= 1 && nk >= 1, ErrorCode::invalid_argument, "empty region");

  const double s_lo = g.s[i0], s_hi = g.s[i1], t_lo = g.t[k0], t_hi = g.t[k1];
  const double ext_a = std::max(s_hi - s_lo, 1e-12);
  const double ext_b = std::max(t_hi - t_lo, 1e-12);

  PicardResult res;
  res.rho = sys.rho >= 0 ? sys.rho : select_rho(sys.lipschitz, ext_a, ext_b);
  res.contraction_bound = sys.lipschitz * (1 - std::exp(-res.rho * ext_a)) *
                          (1 - std::exp(-res.rho * ext_b)) / (res.rho * res.rho);
  WeightedNorm wn;
  wn.rho = res.rho;
  wn.s_ref = fwd ? s_lo : s_hi;
  wn.t_ref = fwd ? t_lo : t_hi;

  // Per-column top index and fragment extent; per-row right analogues.
  std::vector<int> Ktop(ni), Jright(nk);
  std::vector<double> frag_t(ni, 0.0), frag_s(nk, 0.0);
  for (int ii = 0; ii < ni; ++ii) {
    double top = sys.top_t.empty() ? t_hi : sys.top_t[ii];
    int K = k1;
    while (K > k0 && g.t[K] > top + 1e-12) --K;
    Ktop[ii] = K;
    frag_t[ii] = std::max(0.0, top - g.t[K]);
  }
  for (int kk = 0; kk < nk; ++kk) {
    double right = sys.right_s.empty() ? s_hi : sys.right_s[kk];
    int J = i1;
    while (J > i0 && g.s[J] > right + 1e-12) --J;
    Jright[kk] = J;
    frag_s[kk] = std::max(0.0, right - g.s[J]);
  }
  auto in_region = [&](int i, int k) {
    return k <= Ktop[i - i0] && i <= Jright[k - k0];
  };

  Field psi(i0, i1, k0, k1, dim), P(i0, i1, k0, k1, dim), Q(i0, i1, k0, k1, dim);
  for (int i = i0; i <= i1; ++i)
    for (int k = k0; k <= k1; ++k) {
      sys.seed(i, k, psi.at(i, k));
      sys.seed_s(i, k, P.at(i, k));
      sys.seed_t(i, k, Q.at(i, k));
    }

  Field gval(i0, i1, k0, k1, dim);
  Field colcum(i0, i1, k0, k1, dim), rowcum(i0, i1, k0, k1, dim);
  Field Eint(i0, i1, k0, k1, dim);
  Field npsi = psi, nP = P, nQ = Q;
  std::vector<double> gfrag_col(static_cast<size_t>(ni) * dim, 0.0);
  std::vector<double> gfrag_row(static_cast<size_t>(nk) * dim, 0.0);

  int high_ratio_streak = 0;
  for (int iter = 1; iter <= sys.max_iter; ++iter) {
    // kernel at all region nodes
    for (int i = i0; i <= i1; ++i)
      for (int k = k0; k <= k1; ++k)
        if (in_region(i, k))
          sys.kernel(i, k, psi.at(i, k), P.at(i, k), Q.at(i, k), gval.at(i, k));

    // kernel at boundary fragment points
    if (!sys.top_t.empty())
      for (int ii = 0; ii < ni; ++ii) {
        double* out = gfrag_col.data() + static_cast<size_t>(ii) * dim;
        if (frag_t[ii] <= 0) continue;
        if (sys.kernel_boundary)
          sys.kernel_boundary(g.s[i0 + ii], g.t[Ktop[ii]] + frag_t[ii], out);
        else
          std::copy(gval.at(i0 + ii, Ktop[ii]), gval.at(i0 + ii, Ktop[ii]) + dim, out);
      }
    if (!sys.right_s.empty())
      for (int kk = 0; kk < nk; ++kk) {
        double* out = gfrag_row.data() + static_cast<size_t>(kk) * dim;
        if (frag_s[kk] <= 0) continue;
        if (sys.kernel_boundary)
          sys.kernel_boundary(g.s[Jright[kk]] + frag_s[kk], g.t[k0 + kk], out);
        else
          std::copy(gval.at(Jright[kk], k0 + kk), gval.at(Jright[kk], k0 + kk) + dim,
                    out);
      }

    // column cumulatives
    for (int i = i0; i <= i1; ++i) {
      int ii = i - i0;
      if (fwd) {
        for (int c = 0; c < dim; ++c) colcum.at(i, k0)[c] = 0.0;
        for (int k = k0 + 1; k <= k1; ++k) {
          double h = g.t[k] - g.t[k - 1];
          for (int c = 0; c < dim; ++c)
            colcum.at(i, k)[c] = colcum.at(i, k - 1)[c] +
                                 0.5 * h * (gval.at(i, k - 1)[c] + gval.at(i, k)[c]);
        }
      } else {
        int K = Ktop[ii];
        for (int c = 0; c < dim; ++c)
          colcum.at(i, K)[c] =
              0.5 * frag_t[ii] *
              (gval.at(i, K)[c] + gfrag_col[static_cast<size_t>(ii) * dim + c]);
        for (int k = K - 1; k >= k0; --k) {
          double h = g.t[k + 1] - g.t[k];
          for (int c = 0; c < dim; ++c)
            colcum.at(i, k)[c] = colcum.at(i, k + 1)[c] +
                                 0.5 * h * (gval.at(i, k)[c] + gval.at(i, k + 1)[c]);
        }
        for (int k = K + 1; k <= k1; ++k)
          for (int c = 0; c < dim; ++c) colcum.at(i, k)[c] = 0.0;
      }
    }

    // row cumulatives
    for (int k = k0; k <= k1; ++k) {
      int kk = k - k0;
      if (fwd) {
        for (int c = 0; c < dim; ++c) rowcum.at(i0, k)[c] = 0.0;
        for (int i = i0 + 1; i <= i1; ++i) {
          double h = g.s[i] - g.s[i - 1];
          for (int c = 0; c < dim; ++c)
            rowcum.at(i, k)[c] = rowcum.at(i - 1, k)[c] +
                                 0.5 * h * (gval.at(i - 1, k)[c] + gval.at(i, k)[c]);
        }
      } else {
        int J = Jright[kk];
        for (int c = 0; c < dim; ++c)
          rowcum.at(J, k)[c] =
              0.5 * frag_s[kk] *
              (gval.at(J, k)[c] + gfrag_row[static_cast<size_t>(kk) * dim + c]);
        for (int i = J - 1; i >= i0; --i) {
          double h = g.s[i + 1] - g.s[i];
          for (int c = 0; c < dim; ++c)
            rowcum.at(i, k)[c] = rowcum.at(i + 1, k)[c] +
                                 0.5 * h * (gval.at(i, k)[c] + gval.at(i + 1, k)[c]);
        }
        for (int i = J + 1; i <= i1; ++i)
          for (int c = 0; c < dim; ++c) rowcum.at(i, k)[c] = 0.0;
      }
    }

    // area integrals: prefix (forward) or clipped suffix (backward) of colcum
    for (int k = k0; k <= k1; ++k) {
      int kk = k - k0;
      if (fwd) {
        for (int c = 0; c < dim; ++c) Eint.at(i0, k)[c] = 0.0;
        for (int i = i0 + 1; i <= i1; ++i) {
          double h = g.s[i] - g.s[i - 1];
          for (int c = 0; c < dim; ++c)
            Eint.at(i, k)[c] = Eint.at(i - 1, k)[c] +
                               0.5 * h * (colcum.at(i - 1, k)[c] + colcum.at(i, k)[c]);
        }
      } else {
        int J = Jright[kk];
        // end fragment: colcum decays to zero at the boundary crossing
        for (int c = 0; c < dim; ++c)
          Eint.at(J, k)[c] = 0.5 * frag_s[kk] * colcum.at(J, k)[c];
        for (int i = J - 1; i >= i0; --i) {
          double h = g.s[i + 1] - g.s[i];
          for (int c = 0; c < dim; ++c)
            Eint.at(i, k)[c] = Eint.at(i + 1, k)[c] +
                               0.5 * h * (colcum.at(i, k)[c] + colcum.at(i + 1, k)[c]);
        }
      }
    }

    // updates
    double sup = 0.0, wsup_psi = 0.0, wsup_P = 0.0, wsup_Q = 0.0;
    for (int i = i0; i <= i1; ++i)
      for (int k = k0; k <= k1; ++k) {
        if (!fwd && !in_region(i, k)) {
          std::copy(psi.at(i, k), psi.at(i, k) + dim, npsi.at(i, k));
          std::copy(P.at(i, k), P.at(i, k) + dim, nP.at(i, k));
          std::copy(Q.at(i, k), Q.at(i, k) + dim, nQ.at(i, k));
          continue;
        }
        double w = wn.weight(g.s[i], g.t[k]);
        sys.seed(i, k, npsi.at(i, k));
        sys.seed_s(i, k, nP.at(i, k));
        sys.seed_t(i, k, nQ.at(i, k));
        for (int c = 0; c < dim; ++c) {
          npsi.at(i, k)[c] += Eint.at(i, k)[c];
          nP.at(i, k)[c] += (fwd ? 1.0 : -1.0) * colcum.at(i, k)[c];
          nQ.at(i, k)[c] += (fwd ? 1.0 : -1.0) * rowcum.at(i, k)[c];
          double d0 = std::fabs(npsi.at(i, k)[c] - psi.at(i, k)[c]);
          double d1 = std::fabs(nP.at(i, k)[c] - P.at(i, k)[c]);
          double d2 = std::fabs(nQ.at(i, k)[c] - Q.at(i, k)[c]);
          sup = std::max({sup, d0, d1, d2});
          wsup_psi = std::max(wsup_psi, w * d0);
          wsup_P = std::max(wsup_P, w * d1);
          wsup_Q = std::max(wsup_Q, w * d2);
          require(std::isfinite(npsi.at(i, k)[c]) && std::isfinite(nP.at(i, k)[c]) &&
                      std::isfinite(nQ.at(i, k)[c]),
                  ErrorCode::nan_encountered, "NaN encountered in Picard sweep");
        }
      }
    std::swap(psi, npsi);
    std::swap(P, nP);
    std::swap(Q, nQ);

    double wtriple = wsup_psi + wsup_P + wsup_Q;
    if (!res.weighted_history.empty() && res.weighted_history.back() > 0) {
      double ratio = wtriple / res.weighted_history.back();
      res.ratio_history.push_back(ratio);
      if (ratio > 1.0 && sup > sys.tol) ++high_ratio_streak;
      else high_ratio_streak = 0;
      if (high_ratio_streak >= 5) res.contraction_violated = true;
    }
    res.sup_history.push_back(sup);
    res.weighted_history.push_back(wtriple);
    res.iterations = iter;
    if (sup < sys.tol) {
      res.converged = true;
      break;
    }
  }

  if (!res.converged) {
    std::ostringstream os;
    os << "NoConvergence after " << res.iterations
       << " Picard iterations; last residuals:";
    size_t nh = res.sup_history.size();
    for (size_t i = nh > 5 ? nh - 5 : 0; i < nh; ++i) os << " " << res.sup_history[i];
    if (res.contraction_violated) os << " (ContractionViolated: rho-norm ratio > 1)";
    throw GdError(ErrorCode::no_convergence, os.str());
  }

  res.psi = std::move(psi);
  res.P = std::move(P);
  res.Q = std::move(Q);
  return res;
}

}  // namespace gd
