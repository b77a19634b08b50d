#include "goursat/goursat.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "gd/adjoint.hpp"
#include "gd/optimize.hpp"
#include "gd/runner.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

gd_status status_of(const gd::GdError& e) {
  switch (e.code()) {
    case gd::ErrorCode::invalid_argument: return GD_ERR_INVALID_ARGUMENT;
    case gd::ErrorCode::config_invalid: return GD_ERR_CONFIG;
    case gd::ErrorCode::geometry: return GD_ERR_GEOMETRY;
    case gd::ErrorCode::dimension_mismatch: return GD_ERR_INVALID_ARGUMENT;
    case gd::ErrorCode::no_convergence:
    case gd::ErrorCode::nan_encountered: return GD_ERR_SOLVER;
    case gd::ErrorCode::check_failed: return GD_ERR_CHECK_FAILED;
    default: return GD_ERR_INTERNAL;
  }
}

template <typename F>
gd_status guarded(F&& f) {
  try {
    f();
    return GD_OK;
  } catch (const gd::GdError& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GD_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct gd_domain {
  gd::Domain dom;
};
struct gd_problem {
  gd::BuiltinProblem bp;
};
struct gd_state {
  gd::StateSolution st;
  gd::Field u;
  gd::Grid grid;  // copy, so evaluation needs no domain handle
};
struct gd_costate {
  gd::CostateSolution cs;
  gd::Domain dom;  // copy, for region lookup during evaluation
};

extern "C" {

const char* gd_version(void) { return "0.1.0"; }

const char* gd_last_error(void) { return g_last_error.c_str(); }

void gd_string_free(char* s) { std::free(s); }

gd_status gd_domain_create(const char* spec_json, gd_domain** out) {
  return guarded([&] {
    gd::require(spec_json && out, gd::ErrorCode::invalid_argument, "null argument");
    json j = json::parse(spec_json);
    std::string type = j.at("type").get<std::string>();
    double hmax = j.value("hmax", 1.0 / 32);
    std::vector<gd::Point> extra;
    if (j.contains("extra_vertices"))
      for (const auto& p : j["extra_vertices"])
        extra.push_back({p[0].get<double>(), p[1].get<double>()});
    gd::Domain d;
    if (type == "rectangle")
      d = gd::make_rectangle(j.value("a", 1.0), j.value("b", 1.0), hmax);
    else if (type == "quarter_disk")
      d = gd::make_quarter_disk(j.value("radius", 1.0), hmax, extra);
    else if (type == "staircase")
      d = gd::make_staircase(hmax);
    else if (type == "triangle")
      d = gd::make_triangle(j.value("A", 1.0), hmax);
    else
      throw gd::GdError(gd::ErrorCode::config_invalid,
                        "unknown domain type " + type);
    *out = new gd_domain{std::move(d)};
  });
}

void gd_domain_destroy(gd_domain* d) { delete d; }

gd_status gd_domain_vertex_count(const gd_domain* d, int* out) {
  return guarded([&] {
    gd::require(d && out, gd::ErrorCode::invalid_argument, "null argument");
    *out = static_cast<int>(d->dom.vertices.size());
  });
}

gd_status gd_domain_grid_size(const gd_domain* d, int* ns, int* nt) {
  return guarded([&] {
    gd::require(d && ns && nt, gd::ErrorCode::invalid_argument, "null argument");
    *ns = d->dom.grid.ns();
    *nt = d->dom.grid.nt();
  });
}

gd_status gd_domain_to_json(const gd_domain* d, char** out) {
  return guarded([&] {
    gd::require(d && out, gd::ErrorCode::invalid_argument, "null argument");
    *out = dup_string(d->dom.to_json());
  });
}

gd_status gd_problem_create_builtin(const char* id, const char* params_json,
                                    double hmax, gd_problem** out) {
  return guarded([&] {
    gd::require(id && out, gd::ErrorCode::invalid_argument, "null argument");
    std::map<std::string, double> params;
    if (params_json && *params_json) {
      json j = json::parse(params_json);
      for (auto it = j.begin(); it != j.end(); ++it)
        params[it.key()] = it.value().get<double>();
    }
    *out = new gd_problem{gd::make_builtin_problem(id, hmax, params)};
  });
}

void gd_problem_destroy(gd_problem* p) { delete p; }

gd_status gd_problem_dims(const gd_problem* p, int* n, int* m) {
  return guarded([&] {
    gd::require(p && n && m, gd::ErrorCode::invalid_argument, "null argument");
    *n = p->bp.spec.n();
    *m = p->bp.spec.m();
  });
}

gd_status gd_problem_domain(const gd_problem* p, const gd_domain** out) {
  return guarded([&] {
    gd::require(p && out, gd::ErrorCode::invalid_argument, "null argument");
    // the handle aliases the problem's domain; no ownership transferred
    *out = reinterpret_cast<const gd_domain*>(&p->bp.domain);
  });
}

namespace {

gd::Field control_from_array(const gd::BuiltinProblem& bp, const double* u,
                             size_t u_len) {
  const gd::Grid& g = bp.domain.grid;
  int m = bp.spec.m();
  gd::Field f = gd::Field::full(g, m);
  if (!u) return f;
  gd::require(u_len == f.v.size(), gd::ErrorCode::dimension_mismatch,
              "control array length must be ns*nt*m");
  std::copy(u, u + u_len, f.v.begin());
  return f;
}

}  // namespace

gd_status gd_solve_state(const gd_problem* p, const double* u, size_t u_len,
                         gd_state** out) {
  return guarded([&] {
    gd::require(p && out, gd::ErrorCode::invalid_argument, "null argument");
    gd::Field uf = control_from_array(p->bp, u, u_len);
    gd::StateSolution st = gd::solve_state(p->bp.domain, p->bp.spec, uf);
    *out = new gd_state{std::move(st), std::move(uf), p->bp.domain.grid};
  });
}

void gd_state_destroy(gd_state* s) { delete s; }

gd_status gd_state_eval(const gd_state* s, double scoord, double tcoord,
                        double* x_out, size_t x_len) {
  return guarded([&] {
    gd::require(s && x_out, gd::ErrorCode::invalid_argument, "null argument");
    gd::require(x_len >= static_cast<size_t>(s->st.x.dim),
                gd::ErrorCode::dimension_mismatch, "output buffer too small");
    s->st.x.sample(s->grid, scoord, tcoord, x_out);
  });
}

gd_status gd_state_iterations(const gd_state* s, int* out) {
  return guarded([&] {
    gd::require(s && out, gd::ErrorCode::invalid_argument, "null argument");
    *out = s->st.iterations;
  });
}

gd_status gd_costate_sweep(const gd_problem* p, const gd_state* s,
                           const double* u, size_t u_len, gd_costate** out) {
  return guarded([&] {
    gd::require(p && s && out, gd::ErrorCode::invalid_argument, "null argument");
    gd::Field uf = control_from_array(p->bp, u, u_len);
    gd::FTerms ft = gd::compute_F_terms(p->bp.domain, p->bp.spec, s->st, uf);
    *out = new gd_costate{
        gd::sweep_costate(p->bp.domain, p->bp.spec, s->st, uf, ft), p->bp.domain};
  });
}

void gd_costate_destroy(gd_costate* c) { delete c; }

gd_status gd_costate_eval(const gd_costate* c, double scoord, double tcoord,
                          double* psi_out, size_t psi_len) {
  return guarded([&] {
    gd::require(c && psi_out, gd::ErrorCode::invalid_argument, "null argument");
    gd::require(psi_len >= static_cast<size_t>(c->cs.n),
                gd::ErrorCode::dimension_mismatch, "output buffer too small");
    c->cs.eval(c->dom, scoord, tcoord, psi_out);
  });
}

gd_status gd_costate_quadrature(const gd_problem* p, const gd_state* s,
                                const double* u, size_t u_len, double scoord,
                                double tcoord, double* psi_out, size_t psi_len) {
  return guarded([&] {
    gd::require(p && s && psi_out, gd::ErrorCode::invalid_argument, "null argument");
    gd::require(psi_len >= static_cast<size_t>(p->bp.spec.n()),
                gd::ErrorCode::dimension_mismatch, "output buffer too small");
    gd::Field uf = control_from_array(p->bp, u, u_len);
    gd::FTerms ft = gd::compute_F_terms(p->bp.domain, p->bp.spec, s->st, uf);
    gd::Vec psi = gd::costate_by_quadrature(p->bp.domain, p->bp.spec, s->st, uf,
                                            ft, {scoord, tcoord});
    std::copy(psi.begin(), psi.end(), psi_out);
  });
}

gd_status gd_cost_eval(const gd_problem* p, const gd_state* s, const double* u,
                       size_t u_len, double* total, double* area_term,
                       double* arc_term, double* vertex_term) {
  return guarded([&] {
    gd::require(p && s && total, gd::ErrorCode::invalid_argument, "null argument");
    gd::Field uf = control_from_array(p->bp, u, u_len);
    gd::CostBreakdown cb = gd::cost(p->bp.domain, p->bp.spec, s->st, uf);
    *total = cb.total;
    if (area_term) *area_term = cb.area_term;
    if (arc_term) *arc_term = cb.arc_term;
    if (vertex_term) *vertex_term = cb.vertex_term;
  });
}

gd_status gd_run(const char* config_json, const char* out_dir, int* exit_code) {
  return guarded([&] {
    gd::require(config_json && exit_code, gd::ErrorCode::invalid_argument,
                "null argument");
    std::string err;
    *exit_code = gd::run_config_text(config_json, out_dir ? out_dir : "", &err);
    if (!err.empty()) g_last_error = err;
  });
}

}  // extern "C"
