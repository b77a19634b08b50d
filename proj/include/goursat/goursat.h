/* C API of the Goursat-Darboux optimal-control toolkit.
 *
 * All functions return gd_status; GD_OK means success.  On failure
 * gd_last_error() yields a thread-local message.  Objects are opaque handles
 * released with the matching *_destroy call.  Strings returned through
 * char** outputs are owned by the caller and freed with gd_string_free.
 */
#ifndef GOURSAT_GOURSAT_H
#define GOURSAT_GOURSAT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gd_status {
  GD_OK = 0,
  GD_ERR_INVALID_ARGUMENT = 1,
  GD_ERR_CONFIG = 2,
  GD_ERR_SOLVER = 3,
  GD_ERR_GEOMETRY = 4,
  GD_ERR_CHECK_FAILED = 5,
  GD_ERR_INTERNAL = 6
} gd_status;

typedef struct gd_domain gd_domain;
typedef struct gd_problem gd_problem;
typedef struct gd_state gd_state;
typedef struct gd_costate gd_costate;

const char* gd_version(void);
const char* gd_last_error(void);
void gd_string_free(char* s);

/* ---- domains ---------------------------------------------------------- */

/* spec_json: {"type": "rectangle"|"quarter_disk"|"staircase"|"triangle",
 *             "a":..,"b":..,"radius":..,"A":.., "hmax":..,
 *             "extra_vertices":[[s,t],...]}                               */
gd_status gd_domain_create(const char* spec_json, gd_domain** out);
void gd_domain_destroy(gd_domain* d);
gd_status gd_domain_vertex_count(const gd_domain* d, int* out);
gd_status gd_domain_grid_size(const gd_domain* d, int* ns, int* nt);
gd_status gd_domain_to_json(const gd_domain* d, char** out);

/* ---- problems --------------------------------------------------------- */

gd_status gd_problem_create_builtin(const char* id, const char* params_json,
                                    double hmax, gd_problem** out);
void gd_problem_destroy(gd_problem* p);
gd_status gd_problem_dims(const gd_problem* p, int* n, int* m);
/* Domain the builtin problem was built with (owned by the problem). */
gd_status gd_problem_domain(const gd_problem* p, const gd_domain** out);

/* ---- solves ----------------------------------------------------------- */

/* u: nodal control, length ns*nt*m (i-major, then k, then component),
 * or NULL for u = 0. */
gd_status gd_solve_state(const gd_problem* p, const double* u, size_t u_len,
                         gd_state** out);
void gd_state_destroy(gd_state* s);
gd_status gd_state_eval(const gd_state* s, double scoord, double tcoord,
                        double* x_out, size_t x_len);
gd_status gd_state_iterations(const gd_state* s, int* out);

gd_status gd_costate_sweep(const gd_problem* p, const gd_state* s,
                           const double* u, size_t u_len, gd_costate** out);
void gd_costate_destroy(gd_costate* c);
gd_status gd_costate_eval(const gd_costate* c, double scoord, double tcoord,
                          double* psi_out, size_t psi_len);
/* Direct-quadrature oracle value of the co-state at one target point. */
gd_status gd_costate_quadrature(const gd_problem* p, const gd_state* s,
                                const double* u, size_t u_len, double scoord,
                                double tcoord, double* psi_out, size_t psi_len);

gd_status gd_cost_eval(const gd_problem* p, const gd_state* s, const double* u,
                       size_t u_len, double* total, double* area_term,
                       double* arc_term, double* vertex_term);

/* ---- batch driver ------------------------------------------------------ */

/* Runs a full command described by a config JSON document (the same schema
 * the CLI consumes), writing artifacts under out_dir.  exit_code receives
 * 0 pass / 1 check failed / 2 config error / 3 solver failure. */
gd_status gd_run(const char* config_json, const char* out_dir, int* exit_code);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GOURSAT_GOURSAT_H */
