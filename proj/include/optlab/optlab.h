/* optlab public C API.
 *
 * All functions return an int status code (OPTLAB_OK == 0 on success) unless
 * documented otherwise. On failure, optlab_last_error() returns a
 * thread-local, NUL-terminated message describing the most recent error on
 * the calling thread. Handles are opaque; every *_create has a matching
 * *_destroy, and destroy functions accept NULL.
 */
#ifndef OPTLAB_OPTLAB_H
#define OPTLAB_OPTLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OPTLAB_API __declspec(dllexport)
#else
#define OPTLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  OPTLAB_OK = 0,
  OPTLAB_ERR_INTERNAL = 1,
  OPTLAB_ERR_CONFIG = 2,
  OPTLAB_ERR_CHECKPOINT = 3,
  OPTLAB_ERR_DATA = 4,
  OPTLAB_ERR_ARGUMENT = 5,
  OPTLAB_ERR_DOMAIN = 6,
  OPTLAB_ERR_NUMERIC = 7,
  OPTLAB_ERR_IO = 8
};

/* Library version string, e.g. "0.1.0". Never NULL. */
OPTLAB_API const char* optlab_version(void);

/* Message for the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next failing optlab_* call on the thread. */
OPTLAB_API const char* optlab_last_error(void);

/* ----------------------------------------------------------- objectives */

typedef struct optlab_objective optlab_objective;

/* Create a benchmark objective by name ("sphere", "rosenbrock", ...).
 * `offset` may be NULL for the unshifted function; otherwise it must hold
 * `dim` entries (the requested dimension, before any per-function rounding).
 * On success *out owns the instance. */
OPTLAB_API int optlab_objective_create(const char* name, int dim,
                                       const double* offset,
                                       optlab_objective** out);
OPTLAB_API void optlab_objective_destroy(optlab_objective* obj);

/* Effective dimension (may differ from the requested one for functions with
 * dimension constraints). Returns 0 if obj is NULL. */
OPTLAB_API int optlab_objective_dim(const optlab_objective* obj);

OPTLAB_API int optlab_objective_value(const optlab_objective* obj,
                                      const double* x, size_t n, double* out);
OPTLAB_API int optlab_objective_gradient(const optlab_objective* obj,
                                         const double* x, size_t n,
                                         double* out /* n entries */);
/* Global minimizer and value. x_star must hold dim entries; either output
 * pointer may be NULL to skip it. */
OPTLAB_API int optlab_objective_minimum(const optlab_objective* obj,
                                        double* x_star, double* f_star);

/* ----------------------------------------------- learned optimizer params */

typedef struct optlab_params optlab_params;

/* Fresh randomly initialized parameters. arch_json may be NULL/"" for the
 * default architecture, or a JSON object with any of: num_encoders, d_model,
 * heads, ffn_width, feature_count, lambda_a, lambda_b. */
OPTLAB_API int optlab_params_init(const char* arch_json, uint64_t seed,
                                  optlab_params** out);
OPTLAB_API int optlab_params_load(const char* path, optlab_params** out);
OPTLAB_API int optlab_params_save(const optlab_params* params,
                                  const char* path);
OPTLAB_API void optlab_params_destroy(optlab_params* params);
/* Total scalar parameter count. Returns 0 if params is NULL. */
OPTLAB_API int64_t optlab_params_count(const optlab_params* params);

/* ------------------------------------------------------------- solver runs */

typedef struct {
  double* losses;       /* objective value at each visited iterate */
  int64_t* evals_cum;   /* cumulative function evaluations, aligned */
  size_t len;           /* entries in losses / evals_cum */
  int64_t func_evals;   /* total function evaluations */
  int terminated_by;    /* 0 = stopping rule, 1 = iteration cap, 2 = error */
} optlab_trajectory;

/* Run one solver on one objective from x0 (n entries, the requested
 * dimension's effective size; query optlab_objective_dim).
 *
 * solver_json: {"name": "adam"|"gdm"|"bfgs"|"optimus"|"adafactor_mlp"|
 *               "basin_hopping", "lr": ..., "hops": ..., "perturb_scale": ...,
 *               "inner": ...} -- unknown keys rejected. Learned solvers take
 * their weights from `params` (required for them, ignored otherwise).
 *
 * stop_json: {"window":5,"beta":1.0,"epsilon":1e-8,"max_iters":200} or
 * NULL/"" for defaults. run_seed feeds stochastic solvers (basin hopping).
 *
 * On success fills *out; release with optlab_trajectory_free. */
OPTLAB_API int optlab_run_solver(const char* solver_json,
                                 const optlab_params* params,
                                 const optlab_objective* objective,
                                 const double* x0, size_t n,
                                 const char* stop_json, uint64_t run_seed,
                                 optlab_trajectory* out);
OPTLAB_API void optlab_trajectory_free(optlab_trajectory* traj);

/* ---------------------------------------------------------------- commands */

/* Run a top-level command ("meta-train", "tune", "evaluate", "report",
 * "analyze-direction", "bench-runtime") exactly as the CLI would.
 * config_path may be NULL/"" (defaults only); overrides is an array of
 * n_overrides "key=value" strings applied on top (JSON-parsed values). */
OPTLAB_API int optlab_run_command(const char* command, const char* config_path,
                                  const char* const* overrides,
                                  size_t n_overrides);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OPTLAB_OPTLAB_H */
