#ifndef TREE_SOBOLEV_H
#define TREE_SOBOLEV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TSOB_BUILDING_LIBRARY)
#    define TSOB_API __declspec(dllexport)
#  else
#    define TSOB_API __declspec(dllimport)
#  endif
#else
#  define TSOB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tsob_status {
  TSOB_OK = 0,
  TSOB_INVALID_ARGUMENT = 1,
  TSOB_SHAPE_MISMATCH = 2,
  TSOB_NOT_CONVERGED = 3,
  TSOB_LIMIT_EXCEEDED = 4,
  TSOB_IO = 5,
  TSOB_INTERNAL = 6
} tsob_status;

/* Walk profile on a radially symmetric tree of height N. */
typedef struct tsob_profile tsob_profile;

TSOB_API const char* tsob_version(void);
/* Message of the last failing call on this thread; "" if none. */
TSOB_API const char* tsob_last_error(void);

/* weights: W_1..W_N. */
TSOB_API tsob_status tsob_profile_from_weights(const double* weights, int n, double p, tsob_profile** out);
/* q: q_0..q_N with q_0 = q_N = 1. */
TSOB_API tsob_status tsob_profile_from_q(const double* q, int n, tsob_profile** out);
TSOB_API void tsob_profile_destroy(tsob_profile* profile);

TSOB_API int tsob_profile_height(const tsob_profile* profile);
/* Copies q_0..q_N (n+1 values). */
TSOB_API tsob_status tsob_profile_q(const tsob_profile* profile, double* out, size_t len);
/* Copies x_0..x_{N-1}. */
TSOB_API tsob_status tsob_profile_x(const tsob_profile* profile, double* out, size_t len);
/* Row-major (N+1)^2 matrices P(s, r), B(s, r) and A(s, r). */
TSOB_API tsob_status tsob_profile_hitting(const tsob_profile* profile, double* out, size_t len);
TSOB_API tsob_status tsob_profile_leaf_hits(const tsob_profile* profile, double* out, size_t len);
TSOB_API tsob_status tsob_profile_increments(const tsob_profile* profile, double* out, size_t len);

/* leaves: 2^N values; vertices_out: 2^{N+1}-1 values in level order. */
TSOB_API tsob_status tsob_extend(const tsob_profile* profile, const double* leaves, size_t n_leaves,
                                 double* vertices_out, size_t n_vertices);
/* edges_in / edges_out: 2^{N+1}-2 values, edge e joins vertex e+1 to its parent. */
TSOB_API tsob_status tsob_induced_T(const tsob_profile* profile, const double* edges_in, size_t n_edges,
                                    double* edges_out);

TSOB_API tsob_status tsob_seminorm(const double* weights, int n, const double* vertices, size_t n_vertices,
                                   double p, double* out);

typedef struct tsob_trace_result {
  double value;
  double kkt_residual;
  double duality_gap;
  int iterations;
  int converged;
} tsob_trace_result;

/* vertices_out may be NULL. Returns TSOB_NOT_CONVERGED with the result filled if the solve fails. */
TSOB_API tsob_status tsob_trace(const double* weights, int n, const double* leaves, size_t n_leaves, double p,
                                double* vertices_out, tsob_trace_result* result);

typedef struct tsob_constants {
  double p, q, C_p, C_bar, C_hat, C_tilde, T1_bound;
} tsob_constants;

TSOB_API tsob_status tsob_theoretical_constants(double p, tsob_constants* out);

/* Runs a JSON config. *out receives the report or diagnostic JSON (free with
   tsob_string_free); *exit_code is 0, 1 (verify violation), 2 or 3. */
TSOB_API tsob_status tsob_run(const char* config_json, char** out, int* exit_code);
TSOB_API void tsob_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
