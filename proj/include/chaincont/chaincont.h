/*
 * C interface to the chaincont library: lazily sampled two-sided Brownian
 * paths, composition towers of such paths, the combinatorial walk model and
 * the batch experiment runner.
 *
 * Objects are opaque handles created by *_new / *_generate functions and
 * released with the matching *_free. Every call returns a cc_status; on a
 * non-zero status cc_last_error() describes the failure (per thread).
 * Handles are not thread-safe: use one handle per thread.
 */
#ifndef CHAINCONT_CHAINCONT_H_
#define CHAINCONT_CHAINCONT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(CHAINCONT_BUILDING_LIBRARY)
#define CC_API __attribute__((visibility("default")))
#else
#define CC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cc_status {
  CC_OK = 0,
  CC_ERR_INVALID_ARGUMENT = 1,
  CC_ERR_INSUFFICIENT_DATA = 2,
  CC_ERR_OUT_OF_DOMAIN = 3,
  CC_ERR_DEGENERATE_INTERVAL = 4,
  CC_ERR_TRUNCATION_FAILURE = 5,
  CC_ERR_ENUMERATION_OVERFLOW = 6,
  CC_ERR_IO = 7,
  CC_ERR_INTERNAL = 99
} cc_status;

typedef enum cc_extrema_kind {
  CC_EXTREMA_GRID = 0,
  CC_EXTREMA_BRIDGE_EXACT = 1
} cc_extrema_kind;

typedef struct cc_path cc_path;
typedef struct cc_tower cc_tower;
typedef struct cc_walk_tower cc_walk_tower;

CC_API const char* cc_version(void);
CC_API const char* cc_last_error(void);

/* Intervals */
CC_API cc_status cc_interval_dist(double a_lo, double a_hi, double b_lo, double b_hi,
                                  double* out);
CC_API cc_status cc_interval_scale(double c, double lo, double hi, double* out_lo,
                                   double* out_hi);
CC_API cc_status cc_interval_witness(double lo, double hi, double* out);

/* Paths */
CC_API cc_status cc_path_new_brownian(uint64_t seed, double base_step, cc_path** out);
/* formula: identity | sin_pi_n | zigzag | affine */
CC_API cc_status cc_path_new_deterministic(const char* formula, double param, cc_path** out);
CC_API void cc_path_free(cc_path* path);
CC_API cc_status cc_path_value_at(cc_path* path, double t, double* out);
CC_API cc_status cc_path_refine(cc_path* path, double lo, double hi, double step);
CC_API cc_status cc_path_extrema(cc_path* path, double lo, double hi, cc_extrema_kind kind,
                                 double step, uint64_t subseed, double* out_min,
                                 double* out_max);
/* Number of materialized nodes (Brownian paths only). */
CC_API cc_status cc_path_node_count(cc_path* path, size_t* out);
/* Writes "time,value" CSV rows sorted by time (Brownian paths only). */
CC_API cc_status cc_path_dump_csv(cc_path* path, const char* file);

/* Composition towers */
CC_API cc_status cc_tower_new_brownian(uint64_t master_seed, int depth, cc_extrema_kind kind,
                                       double step, cc_tower** out);
/* For sin_pi_n the i-th path uses n = i and param is ignored. */
CC_API cc_status cc_tower_new_deterministic(const char* formula, int depth, double param,
                                            double step, cc_tower** out);
CC_API void cc_tower_free(cc_tower* tower);
CC_API cc_status cc_tower_compose_image(cc_tower* tower, int k_from, int k_to, double lo,
                                        double hi, double* out_lo, double* out_hi);
/* probes: n_probes intervals as consecutive (lo, hi) pairs. max_k <= 0 means all. */
CC_API cc_status cc_tower_estimate_limits(cc_tower* tower, const double* probes,
                                          size_t n_probes, double tol, size_t window,
                                          int max_k);
CC_API cc_status cc_tower_limit_interval(const cc_tower* tower, int k, double* out_lo,
                                         double* out_hi, int* out_converged,
                                         double* out_cross_probe_dist);
CC_API cc_status cc_tower_witness_sequence(const cc_tower* tower, int count, double* out);
/* Writes m coordinates x_1..x_m. */
CC_API cc_status cc_tower_sample_thread(cc_tower* tower, double x_final, int m, double* out);
CC_API cc_status cc_tower_thread_unit_coords(const cc_tower* tower, const double* coords,
                                             int m, double* out);
CC_API cc_status cc_tower_oscillation(cc_tower* tower, int k, double t, double* out);

/* Walk model */
typedef struct cc_graph_stats {
  size_t thread_count;
  size_t edge_count;
  size_t components;
  size_t max_clique;
  size_t triple_count;
  size_t triple_threads;
} cc_graph_stats;

CC_API cc_status cc_walk_tower_generate(uint64_t seed, int depth, uint64_t max_steps,
                                        cc_walk_tower** out);
CC_API void cc_walk_tower_free(cc_walk_tower* tower);
CC_API int cc_walk_tower_depth(const cc_walk_tower* tower);
/* k_n for 0 <= n <= depth. */
CC_API cc_status cc_walk_tower_size(const cc_walk_tower* tower, int n, uint64_t* out);
/* f_n(x) for 0 <= n < depth, 1 <= x <= k_{n+1}. */
CC_API cc_status cc_walk_tower_value(const cc_walk_tower* tower, int n, uint64_t x,
                                     uint32_t* out);
/* JSON {seed, k, walks}; needs *len bytes, including the terminating NUL. When
 * buf is NULL or too small only *len is set and CC_ERR_INSUFFICIENT_DATA is
 * returned. */
CC_API cc_status cc_walk_tower_to_json(const cc_walk_tower* tower, char* buf, size_t* len);
CC_API cc_status cc_walk_graph_stats(const cc_walk_tower* tower, int m, size_t cap,
                                     cc_graph_stats* out);

/* Statistics */
CC_API cc_status cc_ks_two_sample(const double* a, size_t na, const double* b, size_t nb,
                                  double alpha, double* out_statistic, double* out_threshold,
                                  int* out_pass);

/* Experiments. manifest_path may be NULL to run the defaults for experiment;
 * seed_override is applied when has_seed_override != 0. out_exit_status gets
 * 0 pass, 1 statistical failure, 2 usage error, 3 resource cap. */
CC_API cc_status cc_run_experiment(const char* experiment, const char* manifest_path,
                                   const char* out_dir, unsigned workers,
                                   int has_seed_override, uint64_t seed_override,
                                   int* out_exit_status);
CC_API size_t cc_experiment_count(void);
CC_API const char* cc_experiment_name(size_t index);

#ifdef __cplusplus
}
#endif

#endif /* CHAINCONT_CHAINCONT_H_ */
