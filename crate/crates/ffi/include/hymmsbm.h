#ifndef HYMMSBM_H
#define HYMMSBM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 1 to 3 match the command-line exit codes.
 */
typedef enum {
  HM_STATUS_OK = 0,
  /**
   * Null pointer, invalid UTF-8 or an argument outside its domain.
   */
  HM_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Unreadable or malformed input.
   */
  HM_STATUS_DATA_ERROR = 2,
  /**
   * Inference produced non-finite values or every restart failed.
   */
  HM_STATUS_NUMERICAL_ERROR = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  HM_STATUS_PANIC = 4,
} HmStatus;

/**
 * Weight at which held-out and negative hyperedges are compared in AUC.
 */
typedef enum {
  HM_AUC_WEIGHTING_OBSERVED = 0,
  HM_AUC_WEIGHTING_UNIT = 1,
} HmAucWeighting;

/**
 * Opaque hypergraph.
 */
typedef struct HmHypergraph HmHypergraph;

/**
 * Opaque model parameters.
 */
typedef struct HmParams HmParams;

/**
 * Opaque inference report.
 */
typedef struct HmReport HmReport;

/**
 * Inference settings. Obtain defaults from [`hm_infer_config_default`].
 */
typedef struct {
  size_t num_communities;
  size_t num_restarts;
  size_t max_iter;
  double tol;
  size_t check_every;
  double prior_u;
  double prior_w;
  bool assortative;
  uint64_t seed;
} HmInferConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *hm_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hm_version(void);

HmInferConfig hm_infer_config_default(void);

/**
 * Loads a hyperedge list file (weight 1 for lines without one).
 */
HmStatus hm_hypergraph_load(const char *path, HmHypergraph **out);

/**
 * Builds a hypergraph from `num_edges` hyperedges: hyperedge `e` has
 * `sizes[e]` nodes, stored consecutively in `nodes`, and weight `weights[e]`
 * (all 1 when `weights` is NULL). `num_nodes` of 0 infers N from the largest index.
 */
HmStatus hm_hypergraph_from_edges(size_t num_nodes,
                                  const size_t *nodes,
                                  const size_t *sizes,
                                  const uint64_t *weights,
                                  size_t num_edges,
                                  HmHypergraph **out);

/**
 * New hypergraph keeping only hyperedges of size at most `max_size`, with `D = max_size`.
 */
HmStatus hm_hypergraph_truncate(const HmHypergraph *h, size_t max_size, HmHypergraph **out);

/**
 * Number of nodes, or 0 for NULL.
 */
size_t hm_hypergraph_num_nodes(const HmHypergraph *h);

/**
 * Number of distinct hyperedges, or 0 for NULL.
 */
size_t hm_hypergraph_num_edges(const HmHypergraph *h);

/**
 * Maximum hyperedge size D, or 0 for NULL.
 */
size_t hm_hypergraph_max_size(const HmHypergraph *h);

/**
 * Writes the hypergraph in hyperedge-list format.
 */
HmStatus hm_hypergraph_save(const HmHypergraph *h, const char *path);

void hm_hypergraph_free(HmHypergraph *h);

/**
 * Parameters from row-major `u` (`num_nodes × num_communities`) and `w`
 * (`num_communities × num_communities`, symmetric).
 */
HmStatus hm_params_new(const double *u,
                       size_t num_nodes,
                       size_t num_communities,
                       const double *w,
                       HmParams **out);

/**
 * Loads a parameters JSON file.
 */
HmStatus hm_params_load(const char *path, HmParams **out);

/**
 * Writes a parameters JSON file.
 */
HmStatus hm_params_save(const HmParams *p, const char *path);

size_t hm_params_num_nodes(const HmParams *p);

size_t hm_params_num_communities(const HmParams *p);

/**
 * Copies `u` row-major into `buf`, which must hold exactly N·K values.
 */
HmStatus hm_params_copy_u(const HmParams *p, double *buf, size_t len);

/**
 * Copies `w` row-major into `buf`, which must hold exactly K·K values.
 */
HmStatus hm_params_copy_w(const HmParams *p, double *buf, size_t len);

void hm_params_free(HmParams *p);

/**
 * Fits the model with random restarts.
 */
HmStatus hm_infer(const HmHypergraph *h, const HmInferConfig *config, HmReport **out);

/**
 * Best log-posterior of the report, or NaN for NULL.
 */
double hm_report_best_objective(const HmReport *r);

/**
 * Seed of the winning restart, or 0 for NULL.
 */
uint64_t hm_report_best_seed(const HmReport *r);

/**
 * Copy of the best parameters; release with [`hm_params_free`].
 */
HmStatus hm_report_params(const HmReport *r, HmParams **out);

/**
 * Writes the best parameters as JSON, with the winning seed and objective.
 */
HmStatus hm_report_save_params(const HmReport *r, const char *path);

void hm_report_free(HmReport *r);

/**
 * Draws a hypergraph with hyperedge sizes `2..=max_size` from the model.
 */
HmStatus hm_sample(const HmParams *p, size_t max_size, uint64_t seed, HmHypergraph **out);

/**
 * Splits `h` with `train_ratio` using the configuration seed, fits on the
 * training part and writes the held-out AUC and its standard error. Matches the
 * `auc` command of the CLI.
 */
HmStatus hm_auc(const HmHypergraph *h,
                const HmInferConfig *config,
                double train_ratio,
                size_t comparisons_per_edge,
                HmAucWeighting weighting,
                double *auc,
                double *std_err);

/**
 * Cosine similarity between row-major ground-truth memberships
 * (`num_nodes × num_communities`) and the `u` of `inferred`, after the best
 * column alignment.
 */
HmStatus hm_cosine_similarity(const double *u_true,
                              size_t num_nodes,
                              size_t num_communities,
                              const HmParams *inferred,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYMMSBM_H */
