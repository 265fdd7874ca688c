#ifndef TREEBALANCE_H
#define TREEBALANCE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  TB_STATUS_NULL_POINTER = 1,
  TB_STATUS_INVALID_ARGUMENT = 2,
  TB_STATUS_INVALID_STATE = 3,
  TB_STATUS_INVALID_HANDLE = 4,
  TB_STATUS_FLAT_DISTRIBUTION = 5,
  TB_STATUS_PARSE_ERROR = 6,
  TB_STATUS_IO_ERROR = 7,
  TB_STATUS_BUFFER_TOO_SMALL = 8,
  TB_STATUS_PANIC = 9,
} TbStatus;

/**
 * Opaque partition plan handle. Owns its own copy of the partitioned tree,
 * so it stays valid after the source tree is freed.
 */
typedef struct TbPlan TbPlan;

/**
 * Opaque tree handle.
 */
typedef struct TbTree TbTree;

/**
 * Balancing parameters; start from [`tb_config_default`].
 */
typedef struct TbConfig {
  uint32_t p;
  double psc;
  double asc;
  uint32_t window;
  uint32_t granularity;
  uint64_t seed;
  uint64_t max_probes;
  uint32_t max_reprobes;
  /**
   * Probing thread cap; 0 means one thread per subtree.
   */
  uint32_t threads;
} TbConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `tb_*` call on this thread.
 */
const char *tb_last_error(void);

struct TbConfig tb_config_default(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for a tree pointer.
 */
enum TbStatus tb_tree_fibonacci(uint32_t order, struct TbTree **out);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for a tree pointer.
 */
enum TbStatus tb_tree_biased_random(uint64_t n,
                                    double swap_fraction,
                                    uint64_t seed,
                                    struct TbTree **out);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for a tree pointer.
 */
enum TbStatus tb_tree_perfect(uint32_t depth, struct TbTree **out);

/**
 * Parse the nested-parentheses form, e.g. `((. .) .)`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum TbStatus tb_tree_parse(const char *text, struct TbTree **out);

/**
 * # Safety
 * `tree` must be null or a handle from a `tb_tree_*` constructor that has not
 * been freed yet.
 */
void tb_tree_free(struct TbTree *tree);

/**
 * Exact node count by traversal.
 *
 * # Safety
 * `tree` must be a live handle; `out` must be writable.
 */
enum TbStatus tb_tree_node_count(const struct TbTree *tree, uint64_t *out);

/**
 * Estimate the tree's node count from its root by random probing.
 * `out_probes` may be null.
 *
 * # Safety
 * `tree` and `config` must be valid; `out_estimate` must be writable.
 */
enum TbStatus tb_estimate_node_count(const struct TbTree *tree,
                                     const struct TbConfig *config,
                                     double *out_estimate,
                                     uint64_t *out_probes);

/**
 * Node count predicted from an average probe depth by the default fit.
 */
double tb_fast_node_count(double avg_depth);

/**
 * # Safety
 * `tree` and `config` must be valid; `out` must be writable.
 */
enum TbStatus tb_partition(const struct TbTree *tree,
                           const struct TbConfig *config,
                           struct TbPlan **out);

/**
 * # Safety
 * `tree` must be valid; `out` must be writable.
 */
enum TbStatus tb_trivial_partition(const struct TbTree *tree, uint32_t p, struct TbPlan **out);

/**
 * # Safety
 * `plan` must be null or a live plan handle.
 */
void tb_plan_free(struct TbPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle; `out` must be writable.
 */
enum TbStatus tb_plan_workers(const struct TbPlan *plan, uint32_t *out);

/**
 * Exact number of nodes assigned to `worker`.
 *
 * # Safety
 * `plan` must be a live handle; `out` must be writable.
 */
enum TbStatus tb_plan_worker_node_count(const struct TbPlan *plan, uint32_t worker, uint64_t *out);

/**
 * Estimated work assigned to `worker` (0 for trivial plans).
 *
 * # Safety
 * `plan` must be a live handle; `out` must be writable.
 */
enum TbStatus tb_plan_worker_estimated_work(const struct TbPlan *plan,
                                            uint32_t worker,
                                            double *out);

/**
 * Number of subtree roots assigned to `worker`.
 *
 * # Safety
 * `plan` must be a live handle; `out` must be writable.
 */
enum TbStatus tb_plan_worker_root_count(const struct TbPlan *plan, uint32_t worker, uint64_t *out);

/**
 * Write the plan's text form into `buf` (NUL-terminated). `*needed` is set to
 * the required size including the NUL. Pass `buf = NULL, len = 0` to query
 * the size; a short buffer yields `TB_STATUS_BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `plan` must be live; `buf` must hold `len` bytes or be null; `needed` must
 * be writable.
 */
enum TbStatus tb_plan_to_text(const struct TbPlan *plan, char *buf, size_t len, size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREEBALANCE_H */
