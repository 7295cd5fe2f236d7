#ifndef BGWLAB_H
#define BGWLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BgwOracleCheck {
  BGW_ORACLE_CHECK_KEMPERMAN = 0,
  BGW_ORACLE_CHECK_VERVAAT = 1,
  BGW_ORACLE_CHECK_IN_PMF = 2,
  BGW_ORACLE_CHECK_DTV_LOCAL = 3,
  BGW_ORACLE_CHECK_DUALITY = 4,
  BGW_ORACLE_CHECK_WIENER_HOPF = 5,
  BGW_ORACLE_CHECK_LUKASIEWICZ = 6,
} BgwOracleCheck;

typedef enum BgwStatus {
  BGW_STATUS_OK = 0,
  BGW_STATUS_NULL_POINTER = 1,
  BGW_STATUS_INVALID_ARGUMENT = 2,
  BGW_STATUS_INVALID_LAW = 3,
  BGW_STATUS_BUDGET_EXCEEDED = 4,
  BGW_STATUS_INCONSISTENT = 5,
  BGW_STATUS_IO = 6,
  BGW_STATUS_BUFFER_TOO_SMALL = 7,
  BGW_STATUS_PANIC = 8,
} BgwStatus;

typedef enum BgwTreeMode {
  /**
   * Exactly `n` vertices, by rejection.
   */
  BGW_TREE_MODE_EXACT_N = 0,
  /**
   * `n` vertices via the Vervaat coupling, retried until an excursion.
   */
  BGW_TREE_MODE_APPROX_ZN = 1,
  /**
   * At least `n` vertices, by rejection.
   */
  BGW_TREE_MODE_TAIL_REJECTION = 2,
  /**
   * At least `n` vertices via the big-jump coupling.
   */
  BGW_TREE_MODE_TAIL_VECZ = 3,
} BgwTreeMode;

/**
 * Offspring law.
 */
typedef struct BgwLaw BgwLaw;

/**
 * Seeded random stream.
 */
typedef struct BgwRng BgwRng;

/**
 * Plane tree in depth-first order.
 */
typedef struct BgwTree BgwTree;

typedef struct BgwConstants {
  uint64_t n;
  int64_t a_n;
  double b_n;
  double ell_star_a_n;
  /**
   * NaN for finite-support laws.
   */
  double lambda_n;
} BgwConstants;

typedef struct BgwTreeStats {
  uint64_t size;
  uint64_t max_degree;
  /**
   * First vertex of maximal out-degree, depth-first index.
   */
  uint64_t u_star;
  uint64_t h_star;
  uint64_t height;
} BgwTreeStats;

typedef struct BgwOracleOutcome {
  uint64_t nmax;
  uint64_t cases;
  double max_error;
  bool pass;
} BgwOracleOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static nul-terminated version string.
 */
const char *bgw_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Returns the buffer size needed; nothing is written if `len` is too small.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bgw_last_error(char *buf, size_t len);

/**
 * Law with the log-squared tail `c / (k^2 ln^2 k)` from `kmin` on.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BgwStatus bgw_law_new_log2(double c, uint64_t kmin, struct BgwLaw **out);

/**
 * Finite-support law `mu(k) = probs[k]`.
 *
 * # Safety
 * `probs` must point to `len` doubles; `out` must be valid.
 */
enum BgwStatus bgw_law_new_head(const double *probs, size_t len, struct BgwLaw **out);

/**
 * The four-point law `(0.5, 0.1, 0.3, 0.1)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BgwStatus bgw_law_new_toy(struct BgwLaw **out);

/**
 * Law from its JSON file form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid.
 */
enum BgwStatus bgw_law_from_json(const char *json, struct BgwLaw **out);

/**
 * # Safety
 * `law` must be null or come from a `bgw_law_*` constructor, freed once.
 */
void bgw_law_free(struct BgwLaw *law);

/**
 * `mu(k)`; NaN for a null law.
 *
 * # Safety
 * `law` must be null or a live handle.
 */
double bgw_law_pmf(const struct BgwLaw *law, uint64_t k);

/**
 * `mu([k, inf))`; NaN for a null law.
 *
 * # Safety
 * `law` must be null or a live handle.
 */
double bgw_law_survival(const struct BgwLaw *law, uint64_t k);

/**
 * 16 hex digits identifying the law. Same size convention as
 * `bgw_last_error`; returns 0 for a null law.
 *
 * # Safety
 * `law` must be null or a live handle; `buf` must be null or hold `len` bytes.
 */
size_t bgw_law_hash(const struct BgwLaw *law, char *buf, size_t len);

/**
 * JSON file form of the law, written like `bgw_law_hash`.
 *
 * # Safety
 * As for `bgw_law_hash`.
 */
size_t bgw_law_to_json(const struct BgwLaw *law, char *buf, size_t len);

/**
 * One offspring count.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BgwStatus bgw_law_sample(const struct BgwLaw *law, struct BgwRng *rng, uint64_t *out);

/**
 * Scaling constants at `n`.
 *
 * # Safety
 * `law` and `out` must be valid.
 */
enum BgwStatus bgw_constants(const struct BgwLaw *law, uint64_t n, struct BgwConstants *out);

/**
 * Stream fully determined by `seed`. Returns null only on allocation failure.
 */
struct BgwRng *bgw_rng_new(uint64_t seed);

/**
 * # Safety
 * `rng` must be null or come from `bgw_rng_new`, freed once.
 */
void bgw_rng_free(struct BgwRng *rng);

/**
 * Draws a conditioned tree; `mode` is a `BgwTreeMode` value. `budget` caps the increments drawn, over all
 * attempts for the rejection modes and over retries for `ApproxZn`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BgwStatus bgw_tree_sample(const struct BgwLaw *law,
                               uint32_t mode,
                               uint64_t n,
                               uint64_t budget,
                               struct BgwRng *rng,
                               struct BgwTree **out);

/**
 * Tree from out-degrees in depth-first order.
 *
 * # Safety
 * `counts` must point to `len` values; `out` must be valid.
 */
enum BgwStatus bgw_tree_from_child_counts(const uint64_t *counts, size_t len, struct BgwTree **out);

/**
 * # Safety
 * `tree` must be null or a handle from this library, freed once.
 */
void bgw_tree_free(struct BgwTree *tree);

/**
 * Vertex count; 0 for a null tree.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
uint64_t bgw_tree_size(const struct BgwTree *tree);

/**
 * Copies the out-degrees into `buf` when `len >= size`; otherwise reports
 * `BufferTooSmall`. `needed` receives the tree size either way.
 *
 * # Safety
 * `tree` and `needed` must be valid; `buf` must be null or hold `len` values.
 */
enum BgwStatus bgw_tree_child_counts(const struct BgwTree *tree,
                                     uint64_t *buf,
                                     size_t len,
                                     size_t *needed);

/**
 * # Safety
 * `tree` and `out` must be valid.
 */
enum BgwStatus bgw_tree_stats(const struct BgwTree *tree, struct BgwTreeStats *out);

/**
 * Exact identity check on a finite-support law; `check` is a
 * `BgwOracleCheck` value.
 *
 * # Safety
 * `law` and `out` must be valid.
 */
enum BgwStatus bgw_oracle(const struct BgwLaw *law,
                          uint32_t check,
                          uint64_t nmax,
                          uint64_t seed,
                          struct BgwOracleOutcome *out);

/**
 * Runs one experiment from its JSON config and hands back the report JSON,
 * to be released with `bgw_string_free`.
 *
 * # Safety
 * `config_json` must be a nul-terminated string; `out` must be valid.
 */
enum BgwStatus bgw_verify_json(const char *config_json, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void bgw_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BGWLAB_H */
