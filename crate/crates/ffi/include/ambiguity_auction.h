#ifndef AMBIGUITY_AUCTION_H
#define AMBIGUITY_AUCTION_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum AaStatus {
  AA_STATUS_OK = 0,
  AA_STATUS_NULL_POINTER = 1,
  AA_STATUS_INVALID_ARGUMENT = 2,
  AA_STATUS_INVALID_STRUCTURE = 3,
  AA_STATUS_OUT_OF_SUPPORT = 4,
  AA_STATUS_NUMERICAL = 5,
  AA_STATUS_DATA = 6,
  AA_STATUS_EMPTY_CHAIN = 7,
  AA_STATUS_NOT_CONVERGED = 8,
  AA_STATUS_IO = 9,
  AA_STATUS_PARSE = 10,
  AA_STATUS_BUFFER_TOO_SMALL = 11,
  AA_STATUS_PANIC = 12,
} AaStatus;

/**
 * Opaque equilibrium bid function.
 */
typedef struct AaBidCurve AaBidCurve;

/**
 * Opaque posterior chain.
 */
typedef struct AaChain AaChain;

/**
 * Opaque bid dataset.
 */
typedef struct AaDataset AaDataset;

/**
 * Opaque model structure.
 */
typedef struct AaStructure AaStructure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next call on the same thread.
 */
const char *aa_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *aa_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be null.
 */
void aa_string_free(char *s);

/**
 * Parses and validates a structure from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_handle` must be writable.
 */
enum AaStatus aa_structure_from_json(const char *json, struct AaStructure **out_handle);

/**
 * The default data-generating structure.
 *
 * # Safety
 * `out_handle` must be writable.
 */
enum AaStatus aa_structure_default(struct AaStructure **out_handle);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void aa_structure_free(struct AaStructure *s);

/**
 * Pessimistic cdf `D(F0(v))`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_structure_fstar(const struct AaStructure *s, double v, double *value);

/**
 * Bid function for `n` bidders and reserve `reserve`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_bid_curve_new(const struct AaStructure *s,
                               size_t n,
                               double reserve,
                               struct AaBidCurve **out_handle);

/**
 * # Safety
 * `c` must come from this library or be null.
 */
void aa_bid_curve_free(struct AaBidCurve *c);

/**
 * Bid of value `v`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_bid_curve_bid(const struct AaBidCurve *c, double v, double *bid);

/**
 * Value whose bid is `b`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_bid_curve_inverse(const struct AaBidCurve *c, double b, double *value);

/**
 * Expected revenue on the reserve grid `0, step, ...` below 1.
 *
 * # Safety
 * `values` must hold `cap` doubles; `len` must be writable.
 */
enum AaStatus aa_revenue_curve(const struct AaStructure *s,
                               size_t n,
                               double step,
                               double *values,
                               size_t cap,
                               size_t *len);

/**
 * Simulates a dataset from a DGP JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_handle` must be writable.
 */
enum AaStatus aa_dataset_simulate(const char *json, struct AaDataset **out_handle);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out_handle` must be writable.
 */
enum AaStatus aa_dataset_read_csv(const char *path, struct AaDataset **out_handle);

/**
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_dataset_write_csv(const struct AaDataset *d, const char *path);

/**
 * Number of bids.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_dataset_len(const struct AaDataset *d, size_t *len);

/**
 * Bids in file order.
 *
 * # Safety
 * `bids` must hold `cap` doubles; `len` must be writable.
 */
enum AaStatus aa_dataset_bids(const struct AaDataset *d, double *bids, size_t cap, size_t *len);

/**
 * # Safety
 * `d` must come from this library or be null.
 */
void aa_dataset_free(struct AaDataset *d);

/**
 * Runs the posterior sampler. `sampler_json` may be null for the desk
 * defaults. A chain that hits the iteration cap is still returned, together
 * with `NotConverged`.
 *
 * # Safety
 * Pointers must be valid; `sampler_json` may be null.
 */
enum AaStatus aa_estimate(const struct AaDataset *d,
                          const char *sampler_json,
                          struct AaChain **out_handle);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out_handle` must be writable.
 */
enum AaStatus aa_chain_read_csv(const char *path, struct AaChain **out_handle);

/**
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_chain_write_csv(const struct AaChain *c, const char *path);

/**
 * Retained draws.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_chain_len(const struct AaChain *c, size_t *len);

/**
 * Posterior probability of ambiguity neutrality.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_chain_neutral_prob(const struct AaChain *c, double *prob);

/**
 * Bayes-action reserve for `n` bidders with its predictive revenue and
 * 95% band.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_chain_bayes_action(const struct AaChain *c,
                                    size_t n,
                                    double step,
                                    double *rho,
                                    double *revenue,
                                    double *lo,
                                    double *hi);

/**
 * # Safety
 * `c` must come from this library or be null.
 */
void aa_chain_free(struct AaChain *c);

/**
 * Recovers the primitives from the exact bid laws of `s` at `n1` and `n2`
 * bidders. `json_out` receives a string to release with [`aa_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_identify(const struct AaStructure *s,
                          size_t n1,
                          size_t n2,
                          size_t levels,
                          char **json_out);

/**
 * Recovered CRRA coefficient alone.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AaStatus aa_identify_crra(const struct AaStructure *s,
                               size_t n1,
                               size_t n2,
                               size_t levels,
                               double *crra);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMBIGUITY_AUCTION_H */
