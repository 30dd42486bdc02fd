#ifndef PREFKIT_H
#define PREFKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PkStatus {
  PK_STATUS_OK = 0,
  PK_STATUS_NULL_POINTER = 1,
  PK_STATUS_INVALID_ARGUMENT = 2,
  PK_STATUS_IO = 3,
  PK_STATUS_PARSE = 4,
  PK_STATUS_NUMERIC = 5,
  PK_STATUS_BUFFER_TOO_SMALL = 6,
  PK_STATUS_PANIC = 7,
} PkStatus;

typedef enum PkAxis {
  PK_AXIS_USERS = 0,
  PK_AXIS_ITEMS = 1,
} PkAxis;

typedef struct PkCatalog PkCatalog;

typedef struct PkKits PkKits;

typedef struct PkPreferences PkPreferences;

typedef struct PkSvd PkSvd;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *pk_last_error(void);

/**
 * Static NUL-terminated version string.
 */
const char *pk_version(void);

enum PkStatus pk_catalog_load(const char *path, struct PkCatalog **out);

size_t pk_catalog_len(const struct PkCatalog *catalog);

void pk_catalog_free(struct PkCatalog *catalog);

enum PkStatus pk_prefs_load(const char *path,
                            const struct PkCatalog *catalog,
                            struct PkPreferences **out);

/**
 * Builds a matrix from `n_users * n_items` row-major 0/1 bytes. Users are
 * named `u0`, `u1`, ...
 */
enum PkStatus pk_prefs_from_rows(const struct PkCatalog *catalog,
                                 const uint8_t *data,
                                 size_t n_users,
                                 size_t n_items,
                                 struct PkPreferences **out);

enum PkStatus pk_prefs_dims(const struct PkPreferences *prefs, size_t *n_users, size_t *n_items);

void pk_prefs_free(struct PkPreferences *prefs);

/**
 * Counts rows that break the quotas; writes the count to `violations`.
 */
enum PkStatus pk_validate(const struct PkPreferences *prefs,
                          const struct PkCatalog *catalog,
                          size_t expensive_quota,
                          size_t cheap_quota,
                          size_t *violations);

enum PkStatus pk_svd(const struct PkPreferences *prefs, struct PkSvd **out);

/**
 * Number of singular values, min(n_users, n_items).
 */
size_t pk_svd_len(const struct PkSvd *f);

enum PkStatus pk_svd_sigma(const struct PkSvd *f, double *out, size_t cap);

void pk_svd_free(struct PkSvd *f);

/**
 * Sign-pattern cluster label per user or item at truncation rank `rank`.
 */
enum PkStatus pk_sign_clusters(const struct PkSvd *f,
                               size_t rank,
                               enum PkAxis axis,
                               size_t *labels,
                               size_t cap,
                               size_t *n_clusters);

/**
 * Damped K-means. Writes a label per user; when `silhouette` is non-NULL
 * also the macro-averaged silhouette.
 */
enum PkStatus pk_kmeans(const struct PkPreferences *prefs,
                        size_t k,
                        double lambda,
                        size_t max_iters,
                        uint64_t seed,
                        size_t *labels,
                        size_t cap,
                        double *silhouette_out);

/**
 * One kit per non-empty cluster, where `labels[i] < n_clusters` is the
 * cluster of user i. Kit ids are cluster ids.
 */
enum PkStatus pk_design_kits(const struct PkPreferences *prefs,
                             const struct PkCatalog *catalog,
                             const size_t *labels,
                             size_t n_labels,
                             size_t n_clusters,
                             size_t expensive_quota,
                             size_t cheap_quota,
                             bool constrained,
                             struct PkKits **out);

size_t pk_kits_count(const struct PkKits *kits);

/**
 * Id and items of the kit at position `index`; `len` receives the item count.
 */
enum PkStatus pk_kit_items(const struct PkKits *kits,
                           size_t index,
                           size_t *kit_id,
                           size_t *items,
                           size_t cap,
                           size_t *len);

void pk_kits_free(struct PkKits *kits);

/**
 * Moves each user to its least-mismatched kit. `initial[i]` and
 * `after[i]` are kit positions; the loss arrays receive per-user Hamming
 * losses before and after.
 */
enum PkStatus pk_reassign(const struct PkPreferences *prefs,
                          const struct PkKits *kits,
                          const size_t *initial,
                          size_t n,
                          size_t *after,
                          uint32_t *loss_before,
                          uint32_t *loss_after);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PREFKIT_H */
