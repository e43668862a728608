#ifndef HTRECOVER_H
#define HTRECOVER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HtrStatus {
  HTR_STATUS_OK = 0,
  HTR_STATUS_NULL_POINTER = 1,
  HTR_STATUS_INVALID_ARGUMENT = 2,
  HTR_STATUS_SHAPE_MISMATCH = 3,
  HTR_STATUS_INDEX_OUT_OF_RANGE = 4,
  HTR_STATUS_INVALID_RANK = 5,
  HTR_STATUS_SINGULAR_POINT = 6,
  HTR_STATUS_IO = 7,
  // A panic was caught at the boundary; the message has the details.
  HTR_STATUS_INTERNAL = 8,
} HtrStatus;

typedef enum HtrAlgorithm {
  HTR_ALGORITHM_TIHT = 0,
  HTR_ALGORITHM_RGI = 1,
  HTR_ALGORITHM_ALS = 2,
} HtrAlgorithm;

typedef enum HtrFormat {
  HTR_FORMAT_TUCKER = 0,
  HTR_FORMAT_TT = 1,
} HtrFormat;

typedef enum HtrTermination {
  HTR_TERMINATION_CONVERGED = 0,
  HTR_TERMINATION_MAX_ITERATIONS = 1,
  HTR_TERMINATION_DIVERGED = 2,
  HTR_TERMINATION_STALLED = 3,
} HtrTermination;

// Linear measurement map.
typedef struct HtrMap HtrMap;

// Dense tensor.
typedef struct HtrTensor HtrTensor;

// Tensor in TT format.
typedef struct HtrTt HtrTt;

// Tensor in Tucker format.
typedef struct HtrTucker HtrTucker;

typedef struct HtrRecoveryOptions {
  size_t max_iter;
  // Stop once `‖Aû − b‖ ≤ residual_tol·‖b‖`.
  double residual_tol;
  // Fixed step size; `0` selects the steepest-descent rule.
  double fixed_step;
  uint64_t seed;
} HtrRecoveryOptions;

typedef struct HtrRecoveryReport {
  size_t iterations;
  enum HtrTermination termination;
  double final_residual;
  // Geometric rate fitted to the residual tail, NaN if unavailable.
  double rate_estimate;
} HtrRecoveryReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer stays
// valid until the next `htr_*` call on the same thread.
const char *htr_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *htr_version(void);

// New tensor of the given shape. `values` holds `∏ dims` entries in
// column-major order, or is null for a zero tensor.
enum HtrStatus htr_tensor_new(const size_t *dims,
                              size_t order,
                              const double *values,
                              struct HtrTensor **out);

void htr_tensor_free(struct HtrTensor *t);

// Number of modes, or 0 for a null handle.
size_t htr_tensor_order(const struct HtrTensor *t);

// Number of entries, or 0 for a null handle.
size_t htr_tensor_len(const struct HtrTensor *t);

enum HtrStatus htr_tensor_dims(const struct HtrTensor *t, size_t *out, size_t cap);

// Copies all entries (column-major) into `out`, which must hold `len` values.
enum HtrStatus htr_tensor_values(const struct HtrTensor *t, double *out, size_t cap);

enum HtrStatus htr_tensor_get(const struct HtrTensor *t,
                              const size_t *index,
                              size_t order,
                              double *out);

enum HtrStatus htr_tensor_norm(const struct HtrTensor *t, double *out);

// TT-SVD of `t`. With `nranks == 0` the decomposition is exact; otherwise
// `ranks` holds the `d − 1` target bond ranks.
enum HtrStatus htr_tt_svd(const struct HtrTensor *t,
                          const size_t *ranks,
                          size_t nranks,
                          struct HtrTt **out);

void htr_tt_free(struct HtrTt *t);

// Writes the `d + 1` ranks `1, r₁, …, r_{d−1}, 1`.
enum HtrStatus htr_tt_ranks(const struct HtrTt *t, size_t *out, size_t cap);

enum HtrStatus htr_tt_entry(const struct HtrTt *t, const size_t *index, size_t order, double *out);

enum HtrStatus htr_tt_to_dense(const struct HtrTt *t, struct HtrTensor **out);

// HOSVD of `t`, truncated to `ranks` (one per mode) unless `nranks == 0`.
enum HtrStatus htr_hosvd(const struct HtrTensor *t,
                         const size_t *ranks,
                         size_t nranks,
                         struct HtrTucker **out);

void htr_tucker_free(struct HtrTucker *t);

// Writes the `d` multilinear ranks.
enum HtrStatus htr_tucker_ranks(const struct HtrTucker *t, size_t *out, size_t cap);

enum HtrStatus htr_tucker_to_dense(const struct HtrTucker *t, struct HtrTensor **out);

// Gaussian map with i.i.d. `N(0, 1/m)` entries.
enum HtrStatus htr_map_gaussian(const size_t *dims,
                                size_t order,
                                size_t m,
                                uint64_t seed,
                                struct HtrMap **out);

// Samples `m` distinct entries chosen uniformly at random.
enum HtrStatus htr_map_sampling(const size_t *dims,
                                size_t order,
                                size_t m,
                                uint64_t seed,
                                struct HtrMap **out);

void htr_map_free(struct HtrMap *a);

// Number of measurements, or 0 for a null handle.
size_t htr_map_measurements(const struct HtrMap *a);

// `y = A u`; `y` must hold `m` values.
enum HtrStatus htr_map_apply(const struct HtrMap *a,
                             const struct HtrTensor *u,
                             double *y,
                             size_t m);

// `A* y` as a new tensor.
enum HtrStatus htr_map_adjoint(const struct HtrMap *a,
                               const double *y,
                               size_t m,
                               struct HtrTensor **out);

// Defaults: 5000 iterations, tolerance 1e-6, steepest-descent steps, seed 0.
struct HtrRecoveryOptions htr_recovery_options_default(void);

// Recovers a low-rank tensor from `b = A u`. `ranks` are bond ranks (`d − 1`)
// for TT and mode ranks (`d`) for Tucker; RGI requires TT. `options` may be
// null for the defaults. Failing to converge is not an error: inspect
// `report.termination`.
enum HtrStatus htr_recover(enum HtrAlgorithm algorithm,
                           const struct HtrMap *a,
                           const double *b,
                           size_t m,
                           enum HtrFormat format,
                           const size_t *ranks,
                           size_t nranks,
                           const struct HtrRecoveryOptions *options,
                           struct HtrTensor **out,
                           struct HtrRecoveryReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HTRECOVER_H */
