#ifndef LTLP_H
#define LTLP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LtlpSolverKind {
  LTLP_SOLVER_KIND_EXACT = 0,
  LTLP_SOLVER_KIND_SINKHORN = 1,
  // Exact on small supports, Sinkhorn above the size threshold.
  LTLP_SOLVER_KIND_AUTO = 2,
} LtlpSolverKind;

// Result codes returned by every fallible function.
typedef enum LtlpStatus {
  LTLP_STATUS_OK = 0,
  LTLP_STATUS_NULL_POINTER = 1,
  LTLP_STATUS_INVALID_INPUT = 2,
  LTLP_STATUS_DIMENSION_MISMATCH = 3,
  LTLP_STATUS_MASS_MISMATCH = 4,
  LTLP_STATUS_SOLVER_FAILURE = 5,
  LTLP_STATUS_NUMERICAL_OVERFLOW = 6,
  LTLP_STATUS_BUFFER_TOO_SMALL = 7,
  LTLP_STATUS_PANIC = 8,
} LtlpStatus;

// Opaque embedding reference built from a set of signals.
typedef struct LtlpReference LtlpReference;

// Opaque signal: a weighted point cloud with values at each point.
typedef struct LtlpSignal LtlpSignal;

// Transport options shared by the distance and embedding calls.
typedef struct LtlpOptions {
  double p;
  double channel_scale;
  enum LtlpSolverKind solver;
  // Entropic regularization, ignored by the exact solver.
  double epsilon;
  // Nonzero selects log-domain Sinkhorn iterations.
  uint8_t log_domain;
} LtlpOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ltlp_version(void);

// Defaults: p = 2, channel scale 1, exact solver, epsilon 0.01.
struct LtlpOptions ltlp_options_default(void);

// Copy the last error message of this thread into `buf`, truncating and
// always NUL-terminating when `len > 0`. Returns the length the full
// message needs including the terminator, or 0 if there is none.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
uintptr_t ltlp_last_error_message(char *buf, uintptr_t len);

// Build a signal from `n` points in `d` dimensions (row-major), optional
// weights (null means uniform) and `n` rows of `m` channel values.
//
// # Safety
// `points` must hold `n * d` doubles, `weights` `n` doubles or be null,
// `values` `n * m` doubles (or be null when `m == 0`); `out` must be valid.
enum LtlpStatus ltlp_signal_new(const double *points,
                                const double *weights,
                                const double *values,
                                uintptr_t n,
                                uintptr_t d,
                                uintptr_t m,
                                struct LtlpSignal **out);

// Release a signal. Null is ignored.
//
// # Safety
// `signal` must come from [`ltlp_signal_new`] and not be used afterwards.
void ltlp_signal_free(struct LtlpSignal *signal);

// TLp distance between two signals.
//
// # Safety
// All pointers must be valid handles or outputs.
enum LtlpStatus ltlp_tlp_distance(const struct LtlpSignal *a,
                                  const struct LtlpSignal *b,
                                  const struct LtlpOptions *opts,
                                  double *out);

// Mean reference of `count` signals sharing one support.
//
// # Safety
// `signals` must point to `count` valid handles; `out` must be valid.
enum LtlpStatus ltlp_reference_new(const struct LtlpSignal *const *signals,
                                   uintptr_t count,
                                   struct LtlpReference **out);

// Release a reference. Null is ignored.
//
// # Safety
// `reference` must come from [`ltlp_reference_new`] and not be used afterwards.
void ltlp_reference_free(struct LtlpReference *reference);

// Number of doubles in an embedding against `reference`.
//
// # Safety
// `reference` must be a valid handle and `out` valid.
enum LtlpStatus ltlp_embedding_len(const struct LtlpReference *reference, uintptr_t *out);

// Write the linear embedding of `signal` into `buf`: spatial block then
// channel block, each row-major over reference atoms.
//
// # Safety
// Handles must be valid and `buf` writable for `len` doubles.
enum LtlpStatus ltlp_embed(const struct LtlpReference *reference,
                           const struct LtlpSignal *signal,
                           const struct LtlpOptions *opts,
                           double *buf,
                           uintptr_t len);

// Linear distance between two embeddings produced against `reference`.
//
// # Safety
// `a` and `b` must hold `len` doubles; handles and `out` must be valid.
enum LtlpStatus ltlp_linear_distance(const struct LtlpReference *reference,
                                     const double *a,
                                     const double *b,
                                     uintptr_t len,
                                     double p,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LTLP_H */
