/* SPDX-License-Identifier: Apache-2.0
 * Copyright 2026 The UMFC Authors
 *
 * C interface to the UMFC embedding-calibration library.
 *
 * Objects are opaque handles created by umfc_*_new / umfc_*_read / result
 * out-parameters and released with the matching umfc_*_free. Every fallible
 * call returns a umfc_status; on failure umfc_last_error() describes the
 * problem for the calling thread. Out-parameters are only written on success.
 */
#ifndef UMFC_UMFC_H
#define UMFC_UMFC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(UMFC_BUILDING_LIBRARY)
#    define UMFC_API __declspec(dllexport)
#  else
#    define UMFC_API __declspec(dllimport)
#  endif
#else
#  define UMFC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum umfc_status {
  UMFC_OK = 0,
  UMFC_ERR_INVALID_ARGUMENT = 1,
  UMFC_ERR_DIMENSION_MISMATCH = 2,
  UMFC_ERR_NON_FINITE = 3,
  UMFC_ERR_DEGENERATE_VECTOR = 4,
  UMFC_ERR_DEGENERATE_FEATURE = 5,
  UMFC_ERR_ALL_SHIFTS_DEGENERATE = 6,
  UMFC_ERR_EMPTY_SELECTION = 7,
  UMFC_ERR_TOO_FEW_SAMPLES = 8,
  UMFC_ERR_MISSING_LABELS = 9,
  UMFC_ERR_EMPTY_DOMAIN = 10,
  UMFC_ERR_DIMENSION_TOO_SMALL = 11,
  UMFC_ERR_IO = 12,
  UMFC_ERR_BAD_MAGIC = 13,
  UMFC_ERR_UNSUPPORTED_VERSION = 14,
  UMFC_ERR_WRONG_PAYLOAD_KIND = 15,
  UMFC_ERR_TRUNCATED_PAYLOAD = 16,
  UMFC_ERR_NON_FINITE_PAYLOAD = 17,
  UMFC_ERR_LABEL_COUNT_MISMATCH = 18,
  UMFC_ERR_NAME_COUNT_MISMATCH = 19,
  UMFC_ERR_DUPLICATE_NAME = 20,
  UMFC_ERR_MALFORMED_FILE = 21,
  UMFC_ERR_INTERNAL = 99
} umfc_status;

/* Broad classes used by the CLI exit-code contract. */
typedef enum umfc_status_class {
  UMFC_CLASS_OK = 0,
  UMFC_CLASS_USAGE = 1,
  UMFC_CLASS_DATA = 2,
  UMFC_CLASS_NUMERIC = 3
} umfc_status_class;

typedef enum umfc_update_mode { UMFC_MODE_MEMORY = 0, UMFC_MODE_EMA = 1 } umfc_update_mode;

enum { UMFC_FLAG_DEGENERATE = 1u, UMFC_FLAG_UNCALIBRATED = 2u };

typedef struct umfc_config {
  size_t clusters;        /* M, default 6 */
  double tau;             /* softmax temperature, default 0.01 */
  double eta;             /* EMA weight in (0,1], default 0.1 */
  umfc_update_mode mode;  /* default memory */
  size_t batch_size;      /* default 100 */
  uint64_t seed;          /* default 0 */
  size_t max_iters;       /* k-means iterations, default 100 */
  double tol;             /* k-means centroid-shift tolerance, default 1e-4 */
  int normalize_input;    /* L2-normalize features and texts at ingestion, default 1 */
  int normalize_shifts;   /* subtract unit shift directions, default 0 */
  int ema_additive;       /* c <- c + eta*c' instead of the convex EMA, default 0 */
} umfc_config;

typedef struct umfc_synth_spec {
  size_t classes;               /* default 10 */
  size_t domains;               /* default 3 */
  size_t dim;                   /* default 32 */
  double class_sep;             /* default 1 */
  double domain_offset_norm;    /* default 2 */
  double noise_sigma;           /* default 0.05 */
  size_t samples_per_cell;      /* default 50 */
  double text_class_bias;       /* default 0.25 */
  double text_domain_lean;      /* default 0.5 */
  double text_perturbation;     /* default 1e-3 */
  const double* class_imbalance; /* optional domains x classes weights, row-major; NULL for none */
  int shuffle;                  /* default 1 */
  uint64_t seed;                /* default 7 */
} umfc_synth_spec;

typedef struct umfc_matrix umfc_matrix;           /* embedding matrix with optional labels */
typedef struct umfc_bank umfc_bank;               /* class-name text bank */
typedef struct umfc_predictions umfc_predictions; /* batch of predictions */
typedef struct umfc_stream umfc_stream;           /* calibration / streaming state */

/* ---- errors and version ---- */
UMFC_API const char* umfc_last_error(void);
UMFC_API const char* umfc_status_name(umfc_status status);
UMFC_API umfc_status_class umfc_status_classify(umfc_status status);
UMFC_API const char* umfc_version(void);

/* ---- defaults ---- */
UMFC_API void umfc_config_default(umfc_config* cfg);
UMFC_API void umfc_synth_spec_default(umfc_synth_spec* spec);

/* ---- embedding matrices ---- */
UMFC_API umfc_status umfc_matrix_new(const double* data, size_t rows, size_t dim, umfc_matrix** out);
UMFC_API umfc_status umfc_matrix_read(const char* path, umfc_matrix** out);
UMFC_API umfc_status umfc_matrix_read_csv(const char* path, umfc_matrix** out);
UMFC_API umfc_status umfc_matrix_write(const umfc_matrix* m, const char* path);
UMFC_API void umfc_matrix_free(umfc_matrix* m);
UMFC_API size_t umfc_matrix_rows(const umfc_matrix* m);
UMFC_API size_t umfc_matrix_dim(const umfc_matrix* m);
UMFC_API const double* umfc_matrix_row(const umfc_matrix* m, size_t i);
UMFC_API const char* umfc_matrix_id(const umfc_matrix* m, size_t i);
UMFC_API int umfc_matrix_has_class_labels(const umfc_matrix* m);
UMFC_API int umfc_matrix_has_domain_labels(const umfc_matrix* m);
/* -1 when absent. */
UMFC_API int umfc_matrix_class_label(const umfc_matrix* m, size_t i);
UMFC_API int umfc_matrix_domain_label(const umfc_matrix* m, size_t i);
/* labels may be NULL to clear; otherwise `rows` entries, -1 for unlabeled rows. */
UMFC_API umfc_status umfc_matrix_set_labels(umfc_matrix* m, const int* class_labels, const int* domain_labels);
UMFC_API umfc_status umfc_matrix_subset(const umfc_matrix* m, const size_t* indices, size_t count, umfc_matrix** out);

/* ---- text banks ---- */
UMFC_API umfc_status umfc_bank_new(const double* data, size_t classes, size_t dim, const char* const* names,
                                   umfc_bank** out);
UMFC_API umfc_status umfc_bank_read(const char* path, const char* names_path, umfc_bank** out);
UMFC_API umfc_status umfc_bank_write(const umfc_bank* bank, const char* path, const char* names_path);
UMFC_API void umfc_bank_free(umfc_bank* bank);
UMFC_API size_t umfc_bank_size(const umfc_bank* bank);
UMFC_API size_t umfc_bank_dim(const umfc_bank* bank);
UMFC_API const char* umfc_bank_name(const umfc_bank* bank, size_t k);
UMFC_API const double* umfc_bank_row(const umfc_bank* bank, size_t k);

/* ---- synthetic benchmark ---- */
/* Any of the outputs may be NULL when not wanted. */
UMFC_API umfc_status umfc_synth_generate(const umfc_synth_spec* spec, umfc_matrix** images, umfc_bank** text_bank,
                                         umfc_bank** domain_bank);

/* ---- predictions ---- */
UMFC_API void umfc_predictions_free(umfc_predictions* p);
UMFC_API size_t umfc_predictions_count(const umfc_predictions* p);
UMFC_API size_t umfc_predictions_classes(const umfc_predictions* p);
UMFC_API int umfc_predictions_label(const umfc_predictions* p, size_t i);
UMFC_API int umfc_predictions_cluster(const umfc_predictions* p, size_t i);
UMFC_API uint32_t umfc_predictions_flags(const umfc_predictions* p, size_t i);
UMFC_API const double* umfc_predictions_probs(const umfc_predictions* p, size_t i);
/* Appends `src` to `dst` (same class count). */
UMFC_API umfc_status umfc_predictions_append(umfc_predictions* dst, const umfc_predictions* src);

/* ---- calibration regimes ---- */
UMFC_API umfc_status umfc_zero_shot(const umfc_matrix* test, const umfc_bank* bank, const umfc_config* cfg,
                                    umfc_predictions** out);
/* Fit on unlabeled training rows; the result is a stream handle that can be
 * snapshotted, used for prediction, or continued as a stream. */
UMFC_API umfc_status umfc_fit(const umfc_matrix* train, const umfc_bank* bank, const umfc_config* cfg,
                              umfc_stream** out);
/* state_out may be NULL. */
UMFC_API umfc_status umfc_transduce(const umfc_matrix* test, const umfc_bank* bank, const umfc_config* cfg,
                                    umfc_predictions** out, umfc_stream** state_out);
/* tau <= 0 keeps the state's temperature. */
UMFC_API umfc_status umfc_predict(const umfc_stream* state, const umfc_matrix* test, const umfc_bank* bank,
                                  double tau, umfc_predictions** out);

UMFC_API umfc_status umfc_stream_new(const umfc_config* cfg, umfc_stream** out);
UMFC_API umfc_status umfc_stream_step(umfc_stream* state, const umfc_matrix* batch, const umfc_bank* bank,
                                      umfc_predictions** out);
UMFC_API umfc_status umfc_stream_save(const umfc_stream* state, const char* path);
UMFC_API umfc_status umfc_stream_load(const char* path, umfc_stream** out);
UMFC_API void umfc_stream_free(umfc_stream* state);
UMFC_API void umfc_stream_config(const umfc_stream* state, umfc_config* cfg);
UMFC_API int umfc_stream_bootstrapped(const umfc_stream* state);
UMFC_API uint64_t umfc_stream_batches_seen(const umfc_stream* state);
UMFC_API size_t umfc_stream_clusters(const umfc_stream* state);
UMFC_API size_t umfc_stream_dim(const umfc_stream* state);
/* Prototype, calibration mean and text shift of cluster m (D values each; NULL before bootstrap). */
UMFC_API const double* umfc_stream_prototype(const umfc_stream* state, size_t m);
UMFC_API const double* umfc_stream_cluster_mean(const umfc_stream* state, size_t m);
UMFC_API const double* umfc_stream_text_shift(const umfc_stream* state, size_t m);
UMFC_API const double* umfc_stream_global_mean(const umfc_stream* state);
UMFC_API uint64_t umfc_stream_cluster_count(const umfc_stream* state, size_t m);
/* Text bank after text calibration with the state's shifts. */
UMFC_API umfc_status umfc_stream_calibrated_bank(const umfc_stream* state, const umfc_bank* bank, umfc_bank** out);

/* ---- diagnostics ---- */
/* Writes up to `capacity` (domain, correct, total, accuracy) rows; *rows gets the
 * number of domains. Pass capacity 0 to query the size. */
typedef struct umfc_domain_accuracy {
  int domain;
  size_t correct;
  size_t total;
  double accuracy;
} umfc_domain_accuracy;

UMFC_API umfc_status umfc_accuracy(const umfc_predictions* p, const umfc_matrix* truth, int micro,
                                   umfc_domain_accuracy* table, size_t capacity, size_t* rows, double* overall);
/* counts has `classes` entries. */
UMFC_API umfc_status umfc_histogram(const umfc_predictions* p, size_t* counts, size_t classes);
/* rows_out: K x Z row-major probabilities; aggregate_out: Z values; kl_out may be NULL. */
UMFC_API umfc_status umfc_domain_probe(const umfc_bank* bank, const umfc_bank* domain_bank, double tau,
                                       double* rows_out, double* aggregate_out, double* kl_out);
/* cosine_out: Z x Z row-major (NaN on the diagonal), reference directions are
 * pairwise differences of the domain bank rows; domains_out gets the sorted
 * domain ids. Z is the number of domain bank rows. */
UMFC_API umfc_status umfc_direction_check(const umfc_matrix* images, const umfc_bank* domain_bank,
                                          double* cosine_out, int* domains_out, size_t* z_out);

typedef struct umfc_shortfall {
  int class_label;
  int domain_label;
  size_t available;
  size_t requested;
} umfc_shortfall;

/* Two-call pattern: first with NULL buffers to learn the counts. */
UMFC_API umfc_status umfc_balanced_subsample(const umfc_matrix* m, size_t per_cell, uint64_t seed, size_t* indices,
                                             size_t* index_count, umfc_shortfall* shortfalls, size_t* shortfall_count);

#ifdef __cplusplus
}
#endif

#endif /* UMFC_UMFC_H */
