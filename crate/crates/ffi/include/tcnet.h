#ifndef TCNET_H
#define TCNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum TcnFormat
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TCN_FORMAT_JSONL = 0,
  TCN_FORMAT_TSV = 1,
  TCN_FORMAT_TEXT = 2,
};
#ifndef __cplusplus
typedef int32_t TcnFormat;
#endif // __cplusplus

enum TcnIndex
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TCN_INDEX_COHESION = 0,
  TCN_INDEX_TRANSITIVITY = 1,
};
#ifndef __cplusplus
typedef int32_t TcnIndex;
#endif // __cplusplus

enum TcnStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TCN_STATUS_OK = 0,
  TCN_STATUS_NULL_POINTER = 1,
  // Configuration rejected before any work; same value as the CLI exit code.
  TCN_STATUS_VALIDATION = 2,
  // A pipeline stage failed; same value as the CLI exit code.
  TCN_STATUS_STAGE = 3,
  TCN_STATUS_INVALID_ARGUMENT = 4,
  TCN_STATUS_PARSE = 5,
  TCN_STATUS_DEGENERATE_SAMPLE = 6,
  TCN_STATUS_IO = 7,
  TCN_STATUS_PANIC = 99,
};
#ifndef __cplusplus
typedef int32_t TcnStatus;
#endif // __cplusplus

enum TcnTarget
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  TCN_TARGET_INGEST = 0,
  TCN_TARGET_SPECIFICITY = 1,
  TCN_TARGET_FIT = 2,
  TCN_TARGET_EMBED = 3,
  TCN_TARGET_TCN = 4,
  TCN_TARGET_CUTS = 5,
  TCN_TARGET_KS = 6,
  TCN_TARGET_ALL = 7,
};
#ifndef __cplusplus
typedef int32_t TcnTarget;
#endif // __cplusplus

// Opaque corpus index.
typedef struct TcnCorpus TcnCorpus;

// Opaque compound lexicon.
typedef struct TcnLexicon TcnLexicon;

// Opaque alpha-cut index series.
typedef struct TcnSeries TcnSeries;

typedef struct TcnPowerLawFit {
  double alpha;
  double x_min;
  // Loglikelihood ratio, power law against lognormal.
  double r;
  double p;
  size_t n_tail;
} TcnPowerLawFit;

typedef struct TcnKsResult {
  double d_stat;
  double p_value;
  size_t n1;
  size_t n2;
} TcnKsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the calling thread's last failure; empty after a success. The
// pointer stays valid until the next call on the same thread.
const char *tcn_last_error(void);

// Parses corpus `text`; `format` is a `TcnFormat` value.
//
// # Safety
// `text` and `corpus_id` must be NUL-terminated strings; `out` must be writable.
TcnStatus tcn_corpus_parse(const char *text,
                           int32_t format,
                           const char *corpus_id,
                           struct TcnCorpus **out);

// Reads a corpus file; the corpus id is the file stem. `format` is a
// `TcnFormat` value.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
TcnStatus tcn_corpus_load(const char *path, int32_t format, struct TcnCorpus **out);

// Token count of the corpus; 0 for a null handle.
//
// # Safety
// `corpus` must be null or a live handle.
uint64_t tcn_corpus_total_tokens(const struct TcnCorpus *corpus);

// Occurrences of `lemma`; 0 for null arguments.
//
// # Safety
// `corpus` must be null or a live handle; `lemma` null or NUL-terminated.
uint64_t tcn_corpus_lemma_count(const struct TcnCorpus *corpus, const char *lemma);

// # Safety
// `corpus` must be null or a handle not yet freed.
void tcn_corpus_free(struct TcnCorpus *corpus);

// Builds a lexicon from a word list, one entry per line, `#` comments.
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
TcnStatus tcn_lexicon_parse(const char *text, struct TcnLexicon **out);

// # Safety
// `lexicon` must be null or a handle not yet freed.
void tcn_lexicon_free(struct TcnLexicon *lexicon);

// Segments `word`; `*out` receives the lexicon entries of the best cover
// joined by `|`, or null when no cover exists. Free it with `tcn_string_free`.
//
// # Safety
// `word` must be NUL-terminated, `lexicon` live, `out` writable.
TcnStatus tcn_segment(const char *word, const struct TcnLexicon *lexicon, char **out);

// Sets `*out` when `word` reads as a compound containing `concept`.
//
// # Safety
// String arguments must be NUL-terminated, `lexicon` live, `out` writable.
TcnStatus tcn_contains_component(const char *word,
                                 const char *concept,
                                 const struct TcnLexicon *lexicon,
                                 bool *out);

// # Safety
// `s` must be null or a string returned by this library.
void tcn_string_free(char *s);

// Fits a power law to `len` positive values.
//
// # Safety
// `values` must point to `len` doubles; `out` must be writable.
TcnStatus tcn_fit_power_law(const double *values, size_t len, struct TcnPowerLawFit *out);

// Two-sample Kolmogorov-Smirnov test.
//
// # Safety
// `a` and `b` must point to `na` and `nb` doubles; `out` must be writable.
TcnStatus tcn_ks_two_sample(const double *a,
                            size_t na,
                            const double *b,
                            size_t nb,
                            struct TcnKsResult *out);

// Cosine of two `dim`-dimensional vectors.
//
// # Safety
// `u` and `v` must point to `dim` doubles; `out` must be writable.
TcnStatus tcn_cosine(const double *u, const double *v, size_t dim, double *out);

// Index series over all alpha cuts of the network whose raw edge weights are
// the upper triangle of the row-major `n` x `n` matrix `weights`. `index` is
// a `TcnIndex` value.
//
// # Safety
// `weights` must point to `n * n` doubles; `out` must be writable.
TcnStatus tcn_index_series(const double *weights, size_t n, int32_t index, struct TcnSeries **out);

// Number of alpha levels; 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t tcn_series_len(const struct TcnSeries *series);

// Level `i` and its index value.
//
// # Safety
// `series` must be live; `alpha` and `value` must be writable.
TcnStatus tcn_series_get(const struct TcnSeries *series, size_t i, double *alpha, double *value);

// # Safety
// `series` must be null or a handle not yet freed.
void tcn_series_free(struct TcnSeries *series);

// Runs `target` (a `TcnTarget` value) with the JSON configuration at `config_path` and writes its
// outputs. Returns `Validation` or `Stage` on the same conditions the CLI
// exits with 2 or 3.
//
// # Safety
// `config_path` must be NUL-terminated.
TcnStatus tcn_run_pipeline(const char *config_path, int32_t target);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TCNET_H */
