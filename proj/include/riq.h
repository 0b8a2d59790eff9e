/* riq -- norm-proportional model quantization and entropy coding.
 *
 * C interface to the riq shared library. All functions return a
 * riq_status; on failure riq_last_error() holds a human-readable
 * message for the calling thread. Objects returned through out
 * parameters are owned by the caller and released with the matching
 * *_free function. Handles are opaque.
 */
#ifndef RIQ_H
#define RIQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RIQ_API __declspec(dllexport)
#else
#define RIQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum riq_status {
    RIQ_OK = 0,
    RIQ_ERR_INVALID_ARGUMENT = 1,
    RIQ_ERR_MISSING_FILE = 2,
    RIQ_ERR_MANIFEST_MISMATCH = 3,
    RIQ_ERR_NON_FINITE_WEIGHT = 4,
    RIQ_ERR_IO = 5,
    RIQ_ERR_BAD_ARCHIVE = 6,
    RIQ_ERR_UNKNOWN_LAYER = 7,
    RIQ_ERR_UNSATISFIABLE = 8,
    RIQ_ERR_DOMAIN = 9,
    RIQ_ERR_INTERNAL = 10
} riq_status;

typedef struct riq_model riq_model;
typedef struct riq_calib riq_calib;

/* Message for the most recent failure on this thread. Valid until the
 * next failing call from the same thread. Never NULL. */
RIQ_API const char *riq_last_error(void);

/* Short name of a status code, e.g. "Unsatisfiable". */
RIQ_API const char *riq_status_name(riq_status status);

RIQ_API void riq_string_free(char *s);

/* ---- model containers (.riqm: directory with manifest.json + weights.bin) */

RIQ_API riq_status riq_model_load(const char *path, riq_model **out);
RIQ_API riq_status riq_model_save(const riq_model *model, const char *path);

/* arch grammar: layers separated by ';'.
 *   dense:OUT,IN[,relu|identity]
 *   conv2d:OUT_CH,IN_CH,KH,KW[,relu|identity]
 * init is "gaussian" or "uniform". */
RIQ_API riq_status riq_model_synth(const char *arch, const char *init,
                                   uint64_t seed, riq_model **out);
RIQ_API void riq_model_free(riq_model *model);

RIQ_API size_t riq_model_layer_count(const riq_model *model);
RIQ_API riq_status riq_model_layer_name(const riq_model *model, size_t index,
                                        char *buf, size_t buf_size);
RIQ_API riq_status riq_model_layer_weights(const riq_model *model, size_t index,
                                           uint64_t *count_out);

/* ---- calibration sets (raw f32 blob + "<path>.json" sidecar {count,shape}) */

RIQ_API riq_status riq_calib_load(const char *path, riq_calib **out);
RIQ_API riq_status riq_calib_gaussian(const riq_model *model, uint32_t count,
                                      uint64_t seed, riq_calib **out);
RIQ_API riq_status riq_calib_save(const riq_calib *calib, const char *path);
RIQ_API void riq_calib_free(riq_calib *calib);

/* Mean (and optionally max) cosine deviation between the outputs of two
 * models over a calibration set. */
RIQ_API riq_status riq_deviation(const riq_model *reference,
                                 const riq_model *candidate,
                                 const riq_calib *calib, double *mean_out,
                                 double *max_out);

/* ---- compression ---- */

typedef struct riq_compress_opts {
    /* Exactly one of the two targets must be set (> 0). */
    double deviation_budget; /* accept smallest k with deviation <= budget */
    double target_ratio;     /* accept smallest-deviation k with ratio >= target */
    double eps0;             /* bin-width floor constant, default 0.01 */
    double stop_threshold;   /* search resolution (> 1), default 3 */
} riq_compress_opts;

RIQ_API void riq_compress_opts_default(riq_compress_opts *opts);

typedef struct riq_compress_stats {
    double chosen_k;
    double deviation;     /* mean over the calibration set */
    double max_deviation; /* max over the calibration set */
    double est_ratio;     /* entropy-formula estimate */
    double actual_ratio;  /* 32-bit baseline vs. archive bytes */
    uint32_t evaluations; /* deviation evaluations spent by the search */
    int satisfied;        /* 0 when the archive is best-effort only */
} riq_compress_stats;

/* Searches the quantization parameter, entropy-codes the result and writes
 * the .rqz archive. A JSON report is written next to the archive
 * ("<archive>.json") or to report_path when given. Returns
 * RIQ_ERR_UNSATISFIABLE when no parameter meets the target; the best-effort
 * archive and report are still written in that case. */
RIQ_API riq_status riq_compress(const riq_model *model, const riq_calib *calib,
                                const riq_compress_opts *opts,
                                const char *archive_path,
                                const char *report_path,
                                riq_compress_stats *stats);

/* Reconstructs fp32 weights from an archive. skeleton_path (optional) names
 * the original .riqm container; when given, layer topology, activations and
 * biases are restored from it. Without it layers come back as flat dense
 * rows. layer_name (optional) restricts the output to a single layer. */
RIQ_API riq_status riq_decompress(const char *archive_path,
                                  const char *skeleton_path,
                                  const char *layer_name, riq_model **out);

/* ---- analysis ---- */

/* Rate-distortion sweep over a log-spaced grid of `points` values of the
 * quantization parameter in [k_lo, k_hi]; writes sweep.csv rows
 * (k,deviation,mean_entropy,est_ratio,actual_ratio). */
RIQ_API riq_status riq_sweep_csv(const riq_model *model, const riq_calib *calib,
                                 double k_lo, double k_hi, uint32_t points,
                                 double eps0, const char *csv_path);

/* Emits sweep.csv, layers.csv, fit.csv and uniform.csv under out_dir and
 * returns a printable summary (free with riq_string_free). */
RIQ_API riq_status riq_analyze(const riq_model *model, const riq_calib *calib,
                               double eps0, const char *out_dir,
                               char **summary_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RIQ_H */
