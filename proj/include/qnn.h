/* C API for the quaternion neural network library.
 *
 * All entry points return a qnn_status; on failure qnn_last_error() holds a
 * human-readable message for the calling thread. Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * _free function. Strings returned as const char* stay owned by the object
 * they came from.
 */

#ifndef QNN_H
#define QNN_H

#include <stddef.h>

#if defined(_WIN32)
#define QNN_API __declspec(dllexport)
#else
#define QNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qnn_status {
  QNN_OK = 0,
  QNN_ERR_USAGE = 1,    /* bad configuration or arguments; names the field */
  QNN_ERR_SHAPE = 2,    /* operand shapes do not conform */
  QNN_ERR_DOMAIN = 3,   /* value outside the operation's domain */
  QNN_ERR_CONTRACT = 4, /* API precondition violated */
  QNN_ERR_LOOKUP = 5,   /* unknown id or name */
  QNN_ERR_IO = 6,       /* file missing, unreadable or malformed */
  QNN_ERR_GRAPH = 7,    /* tape wiring violation */
  QNN_ERR_VERIFY = 8,   /* a verification check failed */
  QNN_ERR_INTERNAL = 9
} qnn_status;

QNN_API const char* qnn_version(void);
QNN_API const char* qnn_status_name(qnn_status status);
/* Message from the most recent failure on this thread; empty if none. */
QNN_API const char* qnn_last_error(void);

/* ---- configuration -------------------------------------------------- */

typedef struct qnn_config qnn_config;

QNN_API qnn_config* qnn_config_create(void);
QNN_API void qnn_config_free(qnn_config* config);
/* Sets one key=value field (same keys as the config file format). */
QNN_API qnn_status qnn_config_set(qnn_config* config, const char* key, const char* value);
/* Loads a key=value config file with optional [sections]. */
QNN_API qnn_status qnn_config_load(qnn_config* config, const char* path);

/* ---- reports ---------------------------------------------------------- */

typedef struct qnn_report qnn_report;

QNN_API void qnn_report_free(qnn_report* report);
/* Rendered multi-line text of the report. */
QNN_API const char* qnn_report_text(const qnn_report* report);
/* Named numeric field; QNN_ERR_LOOKUP if absent. */
QNN_API qnn_status qnn_report_number(const qnn_report* report, const char* key, double* out);
/* Named string field; NULL if absent. */
QNN_API const char* qnn_report_string(const qnn_report* report, const char* key);

/* ---- operations -------------------------------------------------------- */

/* Trains per the config and writes config.txt, metrics.tsv, model.qnn and
 * report.txt into out_dir. Report numbers: steps_run, final_loss,
 * final_metric, reached_target, param_total, transform_weight_params,
 * reference_transform_weight_params, wall_seconds. Strings: metric_name,
 * checkpoint, metrics, config. */
QNN_API qnn_status qnn_train(const qnn_config* config, const char* out_dir,
                             qnn_report** out_report);

/* Parameter-count comparison against the real reference at identical
 * dimensions. Numbers: total, transform_weights, reference_total,
 * reference_transform_weights, ratio, ratio_exact_quarter, ok. */
QNN_API qnn_status qnn_params(const qnn_config* config, qnn_report** out_report);

/* Runs the built-in verification suite (algebra identities, matrix-form
 * oracle, gradient checks, softmax normalization, count ratios). Returns
 * QNN_ERR_VERIFY if any check fails; the report lists every check either
 * way. Numbers: checks_total, checks_failed. */
QNN_API qnn_status qnn_verify(qnn_report** out_report);

/* Writes the configured task's dataset in its line-delimited format. */
QNN_API qnn_status qnn_gen_data(const qnn_config* config, const char* out_path);

/* ---- decoding ----------------------------------------------------------- */

typedef struct qnn_decoder qnn_decoder;

/* Opens a trained transduction checkpoint; expects config.txt next to it. */
QNN_API qnn_status qnn_decoder_open(const char* checkpoint_path, qnn_decoder** out_decoder);
QNN_API void qnn_decoder_free(qnn_decoder* decoder);
/* Greedy-decodes a source string; *out_target is released with
 * qnn_string_free. */
QNN_API qnn_status qnn_decode(const qnn_decoder* decoder, const char* source,
                              char** out_target);
/* Scores a source<TAB>target file by per-sequence exact match. Numbers:
 * total, exact, exact_match. */
QNN_API qnn_status qnn_decode_eval(const qnn_decoder* decoder, const char* dataset_path,
                                   qnn_report** out_report);

QNN_API void qnn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* QNN_H */
