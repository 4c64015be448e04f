#ifndef CATEBENCH_H
#define CATEBENCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible C-ABI call.
typedef enum CbStatus {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_ARGUMENT = 2,
  CB_STATUS_RUNTIME_ERROR = 3,
} CbStatus;

// One experiment's data behind an opaque pointer.
typedef struct CbExperiment CbExperiment;

// A fitted CATE model behind an opaque pointer.
typedef struct CbModel CbModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cb_version(void);

// Copies the calling thread's last error message into `buf` (truncated to
// `len - 1` bytes, always NUL-terminated) and returns the full message
// length in bytes. Call with `buf == NULL` to query the length.
size_t cb_last_error(char *buf, size_t len);

// Generates one experiment from a named data-generating process.
//
// `dgp` is one of: semi-synth-v1, semi-synth-v2, sim-lm, sim-rf, sim-rft,
// mnist (synthetic images). On success `*out` owns the new handle.
enum CbStatus cb_experiment_simulate(const char *dgp,
                                     size_t n_units,
                                     uint64_t seed,
                                     struct CbExperiment **out);

// Reads an experiment from the columnar CSV format.
enum CbStatus cb_experiment_read_csv(const char *path, struct CbExperiment **out);

// Writes an experiment to the columnar CSV format; set `with_truth` only
// when the experiment carries ground-truth surfaces.
enum CbStatus cb_experiment_write_csv(const struct CbExperiment *exp,
                                      const char *path,
                                      bool with_truth);

size_t cb_experiment_n_units(const struct CbExperiment *exp);

size_t cb_experiment_n_features(const struct CbExperiment *exp);

size_t cb_experiment_treated_count(const struct CbExperiment *exp);

// Copies the true CATE vector into `out` (length `cb_experiment_n_units`).
// Fails when the experiment has no attached truth.
enum CbStatus cb_experiment_true_tau(const struct CbExperiment *exp, double *out);

void cb_experiment_free(struct CbExperiment *exp);

// Fits a single-experiment learner. `method` is a learner id (t-nn, s-nn,
// y-nn, x-nn, t-lm, s-rf, t-rf); `max_steps` of 0 keeps the default
// optimizer budget. On success `*out` owns the fitted model.
enum CbStatus cb_fit(const struct CbExperiment *exp,
                     const char *method,
                     uint64_t seed,
                     size_t max_steps,
                     struct CbModel **out);

// Predicts CATE for `n_rows` units of `n_cols` features held row-major in
// `features`, writing `n_rows` values to `out`.
enum CbStatus cb_model_predict_tau(const struct CbModel *model,
                                   const double *features,
                                   size_t n_rows,
                                   size_t n_cols,
                                   double *out);

// Serializes the model as JSON to `path`.
enum CbStatus cb_model_save_json(const struct CbModel *model, const char *path);

void cb_model_free(struct CbModel *model);

// Mean squared error between two CATE vectors of length `len`.
enum CbStatus cb_cate_mse(const double *tau_hat, const double *tau_true, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CATEBENCH_H */
