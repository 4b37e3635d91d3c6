#ifndef REFIGN_REFIGN_H
#define REFIGN_REFIGN_H

/*
 * C interface to the refign library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a refign_status; on
 * failure refign_last_error() describes the problem for the calling thread
 * until the next failing call on that thread. Output handles are written only
 * on success. Strings returned through char** are released with
 * refign_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(REFIGN_BUILDING_LIBRARY)
#define REFIGN_API __attribute__((visibility("default")))
#else
#define REFIGN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum refign_status {
  REFIGN_OK = 0,
  REFIGN_ERR_NULL_ARGUMENT = 1,
  REFIGN_ERR_INVALID_ARGUMENT = 2,   /* contract violation: shapes, ranges */
  REFIGN_ERR_DEGENERATE = 3,         /* degenerate homography or taxonomy */
  REFIGN_ERR_EMPTY_INPUT = 4,
  REFIGN_ERR_FORMAT = 5,             /* malformed container */
  REFIGN_ERR_IO = 6,
  REFIGN_ERR_CONFIG = 7,
  REFIGN_ERR_OUT_OF_MEMORY = 8,
  REFIGN_ERR_INTERNAL = 9
} refign_status;

typedef enum refign_dtype {
  REFIGN_DTYPE_F32 = 0,
  REFIGN_DTYPE_U16 = 1,
  REFIGN_DTYPE_BOOL = 2
} refign_dtype;

typedef struct refign_tensor refign_tensor;
typedef struct refign_taxonomy refign_taxonomy;
typedef struct refign_config refign_config;
typedef struct refign_run refign_run;

REFIGN_API const char* refign_version(void);
REFIGN_API const char* refign_last_error(void);
REFIGN_API const char* refign_status_name(refign_status status);
REFIGN_API void refign_string_free(char* s);

/* ---- tensors ---------------------------------------------------------- */

/* `data` holds product(dims) elements in host representation; booleans are
 * one byte each, 0 or 1. */
REFIGN_API refign_status refign_tensor_create(refign_dtype dtype, size_t ndim, const uint64_t* dims,
                                              const void* data, size_t data_bytes,
                                              refign_tensor** out);
REFIGN_API refign_status refign_tensor_load(const char* path, refign_tensor** out);
REFIGN_API refign_status refign_tensor_save(const refign_tensor* t, const char* path);
REFIGN_API void refign_tensor_free(refign_tensor* t);

REFIGN_API refign_dtype refign_tensor_dtype(const refign_tensor* t);
REFIGN_API size_t refign_tensor_ndim(const refign_tensor* t);
REFIGN_API uint64_t refign_tensor_dim(const refign_tensor* t, size_t axis);
REFIGN_API uint64_t refign_tensor_element_count(const refign_tensor* t);
/* Copies the elements in host representation into `dst` (capacity in bytes). */
REFIGN_API refign_status refign_tensor_copy_data(const refign_tensor* t, void* dst, size_t capacity);
/* 1 when dtype, dims and payload bytes are identical, else 0. */
REFIGN_API int refign_tensor_equal(const refign_tensor* a, const refign_tensor* b);

/* ---- taxonomy and configuration -------------------------------------- */

REFIGN_API refign_status refign_taxonomy_create(int classes, const int* large_static, size_t n_large,
                                                const int* small_static, size_t n_small,
                                                const int* dynamic_classes, size_t n_dynamic,
                                                refign_taxonomy** out);
REFIGN_API refign_status refign_taxonomy_load(const char* path, refign_taxonomy** out);
REFIGN_API void refign_taxonomy_free(refign_taxonomy* tax);

REFIGN_API refign_status refign_config_default(refign_config** out);
REFIGN_API refign_status refign_config_parse(const char* text, refign_config** out);
REFIGN_API refign_status refign_config_load(const char* path, refign_config** out);
/* Every key with its effective value, in config file syntax. */
REFIGN_API refign_status refign_config_text(const refign_config* cfg, char** out);
REFIGN_API void refign_config_free(refign_config* cfg);

/* ---- flow composition ------------------------------------------------- */

/* Gaussian flows are f32 [h, w, 4] = (u, v, log-variance, validity 0/1). */
REFIGN_API refign_status refign_compose_gaussian(const refign_tensor* first, const refign_tensor* second,
                                                 refign_tensor** out);

/* ---- pseudo-label refinement ----------------------------------------- */

typedef struct refign_refine_options {
  double gamma;
  int enable_mask;
  int enable_trust;
  int has_fixed_alpha;
  double fixed_alpha;
  int has_threshold;
  double threshold;
  double radius;
} refign_refine_options;

/* gamma 1/4, mask and trust on, no fixed alpha, no threshold, radius 1. */
REFIGN_API void refign_refine_options_default(refign_refine_options* opts);

/* q_target and q_reference are f32 [h, w, c] probability maps; `flow` is the
 * target-to-reference Gaussian flow used to warp q_reference. Outputs the
 * refined map (f32 [h, w, c]), its pseudo-labels (u16 [h, w]) and the trust
 * score. Any output pointer may be NULL. */
REFIGN_API refign_status refign_refine(const refign_tensor* q_target, const refign_tensor* q_reference,
                                       const refign_tensor* flow, const refign_taxonomy* tax,
                                       const refign_refine_options* opts, refign_tensor** refined,
                                       refign_tensor** labels, double* trust);

/* ---- metrics (CSV reports with header metric,parameter,value) -------- */

/* Label maps u16 [h, w] or [n, h, w]. classes <= 0 infers the count from the
 * largest non-ignore label. */
REFIGN_API refign_status refign_eval_miou(const refign_tensor* pred, const refign_tensor* gt,
                                          int classes, char** csv);
/* Match predictions f32 [n, 3] = (u, v, variance), ground truth f32 [n, 2]. */
REFIGN_API refign_status refign_eval_pck(const refign_tensor* pred, const refign_tensor* gt,
                                         const double* thresholds, size_t n_thresholds, char** csv);
REFIGN_API refign_status refign_eval_aepe(const refign_tensor* pred, const refign_tensor* gt, char** csv);
REFIGN_API refign_status refign_eval_ause(const refign_tensor* pred, const refign_tensor* gt, char** csv);

/* ---- self-training ---------------------------------------------------- */

REFIGN_API refign_status refign_selftrain(const refign_config* cfg, uint64_t seed, refign_run** out);
REFIGN_API refign_status refign_run_metrics_csv(const refign_run* run, char** csv);
/* Final student parameters, f32 [features + 1, classes]. */
REFIGN_API refign_status refign_run_params(const refign_run* run, refign_tensor** out);
/* Held-out target mIoU and prediction diversity of the final student. */
REFIGN_API refign_status refign_run_evaluation(const refign_run* run, double* miou, double* diversity);
REFIGN_API void refign_run_free(refign_run* run);

REFIGN_API refign_status refign_ablation(const refign_config* cfg, uint64_t seed, char** csv);
REFIGN_API refign_status refign_gamma_sweep(const refign_config* cfg, uint64_t seed, const double* gammas,
                                            size_t n_gammas, char** csv);

#ifdef __cplusplus
}
#endif

#endif
