/* C interface to the csad library. Every call returns a csad_status; on
 * failure csad_last_error() describes the most recent error on the calling
 * thread. Strings passed in are UTF-8 paths or JSON text and may be NULL
 * where noted. */
#ifndef CSAD_CSAD_H
#define CSAD_CSAD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CSAD_BUILDING_LIBRARY)
#define CSAD_API __declspec(dllexport)
#else
#define CSAD_API __declspec(dllimport)
#endif
#else
#define CSAD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum csad_status {
  CSAD_OK = 0,
  CSAD_INVALID_ARGUMENT = 1,
  CSAD_IO = 2,
  CSAD_BAD_MAGIC = 3,
  CSAD_DIM_MISMATCH = 4,
  CSAD_NON_FINITE = 5,
  CSAD_UNSUPPORTED_FORMAT = 6,
  CSAD_TOO_MANY_CLASSES = 7,
  CSAD_EMPTY_MASK = 8,
  CSAD_EMPTY_SET = 9,
  CSAD_CLASS_ABSENT = 10,
  CSAD_EMPTY_INPUT = 11,
  CSAD_TOO_FEW_POINTS = 12,
  CSAD_ALL_NOISE = 13,
  CSAD_NO_SURVIVING_CLUSTERS = 14,
  CSAD_NO_COMPONENT = 15,
  CSAD_NO_VALID_PLACEMENT = 16,
  CSAD_TOO_FEW_SAMPLES = 17,
  CSAD_TOO_FEW_SCORES = 18,
  CSAD_UNKNOWN_STREAM = 19,
  CSAD_NO_TRAINING_MAPS = 20,
  CSAD_SPEC_INFEASIBLE = 21,
  CSAD_CONFIG = 22,
  CSAD_MISSING_INPUT = 23,
  CSAD_FEATURE_DIM_MISMATCH = 24,
  CSAD_INTERNAL = 25
} csad_status;

typedef struct csad_config csad_config;
typedef struct csad_model csad_model;
typedef struct csad_bank csad_bank;

typedef struct csad_bench_report {
  double latency_ms;
  double throughput_fps;
  int runs;
  int batch_size;
  int warmup;
  double total_time_s;
} csad_bench_report;

CSAD_API const char* csad_version(void);
CSAD_API const char* csad_status_name(csad_status status);
/* Message of the last failed call on this thread; "" when none. */
CSAD_API const char* csad_last_error(void);

/* Configuration: JSON text with optional sections synth, labels, fit, score,
 * bench. NULL or "" selects all defaults. */
CSAD_API csad_status csad_config_parse(const char* json_text, csad_config** out);
CSAD_API csad_status csad_config_load(const char* path, csad_config** out);
CSAD_API csad_status csad_config_set_seed(csad_config* config, uint64_t seed);
CSAD_API csad_status csad_config_set_jobs(csad_config* config, int jobs);
CSAD_API void csad_config_free(csad_config* config);

/* Pipeline stages. */
CSAD_API csad_status csad_synth(const csad_config* config, const char* out_dir);
CSAD_API csad_status csad_gen_labels(const csad_config* config, const char* dataset_dir, const char* out_dir,
                                     int* n_cls_out);
CSAD_API csad_status csad_export_crops(const csad_config* config, const char* dataset_dir, const char* out_dir);
CSAD_API csad_status csad_fit(const csad_config* config, const char* dataset_dir, const char* labels_dir,
                              const char* model_dir);

/* Fitted models. */
CSAD_API csad_status csad_model_open(const char* model_dir, csad_model** out);
CSAD_API void csad_model_close(csad_model* model);
CSAD_API int csad_model_n_cls(const csad_model* model);
CSAD_API size_t csad_model_stream_count(const csad_model* model);
/* Stream names are valid until the model is closed. */
CSAD_API const char* csad_model_stream_name(const csad_model* model, size_t index);

/* Inputs for scoring, localization and benchmarking: explicit image (PPM)
 * files, explicit label-map (PGM) files, or else a dataset split ("train",
 * "test" or "all"), optionally narrowed to one id. Ids are file stems or
 * dataset ids. tensor_manifest NULL
 * falls back to the dataset's own manifest when use_dataset_tensors is set. */
typedef struct csad_inputs {
  const char* dataset_dir;
  const char* split;
  const char* id;
  const char* const* images;
  size_t n_images;
  const char* const* label_maps;
  size_t n_label_maps;
  const char* tensor_manifest;
  int use_dataset_tensors;
} csad_inputs;

/* Scores one image or, when image_path is NULL, one label map. raw receives
 * one score per stream in csad_model_stream_name order; streams without
 * input are NaN. */
CSAD_API csad_status csad_model_score_file(const csad_model* model, const char* image_path, const char* label_path,
                                           const char* tensor_manifest, double* fused, double* raw, size_t raw_len);

/* Writes one JSON object per input to out_jsonl ("-" for stdout). */
CSAD_API csad_status csad_model_score(const csad_model* model, const csad_inputs* inputs, const char* out_jsonl,
                                      int jobs, size_t* count_out);

/* Exactly one input; writes patch_hist, lgst and merged maps under out_dir. */
CSAD_API csad_status csad_model_localize(const csad_model* model, const csad_inputs* inputs, const char* out_dir);

/* Times segmentation plus scoring. out_json may be NULL. */
CSAD_API csad_status csad_model_bench(const csad_model* model, const csad_inputs* inputs, int runs, int batch_size,
                                      int warmup, int jobs, const char* out_json, csad_bench_report* report);

/* Histogram banks over caller-provided samples (row-major n x dim). */
CSAD_API csad_status csad_bank_fit(const double* samples, size_t n, size_t dim, double eps, csad_bank** out);
CSAD_API csad_status csad_bank_score(const csad_bank* bank, const double* h, size_t dim, double* score);
CSAD_API void csad_bank_free(csad_bank* bank);

/* Class histogram of a label map: out[k-1] = fraction of pixels with class k. */
CSAD_API csad_status csad_class_histogram(const uint8_t* pixels, int width, int height, int n_cls, double* out);

CSAD_API csad_status csad_auroc(const double* normal, size_t n_normal, const double* anomalous, size_t n_anomalous,
                                double* out);

#ifdef __cplusplus
}
#endif

#endif /* CSAD_CSAD_H */
