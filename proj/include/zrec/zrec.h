/* C interface to libzrec. All functions returning int give a zrec_status;
 * on failure zrec_last_error() holds a message for the calling thread. */
#ifndef ZREC_ZREC_H
#define ZREC_ZREC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ZREC_BUILDING)
#define ZREC_API __declspec(dllexport)
#else
#define ZREC_API __declspec(dllimport)
#endif
#else
#define ZREC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum zrec_status {
    ZREC_OK = 0,
    ZREC_INVALID_ARGUMENT = 1,
    ZREC_NOT_PRIMITIVE = 2,
    ZREC_DEAD_SYMBOL = 3,
    ZREC_SIZE_OVERFLOW = 4,
    ZREC_EIGEN_FAILURE = 5,
    ZREC_NOT_CENTERED = 6,
    ZREC_SINGULAR_SOLVE = 7,
    ZREC_RANGE_OVERFLOW = 8,
    ZREC_ZERO_MEASURE = 9,
    ZREC_CAP_TOO_SMALL = 10,
    ZREC_EMPTY_SAMPLE = 11,
    ZREC_DEGENERATE_X = 12,
    ZREC_CONFIG_INVALID = 13,
    ZREC_UNKNOWN_PRESET = 14,
    ZREC_DEGENERATE = 15,
    ZREC_PERIODIC = 16,
    ZREC_IO = 17,
    ZREC_INTERNAL = 18
} zrec_status;

typedef struct zrec_model zrec_model;
typedef struct zrec_system zrec_system;

typedef enum zrec_verdict { ZREC_VERDICT_PASS = 0, ZREC_VERDICT_FAIL = 1 } zrec_verdict;

ZREC_API const char* zrec_version(void);
ZREC_API const char* zrec_status_name(int status);
ZREC_API const char* zrec_last_error(void);

/* Strings handed out by the library; release with zrec_free_string. */
ZREC_API void zrec_free_string(char* s);

/* transitions: row-major n*n 0/1 matrix. potential: n^depth values indexed by
 * the word w_0..w_{depth-1} read as a base-n number (w_0 most significant);
 * entries for inadmissible words are ignored. */
ZREC_API int zrec_model_create(int alphabet, const int* transitions, int depth, const double* potential,
                               zrec_model** out);
/* json: the "model" object of a config. */
ZREC_API int zrec_model_from_json(const char* json, zrec_model** out);
ZREC_API void zrec_model_free(zrec_model* model);

ZREC_API int zrec_model_pressure(const zrec_model* model, double* out);
ZREC_API int zrec_model_entropy(const zrec_model* model, double* out);
ZREC_API int zrec_model_state_count(const zrec_model* model, size_t* out);
/* Writes state_count values. */
ZREC_API int zrec_model_stationary(const zrec_model* model, double* out, size_t capacity);
/* word: symbols 0..n-1 occupying coordinates -q..q'. */
ZREC_API int zrec_cylinder_measure(const zrec_model* model, int q, int q_prime, const int* word, double* out);

/* json: a config with "model" and "system" objects. */
ZREC_API int zrec_system_from_json(const char* json, zrec_system** out);
ZREC_API void zrec_system_free(zrec_system* system);
ZREC_API int zrec_system_sigma2(const zrec_system* system, double* sigma2_phi, double* sigma2_flow);
/* out[0..4]: lambda_u, lambda_s, entropy of the flow, mean roof, dimension. */
ZREC_API int zrec_system_lyapunov(const zrec_system* system, double out[5]);

ZREC_API int zrec_limit_survival(double sigma, double t, double* out);

typedef struct zrec_run_options {
    int has_seed;
    uint64_t seed;
    const char* output; /* NULL keeps the config's output */
    unsigned threads;   /* 0: hardware concurrency */
    int write_files;
} zrec_run_options;

/* Runs an experiment config. *report receives the report JSON. */
ZREC_API int zrec_run_config(const char* json, const zrec_run_options* options, char** report, int* verdict);
ZREC_API int zrec_preset(const char* name, char** json);
ZREC_API const char* zrec_schema(void);

#ifdef __cplusplus
}
#endif

#endif
