/* Copyright 2026 The cotloop Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the cotloop library. Objects are opaque handles released
 * with the matching *_free function. Every call returns a cotloop_status;
 * on failure cotloop_last_error() describes the problem for the calling
 * thread. Strings returned through char** are owned by the caller and must
 * be released with cotloop_string_free().
 */

#ifndef COTLOOP_COTLOOP_H_
#define COTLOOP_COTLOOP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COTLOOP_API __declspec(dllexport)
#else
#define COTLOOP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cotloop_status {
  COTLOOP_OK = 0,
  COTLOOP_E_INVALID_ARGUMENT = 1,
  COTLOOP_E_OVERFLOW = 2,
  COTLOOP_E_OUT_OF_RANGE = 3,
  COTLOOP_E_PARSE = 4,
  COTLOOP_E_VALIDATION = 5,
  COTLOOP_E_CYCLE = 6,
  COTLOOP_E_ARITY = 7,
  COTLOOP_E_FAN_IN = 8,
  COTLOOP_E_WIDTH = 9,
  COTLOOP_E_BUDGET = 10,
  COTLOOP_E_BUDGET_TOO_SMALL = 11,
  COTLOOP_E_MARGIN_VIOLATED = 12,
  COTLOOP_E_CAP_EXCEEDED = 13,
  COTLOOP_E_DEAD_END = 14,
  COTLOOP_E_EMPTY_SOLUTION_SET = 15,
  COTLOOP_E_ALL_REJECTED = 16,
  COTLOOP_E_ZERO_PATH = 17,
  COTLOOP_E_CONSISTENCY = 18,
  COTLOOP_E_SUPPORT_MISMATCH = 19,
  COTLOOP_E_IO = 20,
  COTLOOP_E_BUFFER_TOO_SMALL = 21,
  COTLOOP_E_INTERNAL = 99
} cotloop_status;

typedef struct cotloop_graph cotloop_graph;
typedef struct cotloop_circuit cotloop_circuit;
typedef struct cotloop_program cotloop_program;
typedef struct cotloop_relation cotloop_relation;

COTLOOP_API const char* cotloop_version(void);
COTLOOP_API const char* cotloop_status_name(cotloop_status status);
/* Message of the last failed call on this thread; "" if none. */
COTLOOP_API const char* cotloop_last_error(void);
COTLOOP_API void cotloop_string_free(char* s);

/* Graphs */
COTLOOP_API cotloop_status cotloop_graph_from_json(const char* json, cotloop_graph** out);
COTLOOP_API cotloop_status cotloop_graph_load(const char* path, cotloop_graph** out);
COTLOOP_API void cotloop_graph_free(cotloop_graph* g);
COTLOOP_API cotloop_status cotloop_graph_validate(const cotloop_graph* g, int fan_in_cap);
/* Symbols are alphabet indices. *out_len receives the output count. */
COTLOOP_API cotloop_status cotloop_graph_evaluate(const cotloop_graph* g, const int* x, size_t n, int* out,
                                                  size_t out_cap, size_t* out_len);
/* JSON {size, depth, steps, loops, parallel_space}. */
COTLOOP_API cotloop_status cotloop_graph_info(const cotloop_graph* g, char** json_out);

/* Threshold circuits */
COTLOOP_API cotloop_status cotloop_circuit_from_json(const char* json, cotloop_circuit** out);
COTLOOP_API void cotloop_circuit_free(cotloop_circuit* c);
COTLOOP_API cotloop_status cotloop_circuit_evaluate(const cotloop_circuit* c, const int* bits, size_t n, int* out);

/* Compilation. layout_json may be NULL. */
COTLOOP_API cotloop_status cotloop_compile_cot(const cotloop_graph* g, int fan_in_cap, cotloop_program** out,
                                               char** layout_json);
COTLOOP_API cotloop_status cotloop_compile_loop(const cotloop_graph* g, int fan_in_cap, size_t width,
                                                cotloop_program** out, char** layout_json);
COTLOOP_API cotloop_status cotloop_compile_circuit(const cotloop_circuit* c, int constant_bit,
                                                   cotloop_program** out, char** layout_json);

/* Programs */
COTLOOP_API cotloop_status cotloop_program_from_json(const char* json, cotloop_program** out);
COTLOOP_API cotloop_status cotloop_program_to_json(const cotloop_program* p, char** json_out);
COTLOOP_API void cotloop_program_free(cotloop_program* p);
/* Steps (CoT) or loops (looped) the program needs. */
COTLOOP_API size_t cotloop_program_budget(const cotloop_program* p);
/* x holds vocabulary indices. budget < 0 uses the declared budget; a smaller
 * budget fails with COTLOOP_E_BUDGET_TOO_SMALL. */
COTLOOP_API cotloop_status cotloop_program_run(const cotloop_program* p, const int* x, size_t n, long long budget,
                                               int* out, size_t out_cap, size_t* out_len);

/* Relations: JSON instance or DIMACS CNF text. */
COTLOOP_API cotloop_status cotloop_relation_parse(const char* text, cotloop_relation** out);
COTLOOP_API void cotloop_relation_free(cotloop_relation* r);
COTLOOP_API cotloop_status cotloop_relation_brute_count(const cotloop_relation* r, uint64_t* out);

typedef struct cotloop_sampler_config {
  double gamma;
  double alpha;
  double delta;
  double epsilon;
  uint64_t seed;
  size_t samples;
  int estimated_p; /* 0: p from the brute count, 1: from the count estimate */
} cotloop_sampler_config;

COTLOOP_API cotloop_sampler_config cotloop_sampler_config_default(void);
/* Sampler report as JSON. */
COTLOOP_API cotloop_status cotloop_sample(const cotloop_relation* r, const cotloop_sampler_config* cfg,
                                          char** report_json);
COTLOOP_API cotloop_status cotloop_count_estimate(const cotloop_relation* r, const cotloop_sampler_config* cfg,
                                                  double* out);

/* Batch commands: compile, run, verify, sample, count, selfcheck. config_json
 * and the result are JSON objects. */
COTLOOP_API cotloop_status cotloop_command(const char* command, const char* config_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* COTLOOP_COTLOOP_H_ */
