/* Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0. */
#ifndef QKPRZ_QKPRZ_H_
#define QKPRZ_QKPRZ_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QKPRZ_API __declspec(dllexport)
#else
#define QKPRZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returning int returns one of these; on failure the message is
   available from qkprz_last_error() on the calling thread. */
enum {
  QKPRZ_OK = 0,
  QKPRZ_INVALID_ARGUMENT = 1,
  QKPRZ_SINGULAR_POINT = 2,
  QKPRZ_BRANCH_POINT = 3,
  QKPRZ_INSUFFICIENT_ORDER = 4,
  QKPRZ_PARSE = 5,
  QKPRZ_EVALUATION = 6,
  QKPRZ_DEGENERATE_METRIC = 7,
  QKPRZ_GAUGE_SINGULARITY = 8,
  QKPRZ_FRAME_DEGENERACY = 9,
  QKPRZ_GAUGE_MISMATCH = 10,
  QKPRZ_EXTRACTION_DOMAIN = 11,
  QKPRZ_INTEGRABILITY_VIOLATION = 12,
  QKPRZ_POLE_ON_CONTOUR = 13,
  QKPRZ_REDUCTION_INCONSISTENCY = 14,
  QKPRZ_SINGULAR_JACOBIAN = 15,
  QKPRZ_NOT_CONVERGED = 16,
  QKPRZ_SCHEMA = 17,
  QKPRZ_IO = 18,
  QKPRZ_INTERNAL = 99
};

typedef struct qkprz_manifold qkprz_manifold;
typedef struct qkprz_report qkprz_report;

typedef struct qkprz_options {
  int samples;
  uint64_t seed;
  double tol; /* <= 0: per-check default */
  int grid;
  double noise;
  double contour_radius;
  int order;
  int jobs;
  int max_iter;
  const char* family; /* NULL or "": chosen from the manifold */
} qkprz_options;

QKPRZ_API const char* qkprz_version(void);
QKPRZ_API const char* qkprz_last_error(void);
QKPRZ_API const char* qkprz_status_name(int status);

QKPRZ_API void qkprz_options_init(qkprz_options* options);

/* Builtin name (s4, h4, cp2, bergmann), "file:<path>" or a path to a JSON description. */
QKPRZ_API int qkprz_manifold_load(const char* ref, qkprz_manifold** out);
QKPRZ_API void qkprz_manifold_free(qkprz_manifold* manifold);
QKPRZ_API const char* qkprz_manifold_name(const qkprz_manifold* manifold);
QKPRZ_API const char* qkprz_manifold_k_source(const qkprz_manifold* manifold);
QKPRZ_API double qkprz_manifold_lambda(const qkprz_manifold* manifold);

/* Points are (w, z) on the real slice, as re/im pairs: {Re w, Im w, Re z, Im z}. */
QKPRZ_API int qkprz_eval_k(const qkprz_manifold* manifold, const double point[4], double out_re_im[2]);
QKPRZ_API int qkprz_prz_residual(const qkprz_manifold* manifold, const double point[4], double* relative);

/* Runs a suite: verify, lax, extract, recursion, perturb, solve, or report. */
QKPRZ_API int qkprz_run(const char* command, const qkprz_manifold* manifold, const qkprz_options* options,
                        qkprz_report** out);
QKPRZ_API void qkprz_report_free(qkprz_report* report);
QKPRZ_API int qkprz_report_passed(const qkprz_report* report);
QKPRZ_API size_t qkprz_report_check_count(const qkprz_report* report);
/* Any of the out pointers may be NULL. The name stays valid while the report lives. */
QKPRZ_API int qkprz_report_check(const qkprz_report* report, size_t index, const char** name, double* value,
                                 double* tolerance, int* passed);
/* Strings owned by the report. The JSON is pretty-printed with two-space indentation. */
QKPRZ_API const char* qkprz_report_json(const qkprz_report* report);
QKPRZ_API const char* qkprz_report_summary(const qkprz_report* report);
/* rho,sigma,K_value rows of the converged solve; empty for other commands. */
QKPRZ_API const char* qkprz_report_solution_csv(const qkprz_report* report);

#ifdef __cplusplus
}
#endif

#endif /* QKPRZ_QKPRZ_H_ */
