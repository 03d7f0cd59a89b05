// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/qkprz.h"

#include <cmath>
#include <memory>
#include <string>

#include "qkprz/operators.hpp"
#include "qkprz/suites.hpp"

struct qkprz_manifold {
  qkprz::ManifoldSpec spec;
};

struct qkprz_report {
  qkprz::RunReport report;
  std::string json, summary;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, std::string message) {
  g_last_error = std::move(message);
  return code;
}

// Runs body and maps exceptions to status codes; nothing escapes the C boundary.
template <class F>
int guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return QKPRZ_OK;
  } catch (const qkprz::Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(QKPRZ_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QKPRZ_INTERNAL, e.what());
  } catch (...) {
    return fail(QKPRZ_INTERNAL, "unknown exception");
  }
}

qkprz::Point4 slice_point(const qkprz::ManifoldSpec& spec, const double* p) {
  qkprz::Point4 x = spec.point({p[0], p[1]}, {p[2], p[3]});
  x.lambda = spec.lambda;
  return x;
}

}  // namespace

extern "C" {

const char* qkprz_version(void) { return "1.0.0"; }

const char* qkprz_last_error(void) { return g_last_error.c_str(); }

const char* qkprz_status_name(int status) { return qkprz::error_code_name(static_cast<qkprz::ErrorCode>(status)); }

void qkprz_options_init(qkprz_options* o) {
  if (!o) return;
  const qkprz::SuiteOptions d;
  o->samples = d.samples;
  o->seed = d.seed;
  o->tol = d.tol;
  o->grid = d.grid;
  o->noise = d.noise;
  o->contour_radius = d.contour_radius;
  o->order = d.order;
  o->jobs = d.jobs;
  o->max_iter = d.max_iter;
  o->family = nullptr;
}

int qkprz_manifold_load(const char* ref, qkprz_manifold** out) {
  if (!ref || !out) return fail(QKPRZ_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new qkprz_manifold{qkprz::load_manifold(ref)}; });
}

void qkprz_manifold_free(qkprz_manifold* m) { delete m; }

const char* qkprz_manifold_name(const qkprz_manifold* m) { return m ? m->spec.name.c_str() : ""; }

const char* qkprz_manifold_k_source(const qkprz_manifold* m) { return m ? m->spec.k_source.c_str() : ""; }

double qkprz_manifold_lambda(const qkprz_manifold* m) { return m ? m->spec.lambda : NAN; }

int qkprz_eval_k(const qkprz_manifold* m, const double point[4], double out[2]) {
  if (!m || !point || !out) return fail(QKPRZ_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const qkprz::cplx k = qkprz::eval_value(m->spec.k_expr, slice_point(m->spec, point));
    out[0] = k.real();
    out[1] = k.imag();
  });
}

int qkprz_prz_residual(const qkprz_manifold* m, const double point[4], double* relative) {
  if (!m || !point || !relative) return fail(QKPRZ_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *relative = qkprz::prz_residual(m->spec, slice_point(m->spec, point)).relative; });
}

int qkprz_run(const char* command, const qkprz_manifold* m, const qkprz_options* options, qkprz_report** out) {
  if (!command || !m || !out) return fail(QKPRZ_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    qkprz::SuiteOptions o;
    if (options) {
      o.samples = options->samples;
      o.seed = options->seed;
      o.tol = options->tol;
      o.grid = options->grid;
      o.noise = options->noise;
      o.contour_radius = options->contour_radius;
      o.order = options->order;
      o.jobs = options->jobs;
      o.max_iter = options->max_iter;
      o.family = options->family ? options->family : "";
    }
    auto r = std::make_unique<qkprz_report>();
    r->report = qkprz::run_suite(command, m->spec, o);
    r->json = r->report.to_json().dump(2);
    r->summary = r->report.summary();
    *out = r.release();
  });
}

void qkprz_report_free(qkprz_report* r) { delete r; }

int qkprz_report_passed(const qkprz_report* r) { return r && r->report.passed() ? 1 : 0; }

size_t qkprz_report_check_count(const qkprz_report* r) { return r ? r->report.checks.size() : 0; }

int qkprz_report_check(const qkprz_report* r, size_t index, const char** name, double* value, double* tolerance,
                       int* passed) {
  if (!r) return fail(QKPRZ_INVALID_ARGUMENT, "null report");
  if (index >= r->report.checks.size()) return fail(QKPRZ_INVALID_ARGUMENT, "check index out of range");
  const qkprz::Check& c = r->report.checks[index];
  if (name) *name = c.name.c_str();
  if (value) *value = c.value;
  if (tolerance) *tolerance = c.tolerance;
  if (passed) *passed = c.passed ? 1 : 0;
  return QKPRZ_OK;
}

const char* qkprz_report_json(const qkprz_report* r) { return r ? r->json.c_str() : ""; }

const char* qkprz_report_summary(const qkprz_report* r) { return r ? r->summary.c_str() : ""; }

const char* qkprz_report_solution_csv(const qkprz_report* r) { return r ? r->report.solution_csv.c_str() : ""; }

}  // extern "C"
