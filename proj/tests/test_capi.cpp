// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
// Exercises the shared library through its C interface only.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "qkprz/qkprz.h"

namespace {

struct Manifold {
  qkprz_manifold* m = nullptr;
  explicit Manifold(const char* ref) { REQUIRE(qkprz_manifold_load(ref, &m) == QKPRZ_OK); }
  ~Manifold() { qkprz_manifold_free(m); }
};

struct Report {
  qkprz_report* r = nullptr;
  ~Report() { qkprz_report_free(r); }
};

nlohmann::json without_wall_time(const char* text) {
  auto j = nlohmann::json::parse(text);
  j.erase("wall_time_s");
  return j;
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("manifold handles") {
  Manifold s4("s4");
  CHECK(std::string(qkprz_manifold_name(s4.m)) == "s4");
  CHECK(qkprz_manifold_lambda(s4.m) == -1);
  const double p[4] = {0.4, 0.1, 0.2, -0.1};
  double k[2];
  REQUIRE(qkprz_eval_k(s4.m, p, k) == QKPRZ_OK);
  CHECK(std::abs(k[1]) < 1e-14);
  double rel = 1;
  REQUIRE(qkprz_prz_residual(s4.m, p, &rel) == QKPRZ_OK);
  CHECK(rel < 1e-9);

  qkprz_manifold* none = nullptr;
  // Not a builtin name, so it is read as a path.
  CHECK(qkprz_manifold_load("k3", &none) == QKPRZ_IO);
  CHECK(none == nullptr);
  CHECK(std::string(qkprz_last_error()).find("k3") != std::string::npos);
  CHECK(qkprz_manifold_load(nullptr, &none) == QKPRZ_INVALID_ARGUMENT);
}

TEST_CASE("zero cosmological constant is rejected with a field path") {
  auto path = write_temp("qkprz_capi_flat.json", R"({"name": "flat", "lambda": 0, "K": "w*wb"})");
  qkprz_manifold* m = nullptr;
  CHECK(qkprz_manifold_load(("file:" + path.string()).c_str(), &m) == QKPRZ_SCHEMA);
  CHECK(std::string(qkprz_last_error()).find("$.lambda") != std::string::npos);
  CHECK(std::string(qkprz_status_name(QKPRZ_SCHEMA)) != "");
  std::filesystem::remove(path);
}

TEST_CASE("last error is per thread") {
  qkprz_manifold* m = nullptr;
  REQUIRE(qkprz_manifold_load("nope", &m) != QKPRZ_OK);
  std::string other;
  std::thread t([&] {
    qkprz_manifold* h = nullptr;
    REQUIRE(qkprz_manifold_load("h4", &h) == QKPRZ_OK);
    other = qkprz_last_error();
    qkprz_manifold_free(h);
  });
  t.join();
  CHECK(other.empty());
  CHECK(std::string(qkprz_last_error()).find("nope") != std::string::npos);
}

TEST_CASE("verify report: pass, schema and accessors") {
  Manifold h4("h4");
  qkprz_options o;
  qkprz_options_init(&o);
  o.samples = 30;
  Report rep;
  REQUIRE(qkprz_run("verify", h4.m, &o, &rep.r) == QKPRZ_OK);
  CHECK(qkprz_report_passed(rep.r) == 1);
  const size_t n = qkprz_report_check_count(rep.r);
  REQUIRE(n >= 4);
  const char* name = nullptr;
  double value = -1, tol = -1;
  int passed = -1;
  REQUIRE(qkprz_report_check(rep.r, 0, &name, &value, &tol, &passed) == QKPRZ_OK);
  CHECK(std::string(name) == "prz_relative");
  CHECK(value < tol);
  CHECK(passed == 1);
  CHECK(qkprz_report_check(rep.r, n, nullptr, nullptr, nullptr, nullptr) == QKPRZ_INVALID_ARGUMENT);

  auto j = nlohmann::json::parse(qkprz_report_json(rep.r));
  CHECK(j["command"] == "verify");
  CHECK(j["manifold"]["name"] == "h4");
  CHECK(j["seed"] == 7);
  CHECK(j["passed"] == true);
  CHECK(j["checks"].size() == n);
  for (const auto& c : j["checks"]) {
    CHECK(c.contains("max_residual"));
    CHECK(c.contains("tolerance"));
    CHECK(c.contains("passed"));
  }
  CHECK(j.contains("wall_time_s"));
  CHECK(std::string(qkprz_report_summary(rep.r)).find("overall: PASS") != std::string::npos);
  CHECK(std::string(qkprz_report_solution_csv(rep.r)).empty());
}

TEST_CASE("reports are deterministic and independent of the job count") {
  Manifold cp2("cp2");
  qkprz_options o;
  qkprz_options_init(&o);
  o.samples = 25;
  Report a, b, c;
  REQUIRE(qkprz_run("lax", cp2.m, &o, &a.r) == QKPRZ_OK);
  REQUIRE(qkprz_run("lax", cp2.m, &o, &b.r) == QKPRZ_OK);
  o.jobs = 4;
  REQUIRE(qkprz_run("lax", cp2.m, &o, &c.r) == QKPRZ_OK);
  const auto ja = without_wall_time(qkprz_report_json(a.r));
  CHECK(ja == without_wall_time(qkprz_report_json(b.r)));
  auto jc = without_wall_time(qkprz_report_json(c.r));
  jc["parameters"]["jobs"] = 1;
  CHECK(ja == jc);
}

TEST_CASE("negative control fails every suite") {
  auto path = write_temp("qkprz_capi_bad.json", R"({"name": "bad", "lambda": 1, "K": "w*wb"})");
  Manifold bad(("file:" + path.string()).c_str());
  qkprz_options o;
  qkprz_options_init(&o);
  o.samples = 20;
  o.grid = 9;
  for (const char* cmd : {"verify", "lax", "extract", "recursion", "perturb", "solve"}) {
    Report r;
    REQUIRE(qkprz_run(cmd, bad.m, &o, &r.r) == QKPRZ_OK);
    CHECK_MESSAGE(qkprz_report_passed(r.r) == 0, cmd);
  }
  std::filesystem::remove(path);
}

TEST_CASE("solve report carries the solution table") {
  Manifold h4("h4");
  qkprz_options o;
  qkprz_options_init(&o);
  o.grid = 9;
  o.noise = 1e-4;
  o.max_iter = 20;
  Report r;
  REQUIRE(qkprz_run("solve", h4.m, &o, &r.r) == QKPRZ_OK);
  const std::string csv = qkprz_report_solution_csv(r.r);
  CHECK(csv.rfind("rho,sigma,K_value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 81);
  auto j = nlohmann::json::parse(qkprz_report_json(r.r));
  CHECK(j["tables"]["newton"]["converged"] == true);
  CHECK(j["tables"]["newton"]["residuals"].back().get<double>() < 1e-11);
}

TEST_CASE("bad options and commands") {
  Manifold s4("s4");
  qkprz_options o;
  qkprz_options_init(&o);
  Report r;
  CHECK(qkprz_run("dance", s4.m, &o, &r.r) == QKPRZ_INVALID_ARGUMENT);
  CHECK(r.r == nullptr);
  o.samples = 0;
  CHECK(qkprz_run("verify", s4.m, &o, &r.r) == QKPRZ_INVALID_ARGUMENT);
  qkprz_options_init(&o);
  o.family = "k3";
  CHECK(qkprz_run("extract", s4.m, &o, &r.r) == QKPRZ_INVALID_ARGUMENT);
  qkprz_options_init(&o);
  o.order = 0;
  CHECK(qkprz_run("perturb", s4.m, &o, &r.r) == QKPRZ_INVALID_ARGUMENT);
}
