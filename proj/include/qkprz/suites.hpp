// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qkprz/expr.hpp"

namespace qkprz {

struct SuiteOptions {
  int samples = 200;
  uint64_t seed = 7;
  double tol = 0;  // <= 0 keeps the headline check's default tolerance
  int grid = 17;
  double noise = 1e-2;
  double contour_radius = 1.0;
  int order = 4;  // Laurent half-width of the contour test series
  int jobs = 1;
  int max_iter = 8;
  std::string family;  // twistor family; empty selects one from the manifold
};

// A pass/fail measurement. Upper-bound checks pass when the largest value is at most the
// tolerance; lower-bound checks pass when the smallest value exceeds it.
struct Check {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool lower_bound = false;
  bool passed = false;
  int samples = 0;
  int errors = 0;
  std::string detail;
};

// A measured quantity that is reported but does not decide the outcome.
struct Observation {
  std::string name;
  double value = 0;
  std::string detail;
};

struct RunReport {
  std::string command;
  ManifoldSpec manifold;
  std::string family;
  SuiteOptions options;
  std::vector<Check> checks;
  std::vector<Observation> observations;
  nlohmann::ordered_json tables = nlohmann::ordered_json::object();
  std::string solution_csv;  // solve only: rho,sigma,K_value
  double wall_time = 0;

  bool passed() const;
  std::vector<std::string> failing() const;
  nlohmann::ordered_json to_json() const;
  std::string summary() const;  // fixed-width table, one check per line
};

// verify, lax, extract, recursion, perturb, solve, or report (all of them).
// Numerical failures inside a suite become failed checks; only bad options throw.
RunReport run_suite(std::string_view command, const ManifoldSpec& spec, const SuiteOptions& options);

const std::vector<std::string>& suite_names();

}  // namespace qkprz
