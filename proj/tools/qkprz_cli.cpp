// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
// Command-line front end. Talks to the library only through the C interface.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qkprz/qkprz.h"

namespace {

constexpr int kExitPass = 0, kExitFail = 1, kExitUsage = 2;

struct Args {
  std::string manifold, family, out, csv;
  qkprz_options opt{};
};

struct ManifoldDeleter {
  void operator()(qkprz_manifold* m) const { qkprz_manifold_free(m); }
};
struct ReportDeleter {
  void operator()(qkprz_report* r) const { qkprz_report_free(r); }
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--manifold", a.manifold, "builtin name (s4, h4, cp2, bergmann) or file:<path> to a JSON spec");
  cmd->add_option("--family", a.family, "twistor line family (s4, h4, cp2, bergmann)");
  cmd->add_option("--samples", a.opt.samples, "random domain points per check")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.opt.seed, "sampling and perturbation seed");
  cmd->add_option("--tol", a.opt.tol, "tolerance of the headline check (default per suite)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--grid", a.opt.grid, "solver nodes per axis")->check(CLI::Range(5, 257));
  cmd->add_option("--noise", a.opt.noise, "amplitude of the seeded start perturbation")->check(CLI::NonNegativeNumber);
  cmd->add_option("--contour-radius", a.opt.contour_radius, "radius of the xi contour")->check(CLI::PositiveNumber);
  cmd->add_option("--order", a.opt.order, "Laurent half-width of the contour test series")->check(CLI::Range(1, 30));
  cmd->add_option("--jobs", a.opt.jobs, "worker threads for sample-level work")->check(CLI::Range(1, 256));
  cmd->add_option("--max-iter", a.opt.max_iter, "Newton iteration budget")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "JSON report path (default qkprz-<command>.json)");
  cmd->add_option("--csv", a.csv, "solution CSV path for solve/report (default: report path with .csv)");
}

bool write_file(const std::string& path, const char* text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  return bool(f);
}

std::string csv_path(const Args& a) {
  if (!a.csv.empty()) return a.csv;
  const auto dot = a.out.rfind('.');
  const auto slash = a.out.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return a.out.substr(0, dot) + ".csv";
  return a.out + ".csv";
}

int execute(const std::string& command, Args& a) {
  if (a.manifold.empty()) a.manifold = a.family;
  if (a.manifold.empty()) {
    std::fprintf(stderr, "error: %s needs --manifold (or --family)\n", command.c_str());
    return kExitUsage;
  }
  if (a.out.empty()) a.out = "qkprz-" + command + ".json";
  a.opt.family = a.family.empty() ? nullptr : a.family.c_str();

  qkprz_manifold* raw = nullptr;
  if (qkprz_manifold_load(a.manifold.c_str(), &raw) != QKPRZ_OK) {
    std::fprintf(stderr, "error: cannot load manifold '%s': %s\n", a.manifold.c_str(), qkprz_last_error());
    return kExitUsage;
  }
  std::unique_ptr<qkprz_manifold, ManifoldDeleter> manifold(raw);

  qkprz_report* rep_raw = nullptr;
  if (int st = qkprz_run(command.c_str(), manifold.get(), &a.opt, &rep_raw); st != QKPRZ_OK) {
    std::fprintf(stderr, "error: %s (%s)\n", qkprz_last_error(), qkprz_status_name(st));
    return kExitUsage;
  }
  std::unique_ptr<qkprz_report, ReportDeleter> report(rep_raw);

  std::fputs(qkprz_report_summary(report.get()), stdout);
  if (!write_file(a.out, qkprz_report_json(report.get()))) {
    std::fprintf(stderr, "error: cannot write %s\n", a.out.c_str());
    return kExitUsage;
  }
  const char* csv = qkprz_report_solution_csv(report.get());
  if (*csv) {
    const std::string path = csv_path(a);
    if (!write_file(path, csv)) {
      std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
      return kExitUsage;
    }
    std::printf("solution: %s\n", path.c_str());
  }
  std::printf("report: %s\n", a.out.c_str());

  if (qkprz_report_passed(report.get())) return kExitPass;
  std::string names;
  for (size_t i = 0, n = qkprz_report_check_count(report.get()); i < n; ++i) {
    const char* name = nullptr;
    int passed = 1;
    qkprz_report_check(report.get(), i, &name, nullptr, nullptr, &passed);
    if (!passed) names += (names.empty() ? "" : ", ") + std::string(name);
  }
  std::fprintf(stderr, "failing checks: %s\n", names.c_str());
  return kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification suites for Przanowski functions of quaternion-Kaehler four-manifolds", "qkprz"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qkprz_version());

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"verify", "field equation, Einstein condition, curvature, conformal Laplacian, Lax commutator"},
      {"lax", "Lax pair commutator, closed-form reconstruction and contact annihilation"},
      {"extract", "Przanowski function from the contact form on twistor lines"},
      {"recursion", "recursion relations and integrability of Laurent coefficients"},
      {"perturb", "linearised equation, gauge kernel and the contour integral"},
      {"solve", "Newton solve on the reduced grid and discretisation order"},
      {"report", "all suites in one report"}};
  std::vector<Args> args(commands.size());
  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < commands.size(); ++i) {
    qkprz_options_init(&args[i].opt);
    CLI::App* sub = app.add_subcommand(commands[i].first, commands[i].second);
    add_common(sub, args[i]);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) return execute(commands[i].first, args[i]);
  return kExitUsage;
}
